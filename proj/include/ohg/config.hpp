#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ohg/engine.hpp"
#include "ohg/equilibrium.hpp"

namespace ohg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One validated run description: game parameters, both players' strategies,
/// simulation settings, the deviation family, and output shape. Loading fills
/// every default; effective_json() echoes the result so a run can be
/// reproduced from its echo alone.
struct RunConfig {
  GameParams params = GameParams::make(0.0, 1.0, 0.1, 1.0, 0.0);
  Strategy strategy1 = Strategy::never();
  Strategy strategy2 = Strategy::never();
  SimConfig sim;
  DeviationFamily family = DeviationFamily::defaults_for(1.0);
  double epsilon = 1e-3;
  std::string format = "csv";  // csv | json (simulate output)

  std::string effective_json() const;
};

RunConfig default_config();
/// Throws ConfigError with a field-level diagnostic on any problem.
RunConfig load_config_text(const std::string& text);
RunConfig load_config(const std::string& path);

struct RunOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> replications;
  std::optional<std::string> format;
  std::string out_path;           // primary artifact file; empty writes to `out`
  std::uint64_t trace_count = 0;  // simulate: number of plays to serialize
  int threads = 1;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRefuted = 3;

/// Dispatches simulate | evaluate | verify | respond | demo-zeno. The
/// effective config is echoed to `err` as one `effective-config<TAB>{json}`
/// line; the primary artifact goes to out_path or `out`. Returns the exit
/// status (0 success, 2 validation failure, 3 refuted verdict).
int run_command(const std::string& command, RunConfig cfg, const RunOptions& opts,
                std::ostream& out, std::ostream& err);

}  // namespace ohg
