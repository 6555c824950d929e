#pragma once

#include <cstdint>
#include <string>

#include "ohg/params.hpp"
#include "ohg/strategy.hpp"

namespace ohg {

struct SimConfig {
  double horizon = 1e4;               // absolute time cutoff
  std::uint64_t budget = 100000;      // max inspection events per play
  std::uint64_t replications = 10000;
  std::uint64_t master_seed = 1;

  void check_valid() const;
};

struct PlayResult {
  Play play;
  double payoff1 = 0.0;
  double payoff2 = 0.0;
  std::uint64_t rng_trace_len = 0;  // uniform draws consumed
};

/// One seeded play under (s1, s2), built by the successor-step recursion:
/// both players redraw after every inspection event, the earlier absolute
/// time wins, exact atom ties are broken by a fair coin with both players in
/// the attempted set, and each inspection finds the prize with probability
/// 1 - exp(-lambda * gap). Draw order per step is fixed: player-1 delay,
/// player-2 delay, tie coin when needed, prize check. When event times
/// stagnate (gap < 1e-9) and the winning strategy is schedule-form, the
/// matching explicit suffix is rewritten as a closed cascade and the play
/// continues past the limit ordinal. Deterministic given the seed.
PlayResult sample_play(const Strategy& s1, const Strategy& s2, const GameParams& params,
                       const SimConfig& cfg, std::uint64_t seed);

/// Realized discounted payoff along a play: -c * exp(-r t) at each of the
/// player's own actual inspections (a symbolic cascade tail sums to -inf for
/// positive cost), plus exp(-r t*) times v_finder or v_other at discovery.
double realized_payoff(const Play& play, const GameParams& params, int player);

struct BatchStats {
  std::uint64_t replications = 0;
  double mean1 = 0.0, se1 = 0.0;
  double mean2 = 0.0, se2 = 0.0;
  double discovery_rate = 0.0;
  double truncation_rate = 0.0;

  /// Header plus one data row; fixed column order
  /// replications,mean1,se1,mean2,se2,discovery_rate,truncation_rate.
  std::string to_csv() const;
};

/// Replication i uses derive_seed(cfg.master_seed, i); the reduction is a
/// fixed-order compensated sum, so results do not depend on thread count.
BatchStats simulate_batch(const Strategy& s1, const Strategy& s2,
                          const GameParams& params, const SimConfig& cfg,
                          int threads = 1);

}  // namespace ohg
