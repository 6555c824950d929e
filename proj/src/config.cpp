#include "ohg/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "ohg/rng.hpp"

namespace ohg {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& what) {
  throw ConfigError("config field '" + field + "': " + what);
}

double get_number(const json& j, const std::string& field) {
  if (!j.is_number()) bad(field, "expected a number");
  return j.get<double>();
}

std::uint64_t get_uint(const json& j, const std::string& field) {
  if (!j.is_number_unsigned()) bad(field, "expected a non-negative integer");
  return j.get<std::uint64_t>();
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok |= it.key() == k;
    if (!ok) bad(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
  }
}

Strategy parse_strategy(const json& spec, const std::string& where) {
  if (!spec.is_object()) bad(where, "expected an object");
  if (!spec.contains("kind")) bad(where + ".kind", "missing");
  const std::string kind = spec.at("kind").get<std::string>();
  try {
    if (kind == "never") {
      reject_unknown(spec, {"kind"}, where);
      return Strategy::never();
    }
    if (kind == "deterministic") {
      reject_unknown(spec, {"kind", "tau"}, where);
      if (!spec.contains("tau")) bad(where + ".tau", "missing");
      return Strategy::deterministic(get_number(spec.at("tau"), where + ".tau"));
    }
    if (kind == "exponential") {
      reject_unknown(spec, {"kind", "mu"}, where);
      if (!spec.contains("mu")) bad(where + ".mu", "missing");
      return Strategy::exponential(get_number(spec.at("mu"), where + ".mu"));
    }
    if (kind == "mixture") {
      reject_unknown(spec, {"kind", "components"}, where);
      if (!spec.contains("components") || !spec.at("components").is_array())
        bad(where + ".components", "expected an array");
      std::vector<std::pair<double, Strategy>> parts;
      std::size_t i = 0;
      for (const auto& comp : spec.at("components")) {
        const std::string cwhere = where + ".components[" + std::to_string(i++) + "]";
        if (!comp.is_object() || !comp.contains("weight"))
          bad(cwhere + ".weight", "missing");
        json inner = comp;
        inner.erase("weight");
        parts.emplace_back(get_number(comp.at("weight"), cwhere + ".weight"),
                           parse_strategy(inner, cwhere));
      }
      return Strategy::mixture(std::move(parts));
    }
    if (kind == "zeno") {
      reject_unknown(spec, {"kind"}, where);
      return Strategy::zeno_schedule();
    }
    if (kind == "reactive") {
      reject_unknown(spec, {"kind", "rule", "params"}, where);
      if (!spec.contains("rule")) bad(where + ".rule", "missing");
      std::map<std::string, double> params;
      if (spec.contains("params")) {
        for (auto it = spec.at("params").begin(); it != spec.at("params").end(); ++it)
          params[it.key()] = get_number(it.value(), where + ".params." + it.key());
      }
      return Strategy::reactive(spec.at("rule").get<std::string>(), params);
    }
  } catch (const std::invalid_argument& e) {
    bad(where, e.what());
  }
  bad(where + ".kind", "unknown strategy kind '" + kind + "'");
}

}  // namespace

RunConfig default_config() { return RunConfig{}; }

RunConfig load_config_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root,
                 {"schema_version", "params", "strategies", "sim", "family", "epsilon",
                  "output"},
                 "");

  RunConfig cfg;
  bool family_given = false;
  bool epsilon_given = false;

  if (root.contains("params")) {
    const json& p = root.at("params");
    reject_unknown(p, {"r", "lambda", "c", "c1", "c2", "v1", "v2"}, "params");
    if (p.contains("r")) cfg.params.r = get_number(p.at("r"), "params.r");
    if (p.contains("lambda"))
      cfg.params.lambda = get_number(p.at("lambda"), "params.lambda");
    if (p.contains("c")) {
      const double c = get_number(p.at("c"), "params.c");
      cfg.params.cost1 = cfg.params.cost2 = c;
    }
    if (p.contains("c1")) cfg.params.cost1 = get_number(p.at("c1"), "params.c1");
    if (p.contains("c2")) cfg.params.cost2 = get_number(p.at("c2"), "params.c2");
    if (p.contains("v1")) cfg.params.v_finder = get_number(p.at("v1"), "params.v1");
    if (p.contains("v2")) cfg.params.v_other = get_number(p.at("v2"), "params.v2");
    if (!(cfg.params.lambda > 0.0)) bad("params.lambda", "must be positive");
    if (!(cfg.params.r >= 0.0)) bad("params.r", "must be non-negative");
    if (!(cfg.params.cost1 >= 0.0)) bad("params.c1", "must be non-negative");
    if (!(cfg.params.cost2 >= 0.0)) bad("params.c2", "must be non-negative");
  }

  if (root.contains("strategies")) {
    const json& s = root.at("strategies");
    reject_unknown(s, {"player1", "player2"}, "strategies");
    if (s.contains("player1"))
      cfg.strategy1 = parse_strategy(s.at("player1"), "strategies.player1");
    if (s.contains("player2"))
      cfg.strategy2 = parse_strategy(s.at("player2"), "strategies.player2");
  }

  if (root.contains("sim")) {
    const json& s = root.at("sim");
    reject_unknown(s, {"horizon", "budget", "replications", "master_seed"}, "sim");
    if (s.contains("horizon")) cfg.sim.horizon = get_number(s.at("horizon"), "sim.horizon");
    if (s.contains("budget")) cfg.sim.budget = get_uint(s.at("budget"), "sim.budget");
    if (s.contains("replications"))
      cfg.sim.replications = get_uint(s.at("replications"), "sim.replications");
    if (s.contains("master_seed"))
      cfg.sim.master_seed = get_uint(s.at("master_seed"), "sim.master_seed");
    if (!(cfg.sim.horizon > 0.0)) bad("sim.horizon", "must be positive");
    if (cfg.sim.budget < 1) bad("sim.budget", "must be at least 1");
    if (cfg.sim.replications < 1) bad("sim.replications", "must be at least 1");
  }

  if (root.contains("family")) {
    family_given = true;
    const json& f = root.at("family");
    reject_unknown(f, {"deterministic", "exponential", "include_never", "mixture"},
                   "family");
    cfg.family = DeviationFamily{};
    if (f.contains("deterministic")) {
      for (const auto& v : f.at("deterministic"))
        cfg.family.deterministic_grid.push_back(
            get_number(v, "family.deterministic"));
    }
    if (f.contains("exponential")) {
      for (const auto& v : f.at("exponential"))
        cfg.family.exponential_grid.push_back(get_number(v, "family.exponential"));
    }
    if (f.contains("include_never")) {
      if (!f.at("include_never").is_boolean()) bad("family.include_never", "expected a bool");
      cfg.family.include_never = f.at("include_never").get<bool>();
    }
    if (f.contains("mixture")) {
      for (const auto& v : f.at("mixture")) {
        if (!v.is_array() || v.size() != 2) bad("family.mixture", "expected [tau, weight] pairs");
        cfg.family.mixture_grid.emplace_back(get_number(v[0], "family.mixture.tau"),
                                             get_number(v[1], "family.mixture.weight"));
      }
    }
    try {
      cfg.family.check_valid();
    } catch (const std::invalid_argument& e) {
      bad("family", e.what());
    }
  }
  if (!family_given) cfg.family = DeviationFamily::defaults_for(cfg.params.lambda);

  if (root.contains("epsilon")) {
    epsilon_given = true;
    const json& e = root.at("epsilon");
    if (e.is_string() && e.get<std::string>() == "inf") {
      cfg.epsilon = std::numeric_limits<double>::infinity();
    } else {
      cfg.epsilon = get_number(e, "epsilon");
      if (!(cfg.epsilon > 0.0)) bad("epsilon", "must be positive");
    }
  }
  if (!epsilon_given) {
    const double v1 = std::abs(cfg.params.v_finder);
    cfg.epsilon = v1 > 0.0 ? 1e-3 * v1 : 1e-3;
  }

  if (root.contains("output")) {
    const json& o = root.at("output");
    reject_unknown(o, {"format"}, "output");
    if (o.contains("format")) {
      cfg.format = o.at("format").get<std::string>();
      if (cfg.format != "csv" && cfg.format != "json")
        bad("output.format", "expected 'csv' or 'json'");
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return load_config_text(buf.str());
}

std::string RunConfig::effective_json() const {
  json family_j{{"deterministic", family.deterministic_grid},
                {"exponential", family.exponential_grid},
                {"include_never", family.include_never},
                {"mixture", json::array()}};
  for (const auto& [tau, w] : family.mixture_grid)
    family_j["mixture"].push_back(json::array({tau, w}));
  json j{{"schema_version", 1},
         {"params",
          {{"r", params.r},
           {"lambda", params.lambda},
           {"c1", params.cost1},
           {"c2", params.cost2},
           {"v1", params.v_finder},
           {"v2", params.v_other}}},
         {"strategies",
          {{"player1", json::parse(strategy1.spec_text())},
           {"player2", json::parse(strategy2.spec_text())}}},
         {"sim",
          {{"horizon", sim.horizon},
           {"budget", sim.budget},
           {"replications", sim.replications},
           {"master_seed", sim.master_seed}}},
         {"family", family_j},
         {"epsilon",
          std::isinf(epsilon) ? json("inf") : json(epsilon)},
         {"output", {{"format", format}}}};
  return j.dump();
}

namespace {

struct Sink {
  std::ostream& fallback;
  std::string path;

  void write(const std::string& text) const {
    if (path.empty()) {
      fallback << text;
      return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ConfigError("cannot open output file '" + path + "'");
    f << text;
  }
};

DelayDistribution require_markov(const Strategy& s, const char* who) {
  if (!s.is_markov())
    throw ConfigError(std::string(who) + " must be a Markov (stationary) strategy here");
  return s.stationary_distribution();
}

int do_simulate(const RunConfig& cfg, const RunOptions& opts, const Sink& sink,
                std::ostream& out) {
  const BatchStats stats = simulate_batch(cfg.strategy1, cfg.strategy2, cfg.params,
                                          cfg.sim, opts.threads);
  std::string artifact;
  if (cfg.format == "json") {
    json j{{"schema_version", 1},
           {"replications", stats.replications},
           {"mean1", stats.mean1},
           {"se1", stats.se1},
           {"mean2", stats.mean2},
           {"se2", stats.se2},
           {"discovery_rate", stats.discovery_rate},
           {"truncation_rate", stats.truncation_rate}};
    artifact = j.dump(2) + "\n";
  } else {
    artifact = stats.to_csv();
  }
  sink.write(artifact);
  if (opts.trace_count > 0) {
    std::string traces;
    for (std::uint64_t i = 0; i < opts.trace_count && i < cfg.sim.replications; ++i) {
      const std::uint64_t seed = derive_seed(cfg.sim.master_seed, i);
      const PlayResult res =
          sample_play(cfg.strategy1, cfg.strategy2, cfg.params, cfg.sim, seed);
      traces += "PLAY\t" + std::to_string(i) + "\t" + std::to_string(seed) + "\n";
      traces += serialize(res.play);
    }
    if (sink.path.empty())
      out << traces;
    else
      Sink{out, sink.path + ".traces"}.write(traces);
  }
  return kExitOk;
}

int do_evaluate(const RunConfig& cfg, const Sink& sink) {
  const DelayDistribution f1 = require_markov(cfg.strategy1, "strategies.player1");
  const DelayDistribution f2 = require_markov(cfg.strategy2, "strategies.player2");
  const PayoffReport rep = evaluate(f1, f2, cfg.params);
  sink.write(to_json_text(rep) + "\n");
  return kExitOk;
}

int do_verify(const RunConfig& cfg, const Sink& sink) {
  const DelayDistribution f1 = require_markov(cfg.strategy1, "strategies.player1");
  const DelayDistribution f2 = require_markov(cfg.strategy2, "strategies.player2");
  const VerificationReport rep =
      verify_mpe(f1, f2, cfg.family, cfg.params, cfg.epsilon);
  json j = json::parse(rep.to_json_text());
  j["reproduction"] = {{"params",
                        {{"r", cfg.params.r},
                         {"lambda", cfg.params.lambda},
                         {"c1", cfg.params.cost1},
                         {"c2", cfg.params.cost2},
                         {"v1", cfg.params.v_finder},
                         {"v2", cfg.params.v_other}}},
                       {"strategies",
                        {{"player1", json::parse(cfg.strategy1.spec_text())},
                         {"player2", json::parse(cfg.strategy2.spec_text())}}}};
  sink.write(j.dump(2) + "\n");
  return rep.confirmed ? kExitOk : kExitRefuted;
}

int do_respond(const RunConfig& cfg, const Sink& sink) {
  const DelayDistribution f2 = require_markov(cfg.strategy2, "strategies.player2");
  const BestResponseResult best = best_markov_response(f2, cfg.family, cfg.params);
  const ExtractionResult extraction =
      extract_markov_eps_best_response(cfg.strategy1, f2, cfg.params, cfg.sim);
  json j{{"schema_version", 1},
         {"best_response",
          {{"label", best.label},
           {"family_index", best.family_index},
           {"value", best.value},
           {"divergent_members", best.divergent_members}}},
         {"extraction",
          {{"strategy", json::parse(extraction.strategy.spec_text())},
           {"value", extraction.value},
           {"max_lambda", extraction.max_lambda},
           {"histories_sampled", extraction.histories_sampled}}}};
  sink.write(j.dump(2) + "\n");
  return kExitOk;
}

int do_demo_zeno(const RunConfig& cfg, const RunOptions& opts, const Sink& sink,
                 std::ostream& out) {
  const History fixture = zeno_example_history();
  const std::string text = serialize(fixture);
  const double c = cfg.params.cost1;
  const double r = cfg.params.r;
  json cascades = json::array();
  for (const auto& seg : fixture.segments()) {
    const auto& cas = std::get<CascadeSegment>(seg);
    cascades.push_back(json{{"limit_index", cas.limit_index.to_string()},
                            {"limit_time", cas.limit_time},
                            {"cost_term_at_limit", c * std::exp(-r * cas.limit_time)}});
  }
  // Per-inspection discounted costs c * exp(-r u_n) approach a positive
  // constant within each cascade, so the expected-cost series diverges
  // whenever c > 0.
  json j{{"schema_version", 1},
         {"serialized_history", text},
         {"cost", c},
         {"r", r},
         {"cascades", cascades},
         {"cost_series_term_lower_bound", c * std::exp(-r * 2.0)},
         {"divergent_expected_cost", c > 0.0}};
  if (!opts.out_path.empty()) {
    sink.write(text);  // raw fixture bytes for bit-exact comparisons
    out << j.dump(2) << "\n";
  } else {
    out << j.dump(2) << "\n";
  }
  return kExitOk;
}

}  // namespace

int run_command(const std::string& command, RunConfig cfg, const RunOptions& opts,
                std::ostream& out, std::ostream& err) {
  try {
    if (opts.seed) cfg.sim.master_seed = *opts.seed;
    if (opts.replications) {
      if (*opts.replications < 1) throw ConfigError("--replications must be at least 1");
      cfg.sim.replications = *opts.replications;
    }
    if (opts.format) {
      if (*opts.format != "csv" && *opts.format != "json")
        throw ConfigError("--format must be csv or json");
      cfg.format = *opts.format;
    }
    err << "effective-config\t" << cfg.effective_json() << "\n";
    const Sink sink{out, opts.out_path};
    if (command == "simulate") return do_simulate(cfg, opts, sink, out);
    if (command == "evaluate") return do_evaluate(cfg, sink);
    if (command == "verify") return do_verify(cfg, sink);
    if (command == "respond") return do_respond(cfg, sink);
    if (command == "demo-zeno") return do_demo_zeno(cfg, opts, sink, out);
    err << "unknown command '" << command << "'\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
}

}  // namespace ohg
