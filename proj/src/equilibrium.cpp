#include "ohg/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"
#include "ohg/rng.hpp"

namespace ohg {

using nlohmann::json;

DeviationFamily DeviationFamily::defaults_for(double lambda) {
  DeviationFamily f;
  const int n = 64;
  const double lo = 0.01, hi = 20.0;
  for (int i = 0; i < n; ++i) {
    const double x = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
    f.deterministic_grid.push_back(x / lambda);
    f.exponential_grid.push_back(lambda / x);
  }
  std::sort(f.exponential_grid.begin(), f.exponential_grid.end());
  f.include_never = true;
  return f;
}

void DeviationFamily::check_valid() const {
  if (deterministic_grid.empty() && exponential_grid.empty() && mixture_grid.empty() &&
      !include_never)
    throw std::invalid_argument("deviation family is empty");
  for (double t : deterministic_grid)
    if (!(t > 0.0)) throw std::invalid_argument("deterministic grid entries must be positive");
  for (double m : exponential_grid)
    if (!(m > 0.0)) throw std::invalid_argument("exponential grid entries must be positive");
  for (const auto& [tau, w] : mixture_grid) {
    if (!(tau > 0.0)) throw std::invalid_argument("mixture tau must be positive");
    if (!(w >= 0.0 && w <= 1.0))
      throw std::invalid_argument("mixture weight must lie in [0, 1]");
  }
}

std::vector<FamilyMember> enumerate_family(const DeviationFamily& family) {
  family.check_valid();
  std::vector<FamilyMember> out;
  auto det = family.deterministic_grid;
  std::sort(det.begin(), det.end());
  for (double tau : det)
    out.push_back({"deterministic(" + format_double(tau) + ")",
                   DelayDistribution::point(tau)});
  auto exp_grid = family.exponential_grid;
  std::sort(exp_grid.begin(), exp_grid.end());
  for (double mu : exp_grid)
    out.push_back({"exponential(" + format_double(mu) + ")",
                   DelayDistribution::exponential_rate(mu)});
  for (const auto& [tau, w] : family.mixture_grid) {
    DelayDistribution d;
    if (w > 0.0) d.atoms.push_back({tau, w});
    d.never_mass = 1.0 - w;
    out.push_back({"mixture(" + format_double(tau) + "," + format_double(w) + ")",
                   std::move(d)});
  }
  if (family.include_never) out.push_back({"never", DelayDistribution::never()});
  return out;
}

BestResponseResult best_markov_response(const DelayDistribution& opponent,
                                        const DeviationFamily& family,
                                        const GameParams& params) {
  const auto members = enumerate_family(family);
  BestResponseResult best;
  bool have = false;
  for (std::size_t i = 0; i < members.size(); ++i) {
    double value;
    try {
      value = markov_value(members[i].dist, opponent, params);
    } catch (const DivergentValueError&) {
      ++best.divergent_members;
      continue;
    }
    if (!have || value > best.value) {
      have = true;
      best.family_index = i;
      best.label = members[i].label;
      best.dist = members[i].dist;
      best.value = value;
    }
  }
  if (!have) throw DivergentValueError("every family member diverges");
  return best;
}

namespace {

// Golden-section maximum of f over [lo, hi] in log coordinates.
template <typename F>
double golden_max(F f, double lo, double hi) {
  double a = std::log(lo), b = std::log(hi);
  constexpr double phi = 0.6180339887498949;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(std::exp(x1)), f2 = f(std::exp(x2));
  for (int i = 0; i < 70; ++i) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(std::exp(x2));
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(std::exp(x1));
    }
  }
  return std::max(f1, f2);
}

}  // namespace

double refined_best_response_value(const DelayDistribution& opponent,
                                   const DeviationFamily& family,
                                   const GameParams& params) {
  const BestResponseResult best = best_markov_response(opponent, family, params);
  auto det = family.deterministic_grid;
  std::sort(det.begin(), det.end());
  auto exps = family.exponential_grid;
  std::sort(exps.begin(), exps.end());

  auto safe_value = [&](const DelayDistribution& d) {
    try {
      return markov_value(d, opponent, params);
    } catch (const DivergentValueError&) {
      return -std::numeric_limits<double>::infinity();
    }
  };
  auto bracket = [](const std::vector<double>& grid, std::size_t i) {
    const double lo = i > 0 ? grid[i - 1] : grid[i] * 0.5;
    const double hi = i + 1 < grid.size() ? grid[i + 1] : grid[i] * 2.0;
    return std::pair{lo, hi};
  };

  double refined = best.value;
  if (best.family_index < det.size()) {
    const auto [lo, hi] = bracket(det, best.family_index);
    refined = std::max(refined, golden_max(
                                    [&](double tau) {
                                      return safe_value(DelayDistribution::point(tau));
                                    },
                                    lo, hi));
  } else if (best.family_index < det.size() + exps.size()) {
    const auto [lo, hi] = bracket(exps, best.family_index - det.size());
    refined = std::max(
        refined, golden_max(
                     [&](double mu) {
                       return safe_value(DelayDistribution::exponential_rate(mu));
                     },
                     lo, hi));
  }
  return refined;
}

VerificationReport verify_mpe(const DelayDistribution& f1, const DelayDistribution& f2,
                              const DeviationFamily& family, const GameParams& params,
                              double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  VerificationReport rep;
  rep.epsilon = epsilon;
  rep.candidate_value1 = markov_value(f1, f2, params);
  rep.candidate_value2 = markov_value(f2, f1, params.swapped());
  rep.best1 = best_markov_response(f2, family, params);
  rep.best2 = best_markov_response(f1, family, params.swapped());
  rep.gap1 = rep.best1.value - rep.candidate_value1;
  rep.gap2 = rep.best2.value - rep.candidate_value2;
  rep.confirmed = rep.gap1 <= epsilon && rep.gap2 <= epsilon;
  return rep;
}

namespace {

json response_json(const BestResponseResult& b) {
  return json{{"label", b.label},
              {"family_index", b.family_index},
              {"value", b.value},
              {"divergent_members", b.divergent_members}};
}

}  // namespace

std::string VerificationReport::to_json_text() const {
  json j{{"schema_version", 1},
         {"verdict", confirmed ? "confirmed" : "refuted"},
         {"epsilon", epsilon},
         {"player1", {{"candidate_value", candidate_value1},
                      {"best_deviation", response_json(best1)},
                      {"gap", gap1}}},
         {"player2", {{"candidate_value", candidate_value2},
                      {"best_deviation", response_json(best2)},
                      {"gap", gap2}}}};
  return j.dump(2);
}

ProbeReport probe_nonmarkov_deviations(const DelayDistribution& f1,
                                       const DelayDistribution& f2,
                                       const std::vector<Strategy>& probes,
                                       const DeviationFamily& family,
                                       const GameParams& params, const SimConfig& cfg,
                                       double epsilon, int threads) {
  (void)f1;  // the candidate's own distribution is replaced by each probe
  ProbeReport rep;
  rep.epsilon = epsilon;
  rep.reference_value = best_markov_response(f2, family, params).value;
  rep.max_estimate = -std::numeric_limits<double>::infinity();
  const Strategy opponent = Strategy::stationary(f2);
  for (std::size_t i = 0; i < probes.size(); ++i) {
    SimConfig probe_cfg = cfg;
    probe_cfg.master_seed = derive_seed(cfg.master_seed, i);
    const BatchStats stats =
        simulate_batch(probes[i], opponent, params, probe_cfg, threads);
    ProbeOutcome out;
    out.spec = probes[i].spec_text();
    out.estimate = stats.mean1;
    out.se = stats.se1;
    out.master_seed = probe_cfg.master_seed;
    out.exceeds = stats.mean1 > rep.reference_value + epsilon + 3.0 * stats.se1;
    rep.any_exceedance |= out.exceeds;
    rep.max_estimate = std::max(rep.max_estimate, stats.mean1);
    rep.probes.push_back(std::move(out));
  }
  if (rep.probes.empty()) rep.max_estimate = 0.0;
  return rep;
}

std::string ProbeReport::to_json_text(const GameParams& params,
                                      const SimConfig& cfg) const {
  json jprobes = json::array();
  for (const auto& p : probes) {
    jprobes.push_back(json{{"strategy", json::parse(p.spec)},
                           {"estimate", p.estimate},
                           {"se", p.se},
                           {"master_seed", p.master_seed},
                           {"exceeds", p.exceeds}});
  }
  json j{{"schema_version", 1},
         {"reference_value", reference_value},
         {"epsilon", epsilon},
         {"max_estimate", max_estimate},
         {"any_exceedance", any_exceedance},
         {"probes", jprobes},
         {"reproduction",
          {{"params",
            {{"r", params.r},
             {"lambda", params.lambda},
             {"c1", params.cost1},
             {"c2", params.cost2},
             {"v1", params.v_finder},
             {"v2", params.v_other}}},
           {"sim",
            {{"horizon", cfg.horizon},
             {"budget", cfg.budget},
             {"replications", cfg.replications},
             {"master_seed", cfg.master_seed}}}}}};
  return j.dump(2);
}

ExtractionResult extract_markov_eps_best_response(const Strategy& s1,
                                                  const DelayDistribution& f2,
                                                  const GameParams& params,
                                                  const SimConfig& cfg) {
  cfg.check_valid();
  const Strategy opponent = Strategy::stationary(f2);

  bool have = false;
  double best_lambda = 0.0;
  DelayDistribution best_dist;
  std::size_t sampled = 0;
  auto consider = [&](const History& h) {
    const DelayDistribution dist = s1.next_distribution(h);
    const double lr = lambda_ratio(dist, f2, params);
    ++sampled;
    if (!have || lr > best_lambda) {
      have = true;
      best_lambda = lr;
      best_dist = dist;
    }
  };

  // Sampled histories: every materialized prefix of simulated plays, capped.
  constexpr std::size_t kMaxSampled = 200000;
  for (std::uint64_t rep = 0; rep < cfg.replications && sampled < kMaxSampled; ++rep) {
    const PlayResult res =
        sample_play(s1, opponent, params, cfg, derive_seed(cfg.master_seed, rep));
    History prefix;
    consider(prefix);
    for (const auto& seg : res.play.history.segments()) {
      const auto* ex = std::get_if<ExplicitSegment>(&seg);
      if (!ex) break;  // cascade positions are enumerated below instead
      for (const auto& rec : ex->recs) {
        prefix.append(rec.time, rec.attempted, rec.actual);
        consider(prefix);
        if (sampled >= kMaxSampled) break;
      }
      if (sampled >= kMaxSampled) break;
    }
  }

  // Cascade enumeration for schedule strategies: positions inside the first
  // few cascades and just past their limits.
  if (s1.cascade_info(History{})) {
    constexpr int kCascades = 4;
    constexpr std::uint64_t kSteps = 200;
    History base;
    for (int k = 0; k < kCascades; ++k) {
      consider(base);  // position at the start of cascade k
      History walk = base;
      const RatioForm form{static_cast<double>(k), 1.0};
      for (std::uint64_t n = 1; n <= kSteps; ++n) {
        walk.append(form.time_at(n), PlayerSet::p1, PlayerSet::p1);
        consider(walk);
      }
      base.open_cascade(form, 1, PlayerSet::p1, PlayerSet::p1);
      base.close_limit(form.supremum());
    }
  }

  ExtractionResult out;
  out.histories_sampled = sampled;
  if (!have) {
    out.strategy = Strategy::never();
    out.value = 0.0;
    out.max_lambda = 0.0;
    return out;
  }
  out.max_lambda = best_lambda;
  out.strategy = s1.is_markov() ? s1 : Strategy::stationary(best_dist);
  out.value = markov_value(s1.is_markov() ? s1.stationary_distribution() : best_dist, f2,
                           params);
  return out;
}

std::vector<Strategy> default_probe_battery(double lambda, std::size_t count) {
  const double t = 1.0 / lambda;  // natural delay scale
  std::vector<Strategy> all;
  for (double s : {0.5, 1.0, 2.0, 4.0}) {
    all.push_back(Strategy::reactive("constant", {{"tau", s * t}}));
    all.push_back(Strategy::reactive(
        "winner_dependent",
        {{"p1_delay", 1.5 * s * t}, {"p2_delay", 0.5 * s * t}, {"initial", s * t}}));
    all.push_back(Strategy::reactive(
        "tie_shy", {{"base", s * t}, {"after_tie", 2.5 * s * t}}));
    all.push_back(Strategy::reactive("gap_ramp", {{"base", 0.5 * s * t},
                                                  {"slope", 0.5},
                                                  {"lo", 0.25 * s * t},
                                                  {"hi", 4.0 * s * t}}));
    all.push_back(Strategy::reactive("preempt_fraction", {{"fraction", 0.9 / s},
                                                          {"lo", 0.2 * s * t},
                                                          {"hi", 5.0 * t}}));
  }
  if (count < all.size())
    all.erase(all.begin() + static_cast<std::ptrdiff_t>(count), all.end());
  return all;
}

}  // namespace ohg
