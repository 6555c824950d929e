#include <cmath>

#include "doctest.h"
#include "ohg/equilibrium.hpp"
#include "ohg/rng.hpp"

using namespace ohg;

namespace {

DeviationFamily small_family() {
  DeviationFamily f;
  f.deterministic_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  f.exponential_grid = {0.4, 0.8, 1.6};
  f.mixture_grid = {{1.0, 0.5}};
  f.include_never = true;
  return f;
}

}  // namespace

TEST_SUITE_BEGIN("equilibrium");

TEST_CASE("family enumeration order fixes the tie break") {
  DeviationFamily f;
  f.deterministic_grid = {2.0, 0.5};  // deliberately unsorted
  f.exponential_grid = {1.5, 0.3};
  f.mixture_grid = {{1.0, 0.4}};
  f.include_never = true;
  const auto members = enumerate_family(f);
  REQUIRE(members.size() == 6);
  CHECK(members[0].label == "deterministic(0.5)");
  CHECK(members[1].label == "deterministic(2)");
  CHECK(members[2].label == "exponential(0.3)");
  CHECK(members[3].label == "exponential(1.5)");
  CHECK(members[4].label.substr(0, 7) == "mixture");
  CHECK(members[5].label == "never");
}

TEST_CASE("best response is the exhaustive argmax") {
  SplitMix64 rng(17);
  for (int i = 0; i < 20; ++i) {
    const GameParams p =
        GameParams::make(0.4 * rng.next_unit(), 0.3 + 2.0 * rng.next_unit(),
                         rng.next_unit(), 2.0 * rng.next_unit(), rng.next_unit());
    DelayDistribution opp;
    if (rng.next_unit() < 0.5)
      opp = DelayDistribution::point(0.3 + 1.5 * rng.next_unit());
    else
      opp = DelayDistribution::exponential_rate(0.4 + rng.next_unit());
    const DeviationFamily fam = small_family();
    const BestResponseResult best = best_markov_response(opp, fam, p);
    const auto members = enumerate_family(fam);
    std::size_t first_max = members.size();
    double max_val = -1e300;
    for (std::size_t m = 0; m < members.size(); ++m) {
      const double v = markov_value(members[m].dist, opp, p);
      CHECK(v <= best.value + 1e-12);
      if (v > max_val) {
        max_val = v;
        first_max = m;
      }
    }
    CHECK(best.value == max_val);
    CHECK(best.family_index == first_max);
  }
}

TEST_CASE("degenerate one-member family returns that member") {
  DeviationFamily f;
  f.deterministic_grid = {0.7};
  f.include_never = false;
  const GameParams p = GameParams::make(0.1, 1.0, 0.5, 1.0, 0.2);
  const BestResponseResult best =
      best_markov_response(DelayDistribution::never(), f, p);
  CHECK(best.label == "deterministic(0.7)");
}

TEST_CASE("inspecting against never is a pure loss when c > v1") {
  const GameParams p = GameParams::make(0.1, 1.0, 1.5, 1.0, 0.0);  // c > v1, v2 = 0
  const BestResponseResult best =
      best_markov_response(DelayDistribution::never(), small_family(), p);
  CHECK(best.label == "never");
  CHECK(best.value == 0.0);
}

TEST_CASE("free inspections against never are always worth taking") {
  const GameParams p = GameParams::make(0.2, 1.0, 0.0, 1.0, 0.0);  // c = 0, v1 > 0
  DeviationFamily f;
  f.deterministic_grid = {0.25, 0.5, 1.0, 2.0, 4.0};
  f.include_never = false;
  const auto members = enumerate_family(f);
  for (const auto& m : members)
    CHECK(markov_value(m.dist, DelayDistribution::never(), p) > 0.0);
  const BestResponseResult best =
      best_markov_response(DelayDistribution::never(), f, p);
  CHECK(best.value > 0.0);
}

TEST_CASE("verify_mpe: never/never confirmed when inspecting cannot pay") {
  SplitMix64 rng(23);
  for (int i = 0; i < 10; ++i) {
    const double v1 = 0.2 + rng.next_unit();
    const GameParams p = GameParams::make(0.4 * rng.next_unit(),
                                          0.3 + 2.0 * rng.next_unit(),
                                          v1 + 0.1 + rng.next_unit(), v1, 0.0);
    const VerificationReport rep =
        verify_mpe(DelayDistribution::never(), DelayDistribution::never(),
                   small_family(), p, 1e-9);
    CHECK(rep.confirmed);
    CHECK(rep.gap1 <= 1e-9);
    CHECK(rep.gap2 <= 1e-9);
  }
}

TEST_CASE("verify_mpe: free profitable inspections refute never") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.0, 1.0, 0.0);
  const VerificationReport rep =
      verify_mpe(DelayDistribution::never(), DelayDistribution::point(1.0),
                 small_family(), p, 1e-3);
  CHECK_FALSE(rep.confirmed);
  CHECK(rep.gap1 > 1e-3);  // player 1 profits by inspecting
}

TEST_CASE("verify_mpe: infinite epsilon always confirms") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.0, 1.0, 0.0);
  const VerificationReport rep =
      verify_mpe(DelayDistribution::never(), DelayDistribution::point(1.0),
                 small_family(), p, std::numeric_limits<double>::infinity());
  CHECK(rep.confirmed);
}

TEST_CASE("verdict equals the gap comparison") {
  SplitMix64 rng(29);
  for (int i = 0; i < 20; ++i) {
    const GameParams p =
        GameParams::make(0.3 * rng.next_unit(), 0.4 + 1.5 * rng.next_unit(),
                         0.6 * rng.next_unit(), 0.3 + rng.next_unit(),
                         0.5 * rng.next_unit());
    const DelayDistribution f1 = DelayDistribution::point(0.4 + rng.next_unit());
    const DelayDistribution f2 = DelayDistribution::point(0.4 + rng.next_unit());
    const double eps = 1e-3 + 0.1 * rng.next_unit();
    const VerificationReport rep = verify_mpe(f1, f2, small_family(), p, eps);
    CHECK(rep.confirmed == (rep.gap1 <= eps && rep.gap2 <= eps));
    CHECK(rep.gap1 == rep.best1.value - rep.candidate_value1);
    CHECK(rep.gap2 == rep.best2.value - rep.candidate_value2);
  }
}

TEST_CASE("payoff scaling leaves responses and verdicts unchanged") {
  const GameParams p = GameParams::make(0.15, 1.1, 0.3, 1.2, 0.4);
  GameParams scaled = p;  // k = 2: exact in floating point
  scaled.cost1 *= 2.0;
  scaled.cost2 *= 2.0;
  scaled.v_finder *= 2.0;
  scaled.v_other *= 2.0;
  const DelayDistribution opp = DelayDistribution::point(0.8);
  const auto members = enumerate_family(small_family());
  for (const auto& m : members)
    CHECK(markov_value(m.dist, opp, scaled) == 2.0 * markov_value(m.dist, opp, p));
  const BestResponseResult a = best_markov_response(opp, small_family(), p);
  const BestResponseResult b = best_markov_response(opp, small_family(), scaled);
  CHECK(a.family_index == b.family_index);
  CHECK(b.value == 2.0 * a.value);

  const DelayDistribution f1 = DelayDistribution::point(0.9);
  const VerificationReport va = verify_mpe(f1, opp, small_family(), p, 1e-3);
  const VerificationReport vb = verify_mpe(f1, opp, small_family(), scaled, 2e-3);
  CHECK(va.confirmed == vb.confirmed);
}

TEST_CASE("probing a Markov rule in disguise recovers its value") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.2, 1.0, 0.3);
  const DelayDistribution f2 = DelayDistribution::point(0.9);
  const Strategy disguised = Strategy::reactive("constant", {{"tau", 0.7}});
  SimConfig cfg;
  cfg.replications = 20000;
  cfg.master_seed = 808;
  const ProbeReport rep = probe_nonmarkov_deviations(
      DelayDistribution::point(0.7), f2, {disguised}, small_family(), p, cfg, 1e-3, 2);
  REQUIRE(rep.probes.size() == 1);
  const double truth = markov_value(DelayDistribution::point(0.7), f2, p);
  CHECK(std::abs(rep.probes[0].estimate - truth) <= 3.0 * rep.probes[0].se);
}

TEST_CASE("empty probe list gives an empty report") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.2, 1.0, 0.3);
  const ProbeReport rep = probe_nonmarkov_deviations(
      DelayDistribution::point(0.7), DelayDistribution::point(0.9), {}, small_family(),
      p, SimConfig{}, 1e-3);
  CHECK(rep.probes.empty());
  CHECK_FALSE(rep.any_exceedance);
}

TEST_CASE("probe report carries a reproduction bundle") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.2, 1.0, 0.3);
  SimConfig cfg;
  cfg.replications = 200;
  cfg.master_seed = 91;
  const ProbeReport rep = probe_nonmarkov_deviations(
      DelayDistribution::point(0.7), DelayDistribution::point(0.9),
      default_probe_battery(1.0, 3), small_family(), p, cfg, 1e-3);
  const std::string text = rep.to_json_text(p, cfg);
  CHECK(text.find("\"master_seed\"") != std::string::npos);
  CHECK(text.find("\"reproduction\"") != std::string::npos);
  CHECK(text.find("\"rule\"") != std::string::npos);
}

TEST_CASE("extraction from a Markov strategy is the identity") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.2, 1.0, 0.3);
  const Strategy s1 = Strategy::mixture(
      {{0.6, Strategy::deterministic(0.8)}, {0.4, Strategy::exponential(1.2)}});
  SimConfig cfg;
  cfg.replications = 50;
  const DelayDistribution f2 = DelayDistribution::point(1.1);
  const ExtractionResult res = extract_markov_eps_best_response(s1, f2, p, cfg);
  CHECK(res.strategy.is_markov());
  CHECK(DelayDistribution::approx_equal(res.strategy.stationary_distribution(),
                                        s1.stationary_distribution(), 0.0));
  CHECK(res.value ==
        doctest::Approx(markov_value(s1.stationary_distribution(), f2, p)));
}

TEST_CASE("extraction from the zeno schedule picks the widest cascade step") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.2, 1.0, 0.0);
  SimConfig cfg;
  cfg.replications = 30;
  cfg.budget = 50;
  const ExtractionResult res = extract_markov_eps_best_response(
      Strategy::zeno_schedule(), DelayDistribution::never(), p, cfg);
  // cascade-step oracle: the per-cycle ratio of an atom delta against never
  // is -c + (1 - e^{-lambda delta}) v1, increasing in delta; the schedule's
  // widest step is the initial half-unit delay.
  const Strategy z = Strategy::zeno_schedule();
  double best = -1e300;
  History walk;
  const RatioForm form{0.0, 1.0};
  for (std::uint64_t n = 0; n <= 200; ++n) {
    if (n > 0) walk.append(form.time_at(n), PlayerSet::p1, PlayerSet::p1);
    best = std::max(best,
                    lambda_ratio(z.next_distribution(walk), DelayDistribution::never(), p));
  }
  CHECK(res.max_lambda == doctest::Approx(best).epsilon(1e-12));
  REQUIRE(res.strategy.is_markov());
  CHECK(DelayDistribution::approx_equal(res.strategy.stationary_distribution(),
                                        DelayDistribution::point(0.5), 1e-12));
  CHECK(res.max_lambda ==
        doctest::Approx(lambda_ratio(res.strategy.stationary_distribution(),
                                     DelayDistribution::never(), p)));
}

TEST_CASE("extraction from never degenerates cleanly") {
  const GameParams p = GameParams::make(0.1, 1.0, 0.5, 1.0, 0.0);
  SimConfig cfg;
  cfg.replications = 10;
  const ExtractionResult res = extract_markov_eps_best_response(
      Strategy::never(), DelayDistribution::never(), p, cfg);
  CHECK(res.strategy.is_markov());
  CHECK(res.strategy.stationary_distribution().never_mass == 1.0);
  CHECK(res.value == 0.0);
}

TEST_CASE("local refinement never falls below the grid optimum") {
  SplitMix64 rng(37);
  for (int i = 0; i < 10; ++i) {
    const GameParams p =
        GameParams::make(0.3 * rng.next_unit(), 0.4 + 1.5 * rng.next_unit(),
                         0.4 * rng.next_unit(), 0.4 + rng.next_unit(),
                         0.3 * rng.next_unit());
    const DelayDistribution opp = DelayDistribution::point(0.5 + rng.next_unit());
    const DeviationFamily fam = small_family();
    const double grid = best_markov_response(opp, fam, p).value;
    const double refined = refined_best_response_value(opp, fam, p);
    CHECK(refined >= grid);
    // the refined point is still a genuine Markov value: a fine sweep around
    // the grid cannot beat it by more than the sweep's own resolution error
    double sweep = grid;
    for (double tau = 0.02; tau < 20.0; tau *= 1.002)
      sweep = std::max(sweep, markov_value(DelayDistribution::point(tau), opp, p));
    // the value of deterministic(tau) jumps at the opponent's atom, and the
    // supremum may sit just below it: probe the preemption boundary directly
    const double b = opp.atoms.front().delay;
    sweep = std::max(sweep,
                     markov_value(DelayDistribution::point(b * (1.0 - 1e-12)), opp, p));
    for (double mu = 0.02; mu < 20.0; mu *= 1.002)
      sweep = std::max(sweep,
                       markov_value(DelayDistribution::exponential_rate(mu), opp, p));
    CHECK(refined <= sweep + 1e-4);
  }
}

TEST_CASE("default probe battery is bounded and non-Markov") {
  const auto probes = default_probe_battery(1.3, 20);
  CHECK(probes.size() == 20);
  for (const auto& s : probes) {
    CHECK_FALSE(s.is_markov());
    const DelayDistribution d = s.next_distribution(History{});
    CHECK_NOTHROW(d.check_valid());
  }
}

TEST_SUITE_END();
