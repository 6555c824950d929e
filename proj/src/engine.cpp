#include "ohg/engine.hpp"

#include <cmath>
#include <thread>
#include <vector>

#include "ohg/rng.hpp"

namespace ohg {

namespace {

constexpr double kStagnationGap = 1e-9;
constexpr double kSpliceTol = 1e-12;

struct KahanSum {
  double sum = 0.0;
  double comp = 0.0;
  void add(double x) {
    const double y = x - comp;
    const double t = sum + y;
    comp = (t - sum) - y;
    sum = t;
  }
};

}  // namespace

void SimConfig::check_valid() const {
  if (!(horizon > 0.0)) throw std::invalid_argument("horizon must be positive");
  if (budget < 1) throw std::invalid_argument("budget must be at least 1");
  if (replications < 1) throw std::invalid_argument("replications must be at least 1");
}

PlayResult sample_play(const Strategy& s1, const Strategy& s2, const GameParams& params,
                       const SimConfig& cfg, std::uint64_t seed) {
  params.check_valid();
  cfg.check_valid();
  SplitMix64 rng(seed);
  std::uint64_t draws = 0;
  auto u = [&] {
    ++draws;
    return rng.next_unit();
  };

  Play play;
  History& h = play.history;
  std::uint64_t events = 0;
  while (true) {
    if (events >= cfg.budget) {
      play.truncated = true;
      break;
    }
    const DelayDistribution d1 = s1.next_distribution(h);
    const DelayDistribution d2 = s2.next_distribution(h);
    const double now = h.final_time();
    const double delay1 = d1.sample(u());
    const double delay2 = d2.sample(u());
    if (std::isinf(delay1) && std::isinf(delay2)) {
      play.tail_infinite = true;
      break;
    }
    int winner;
    PlayerSet attempted;
    double gap;
    if (delay1 == delay2) {  // exact atom tie
      attempted = PlayerSet::both;
      winner = u() < 0.5 ? 1 : 2;
      gap = delay1;
    } else if (delay1 < delay2) {
      winner = 1;
      attempted = PlayerSet::p1;
      gap = delay1;
    } else {
      winner = 2;
      attempted = PlayerSet::p2;
      gap = delay2;
    }
    const double t_next = now + gap;
    if (t_next > cfg.horizon) {
      play.truncated = true;
      break;
    }
    const bool hit = u() < -std::expm1(-params.lambda * (t_next - now));
    h.append(t_next, attempted, singleton(winner));
    ++events;
    if (hit) {
      play.discovery = Discovery{winner, t_next};
      break;
    }
    // A Zeno accumulation can only be crossed when the generating strategy
    // declares its cascade in closed form; otherwise the budget truncates.
    if (gap < kStagnationGap && attempted != PlayerSet::both) {
      const Strategy& ws = winner == 1 ? s1 : s2;
      if (auto form = ws.cascade_info(h)) {
        h.try_splice_cascade(*form, singleton(winner), singleton(winner), kSpliceTol);
      }
    }
  }

  PlayResult out;
  out.play = std::move(play);
  out.payoff1 = realized_payoff(out.play, params, 1);
  out.payoff2 = realized_payoff(out.play, params, 2);
  out.rng_trace_len = draws;
  return out;
}

double realized_payoff(const Play& play, const GameParams& params, int player) {
  const double c = player == 1 ? params.cost1 : params.cost2;
  const PlayerSet mine = singleton(player);
  double total = 0.0;
  for (const auto& seg : play.history.segments()) {
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) {
      if (c == 0.0) continue;
      for (const auto& rec : ex->recs) {
        if (rec.actual == mine) total -= c * std::exp(-params.r * rec.time);
      }
    } else {
      const auto& cas = std::get<CascadeSegment>(seg);
      // The symbolic tail holds infinitely many inspections whose discounted
      // costs approach c * exp(-r * limit_time) > 0, so the series diverges.
      if (cas.actual == mine && c > 0.0)
        total = -std::numeric_limits<double>::infinity();
    }
  }
  if (play.discovery) {
    total += std::exp(-params.r * play.discovery->at) *
             (play.discovery->by == player ? params.v_finder : params.v_other);
  }
  return total;
}

std::string BatchStats::to_csv() const {
  std::string out = "replications,mean1,se1,mean2,se2,discovery_rate,truncation_rate\n";
  out += std::to_string(replications);
  for (double v : {mean1, se1, mean2, se2, discovery_rate, truncation_rate}) {
    out += ',';
    out += format_double(v);
  }
  out += '\n';
  return out;
}

BatchStats simulate_batch(const Strategy& s1, const Strategy& s2,
                          const GameParams& params, const SimConfig& cfg, int threads) {
  cfg.check_valid();
  const std::uint64_t n = cfg.replications;
  std::vector<double> pay1(n), pay2(n);
  std::vector<unsigned char> found(n), trunc(n);

  auto worker = [&](std::uint64_t lo, std::uint64_t hi) {
    for (std::uint64_t i = lo; i < hi; ++i) {
      PlayResult res = sample_play(s1, s2, params, cfg, derive_seed(cfg.master_seed, i));
      pay1[i] = res.payoff1;
      pay2[i] = res.payoff2;
      found[i] = res.play.discovery.has_value();
      trunc[i] = res.play.truncated;
    }
  };

  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(std::min<std::uint64_t>(n, 64))));
  if (workers == 1) {
    worker(0, n);
  } else {
    std::vector<std::thread> pool;
    const std::uint64_t chunk = (n + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t lo = chunk * w;
      if (lo >= n) break;
      pool.emplace_back(worker, lo, std::min(n, lo + chunk));
    }
    for (auto& t : pool) t.join();
  }

  // Fixed-order compensated reduction: identical for any worker count.
  KahanSum s1sum, s2sum, s1sq, s2sq;
  std::uint64_t n_found = 0, n_trunc = 0;
  bool inf1 = false, inf2 = false;
  for (std::uint64_t i = 0; i < n; ++i) {
    if (std::isfinite(pay1[i])) {
      s1sum.add(pay1[i]);
      s1sq.add(pay1[i] * pay1[i]);
    } else {
      inf1 = true;
    }
    if (std::isfinite(pay2[i])) {
      s2sum.add(pay2[i]);
      s2sq.add(pay2[i] * pay2[i]);
    } else {
      inf2 = true;
    }
    n_found += found[i];
    n_trunc += trunc[i];
  }

  BatchStats stats;
  stats.replications = n;
  const double dn = static_cast<double>(n);
  auto finish = [&](const KahanSum& sum, const KahanSum& sq, bool inf, double& mean,
                    double& se) {
    if (inf) {
      mean = -std::numeric_limits<double>::infinity();
      se = std::numeric_limits<double>::infinity();
      return;
    }
    mean = sum.sum / dn;
    if (n < 2) {
      se = 0.0;
      return;
    }
    const double var = std::max(0.0, (sq.sum - dn * mean * mean) / (dn - 1.0));
    se = std::sqrt(var / dn);
  };
  finish(s1sum, s1sq, inf1, stats.mean1, stats.se1);
  finish(s2sum, s2sq, inf2, stats.mean2, stats.se2);
  stats.discovery_rate = static_cast<double>(n_found) / dn;
  stats.truncation_rate = static_cast<double>(n_trunc) / dn;
  return stats;
}

}  // namespace ohg
