#include "ohg/payoff.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "json.hpp"

namespace ohg {

std::string to_json_text(const PayoffReport& report) {
  nlohmann::json j{{"schema_version", 1},
                   {"u_tilde", report.u_tilde},
                   {"p_tilde", report.p_tilde},
                   {"q_factor", report.q_factor},
                   {"lambda_ratio", report.lambda_ratio},
                   {"fixed_point_value",
                    report.divergent ? nlohmann::json(nullptr)
                                     : nlohmann::json(report.fixed_point_value)},
                   {"divergent", report.divergent},
                   {"method", report.method == Method::closed_form ? "closed_form"
                                                                   : "quadrature"},
                   {"est_abs_error", report.est_abs_error}};
  return j.dump(2);
}

namespace {

// ---------------------------------------------------------------------------
// Adaptive Gauss7/Kronrod15 quadrature with an accumulated error estimate.

constexpr double kXgk[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr double kWg[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct QuadAccum {
  double err = 0.0;
};

using Fn = std::function<double(double)>;

double gk15(const Fn& f, double lo, double hi, double& diff) {
  const double c = 0.5 * (lo + hi);
  const double h = 0.5 * (hi - lo);
  double resk = kWgk[7] * f(c);
  double resg = kWg[3] * f(c);
  for (int i = 0; i < 7; ++i) {
    const double x = h * kXgk[i];
    const double fsum = f(c - x) + f(c + x);
    resk += kWgk[i] * fsum;
    if (i % 2 == 1) resg += kWg[i / 2] * fsum;
  }
  diff = std::abs((resk - resg) * h);
  return resk * h;
}

double adapt_gk(const Fn& f, double lo, double hi, double tol, int depth,
                QuadAccum& acc) {
  double diff = 0.0;
  const double value = gk15(f, lo, hi, diff);
  if (diff <= tol || depth >= 48 || hi - lo < 1e-14 * std::max(1.0, std::abs(lo))) {
    acc.err += diff;
    return value;
  }
  const double mid = 0.5 * (lo + hi);
  return adapt_gk(f, lo, mid, 0.5 * tol, depth + 1, acc) +
         adapt_gk(f, mid, hi, 0.5 * tol, depth + 1, acc);
}

// Adaptive midpoint rule against a CDF increment (Riemann-Stieltjes), for
// generic components where no density is available.
double adapt_stieltjes(const Fn& w, const Fn& cdf, double lo, double hi, double tol,
                       int depth, QuadAccum& acc) {
  const double mid = 0.5 * (lo + hi);
  const double coarse = w(mid) * (cdf(hi) - cdf(lo));
  const double fine = w(0.5 * (lo + mid)) * (cdf(mid) - cdf(lo)) +
                      w(0.5 * (mid + hi)) * (cdf(hi) - cdf(mid));
  const double diff = std::abs(fine - coarse);
  if (diff <= tol || depth >= 44) {
    acc.err += diff;
    return fine;
  }
  return adapt_stieltjes(w, cdf, lo, mid, 0.5 * tol, depth + 1, acc) +
         adapt_stieltjes(w, cdf, mid, hi, 0.5 * tol, depth + 1, acc);
}

std::vector<double> atom_locations(const DelayDistribution& d) {
  std::vector<double> out;
  out.reserve(d.atoms.size());
  for (const auto& a : d.atoms) out.push_back(a.delay);
  return out;
}

// \int w(s) dF(s) over the full finite support of f: atom part exact,
// exponential components by adaptive quadrature on [0, T] with an analytic
// tail bound, generic components by Stieltjes quadrature. `kinks` lists
// points where w may have corners (the other side's atoms). `bound_w` bounds
// |w| for the tail estimate.
double integrate_against(const DelayDistribution& f, const Fn& w, double bound_w,
                         std::vector<double> kinks, double tol, QuadAccum& acc) {
  double total = 0.0;
  for (const auto& a : f.atoms) total += a.mass * w(a.delay);

  std::sort(kinks.begin(), kinks.end());
  auto pieces = [&kinks](double lo, double hi) {
    std::vector<std::pair<double, double>> out;
    double cur = lo;
    for (double k : kinks) {
      if (k > cur && k < hi) {
        out.emplace_back(cur, k);
        cur = k;
      }
    }
    out.emplace_back(cur, hi);
    return out;
  };

  for (const auto& e : f.exponentials) {
    if (e.weight <= 0.0) continue;
    const double cutoff = 35.0 / e.rate;  // residual mass ~ 6e-16
    const auto segs = pieces(0.0, cutoff);
    const double tol_piece = tol / static_cast<double>(segs.size());
    for (auto [lo, hi] : segs) {
      total += adapt_gk(
          [&](double s) { return w(s) * e.weight * e.rate * std::exp(-e.rate * s); }, lo,
          hi, tol_piece, 0, acc);
    }
    acc.err += e.weight * std::exp(-e.rate * cutoff) * bound_w;
  }

  if (f.generic && f.generic->weight > 0.0) {
    const auto& g = *f.generic;
    const auto segs = pieces(0.0, g.support_end);
    const double tol_piece = tol / static_cast<double>(segs.size());
    Fn scaled_cdf = [&g](double s) { return g.weight * g.cdf(s); };
    for (auto [lo, hi] : segs)
      total += adapt_stieltjes(w, scaled_cdf, lo, hi, tol_piece, 0, acc);
  }
  return total;
}

// ---------------------------------------------------------------------------
// Closed forms.

// \int_lo^hi exp(-rate s) ds for rate > 0; hi may be infinite.
double exp_integral(double rate, double lo, double hi) {
  if (std::isinf(hi)) return std::exp(-rate * lo) / rate;
  return std::exp(-rate * lo) * (-std::expm1(-rate * (hi - lo))) / rate;
}

// A(rho) = \int exp(-rho s) * S_g(s) dF_f(s), atoms plus exponential
// components of f in closed form. Requires f without a generic component.
double a_closed(const DelayDistribution& f, const DelayDistribution& g, double rho) {
  double total = 0.0;
  for (const auto& a : f.atoms)
    total += a.mass * std::exp(-rho * a.delay) * g.survival(a.delay);

  if (f.exponentials.empty()) return total;

  double g_atom_mass = 0.0;
  for (const auto& b : g.atoms) g_atom_mass += b.mass;

  for (const auto& e : f.exponentials) {
    if (e.weight <= 0.0) continue;
    const double rate = e.rate + rho;
    double sum = 0.0;
    // Piecewise-constant part of S_g between g's atoms.
    double step = g_atom_mass + g.never_mass;
    double lo = 0.0;
    for (const auto& b : g.atoms) {
      sum += step * exp_integral(rate, lo, b.delay);
      step -= b.mass;
      lo = b.delay;
    }
    sum += step * exp_integral(rate, lo, kNeverTime);
    // Exponential part of S_g integrates over the whole half line.
    for (const auto& ge : g.exponentials) sum += ge.weight / (rate + ge.rate);
    total += e.weight * e.rate * sum;
  }
  return total;
}

// Common-atom sum D(rho) = sum over shared atom delays of m1 m2 exp(-rho a).
double d_common(const DelayDistribution& f, const DelayDistribution& g, double rho) {
  double total = 0.0;
  std::size_t i = 0, j = 0;
  while (i < f.atoms.size() && j < g.atoms.size()) {
    if (f.atoms[i].delay < g.atoms[j].delay) {
      ++i;
    } else if (g.atoms[j].delay < f.atoms[i].delay) {
      ++j;
    } else {
      total += f.atoms[i].mass * g.atoms[j].mass * std::exp(-rho * f.atoms[i].delay);
      ++i;
      ++j;
    }
  }
  return total;
}

struct Quantities {
  double u = 0.0, p = 0.0, q = 0.0;
  double err = 0.0;
};

Quantities compute_quantities(const DelayDistribution& f1, const DelayDistribution& f2,
                              const GameParams& params, Method method) {
  const double r = params.r;
  const double lam = params.lambda;
  const double c1 = params.cost1;
  const double v1 = params.v_finder;
  const double v2 = params.v_other;

  auto phi1 = [&](double s) {
    return std::exp(-r * s) * (-c1 + v1 * (-std::expm1(-lam * s)));
  };
  auto phi2 = [&](double s) { return std::exp(-r * s) * v2 * (-std::expm1(-lam * s)); };

  double tie_u = 0.0;
  {
    std::size_t i = 0, j = 0;
    while (i < f1.atoms.size() && j < f2.atoms.size()) {
      if (f1.atoms[i].delay < f2.atoms[j].delay) {
        ++i;
      } else if (f2.atoms[j].delay < f1.atoms[i].delay) {
        ++j;
      } else {
        const double a = f1.atoms[i].delay;
        tie_u += f1.atoms[i].mass * f2.atoms[j].mass * 0.5 * (phi1(a) + phi2(a));
        ++i;
        ++j;
      }
    }
  }

  Quantities out;
  if (method == Method::closed_form) {
    const double a1r = a_closed(f1, f2, r);
    const double a1rl = a_closed(f1, f2, r + lam);
    const double a2r = a_closed(f2, f1, r);
    const double a2rl = a_closed(f2, f1, r + lam);
    out.u = (v1 - c1) * a1r - v1 * a1rl + v2 * (a2r - a2rl) + tie_u;
    out.p = a1r + a2r + d_common(f1, f2, r);
    out.q = a1rl + a2rl + d_common(f1, f2, r + lam);
    const double scale = std::abs(out.u) + std::abs(out.p) + std::abs(out.q) +
                         std::abs(c1) + std::abs(v1) + std::abs(v2) + 1.0;
    out.err = 32.0 * std::numeric_limits<double>::epsilon() * scale;
    return out;
  }

  const double bound1 = std::abs(c1) + std::abs(v1);
  const double bound2 = std::abs(v2);
  QuadAccum acc;
  const double tol = 1e-10;
  const auto kinks1 = atom_locations(f2);
  const auto kinks2 = atom_locations(f1);
  out.u = integrate_against(
              f1, [&](double s) { return phi1(s) * f2.survival(s); }, bound1, kinks1, tol,
              acc) +
          integrate_against(
              f2, [&](double s) { return phi2(s) * f1.survival(s); }, bound2, kinks2, tol,
              acc) +
          tie_u;
  out.p = integrate_against(
              f1, [&](double s) { return std::exp(-r * s) * f2.survival(s); }, 1.0,
              kinks1, tol, acc) +
          integrate_against(
              f2, [&](double s) { return std::exp(-r * s) * f1.survival(s); }, 1.0,
              kinks2, tol, acc) +
          d_common(f1, f2, r);
  out.q = integrate_against(
              f1, [&](double s) { return std::exp(-(r + lam) * s) * f2.survival(s); },
              1.0, kinks1, tol, acc) +
          integrate_against(
              f2, [&](double s) { return std::exp(-(r + lam) * s) * f1.survival(s); },
              1.0, kinks2, tol, acc) +
          d_common(f1, f2, r + lam);
  out.err = acc.err;
  if (out.err > 1e-9)
    throw QuadratureError("quadrature did not converge: estimated error " +
                          std::to_string(out.err));
  return out;
}

PayoffReport assemble(const Quantities& qt, Method method) {
  PayoffReport rep;
  rep.u_tilde = qt.u;
  rep.p_tilde = qt.p;
  rep.q_factor = qt.q;
  rep.method = method;
  rep.est_abs_error = qt.err;
  if (qt.p > 0.0) {
    rep.lambda_ratio = qt.u / qt.p;
  } else if (std::abs(qt.u) <= std::max(1e-9, 10.0 * qt.err)) {
    rep.lambda_ratio = 0.0;  // never/never convention
  } else {
    throw std::logic_error("internal inconsistency: p_tilde = 0 with nonzero u_tilde");
  }
  if (qt.q >= 1.0 - 1e-12) {
    rep.divergent = true;
    rep.fixed_point_value = std::numeric_limits<double>::quiet_NaN();
  } else {
    rep.fixed_point_value = qt.u / (1.0 - qt.q);
  }
  return rep;
}

Method auto_method(const DelayDistribution& f1, const DelayDistribution& f2) {
  return (f1.has_generic() || f2.has_generic()) ? Method::quadrature
                                                : Method::closed_form;
}

}  // namespace

PayoffReport evaluate(const DelayDistribution& f1, const DelayDistribution& f2,
                      const GameParams& params, Method method) {
  params.check_valid();
  f1.check_valid();
  f2.check_valid();
  if (method == Method::closed_form && (f1.has_generic() || f2.has_generic()))
    throw std::invalid_argument(
        "closed form is unavailable for generic-CDF components");
  return assemble(compute_quantities(f1, f2, params, method), method);
}

PayoffReport evaluate(const DelayDistribution& f1, const DelayDistribution& f2,
                      const GameParams& params) {
  return evaluate(f1, f2, params, auto_method(f1, f2));
}

double tilde_u(const DelayDistribution& f1, const DelayDistribution& f2,
               const GameParams& params) {
  return evaluate(f1, f2, params).u_tilde;
}

double tilde_p(const DelayDistribution& f1, const DelayDistribution& f2,
               const GameParams& params) {
  return evaluate(f1, f2, params).p_tilde;
}

double continuation_factor(const DelayDistribution& f1, const DelayDistribution& f2,
                           const GameParams& params) {
  return evaluate(f1, f2, params).q_factor;
}

double lambda_ratio(const DelayDistribution& f1, const DelayDistribution& f2,
                    const GameParams& params) {
  return evaluate(f1, f2, params).lambda_ratio;
}

double markov_value(const DelayDistribution& f1, const DelayDistribution& f2,
                    const GameParams& params) {
  PayoffReport rep = evaluate(f1, f2, params);
  if (rep.divergent)
    throw DivergentValueError("continuation factor reaches 1; fixed point diverges");
  return rep.fixed_point_value;
}

namespace {

struct Cell {
  double weight = 0.0;  // contribution to E[exp(-(r+lambda) min); cell]
  int winner = 1;
  bool tie = false;
  double delay = 0.0;  // representative in-cell delay
};

// Continuation cells of the recursive payoff equation: one per atom event,
// two half-weight cells per common atom (the tie coin), and one per side's
// continuous mass. Cell weights sum to the continuation factor Q.
std::vector<Cell> continuation_cells(const DelayDistribution& f1,
                                     const DelayDistribution& f2, double rho,
                                     QuadAccum& acc) {
  std::vector<Cell> cells;
  auto add_atom_cells = [&](const DelayDistribution& mine,
                            const DelayDistribution& other, int who) {
    for (const auto& a : mine.atoms) {
      const double w = a.mass * other.survival(a.delay) * std::exp(-rho * a.delay);
      if (w > 0.0) cells.push_back({w, who, false, a.delay});
    }
  };
  add_atom_cells(f1, f2, 1);
  add_atom_cells(f2, f1, 2);
  {
    std::size_t i = 0, j = 0;
    while (i < f1.atoms.size() && j < f2.atoms.size()) {
      if (f1.atoms[i].delay < f2.atoms[j].delay) {
        ++i;
      } else if (f2.atoms[j].delay < f1.atoms[i].delay) {
        ++j;
      } else {
        const double a = f1.atoms[i].delay;
        const double w = f1.atoms[i].mass * f2.atoms[j].mass * std::exp(-rho * a);
        if (w > 0.0) {
          cells.push_back({0.5 * w, 1, true, a});
          cells.push_back({0.5 * w, 2, true, a});
        }
        ++i;
        ++j;
      }
    }
  }
  auto add_continuous_cell = [&](const DelayDistribution& mine,
                                 const DelayDistribution& other, int who) {
    if (mine.exponentials.empty() && !mine.generic) return;
    DelayDistribution cont = mine;
    cont.atoms.clear();
    double w = 0.0;
    if (!cont.generic) {
      w = a_closed(cont, other, rho);
    } else {
      w = integrate_against(
          cont, [&](double s) { return std::exp(-rho * s) * other.survival(s); }, 1.0,
          atom_locations(other), 1e-10, acc);
    }
    if (w <= 0.0) return;
    // Representative in-cell time; exact placement only matters for
    // strategies that react to the precise event time.
    double rep = 0.0, norm = 0.0;
    for (const auto& e : mine.exponentials) {
      rep += e.weight / (e.rate + rho);
      norm += e.weight;
    }
    if (mine.generic) {
      rep += mine.generic->weight * 0.5 * mine.generic->support_end;
      norm += mine.generic->weight;
    }
    rep = norm > 0.0 ? rep / norm : 1.0;
    cells.push_back({w, who, false, rep});
  };
  add_continuous_cell(f1, f2, 1);
  add_continuous_cell(f2, f1, 2);
  return cells;
}

struct RecursionCtx {
  const Strategy& s1;
  const Strategy& s2;
  const GameParams& params;
  const RecursionLimits& limits;
  bool markov_pair = false;
  std::size_t nodes_used = 0;
  bool complete = true;
  double frontier_reach = 0.0;
  double qbar = 0.0;
  double root_u = 0.0;
  double root_q = 0.0;
  bool root_seen = false;
};

double recurse(RecursionCtx& ctx, const History& h, int depth, double reach) {
  if (ctx.nodes_used >= ctx.limits.max_nodes) {
    ctx.complete = false;
    ctx.frontier_reach += reach;
    return 0.0;
  }
  ++ctx.nodes_used;
  const DelayDistribution f1 = ctx.s1.next_distribution(h);
  const DelayDistribution f2 = ctx.s2.next_distribution(h);
  const Quantities qt =
      compute_quantities(f1, f2, ctx.params, auto_method(f1, f2));
  ctx.qbar = std::max(ctx.qbar, qt.q);
  if (!ctx.root_seen) {
    ctx.root_seen = true;
    ctx.root_u = qt.u;
    ctx.root_q = qt.q;
  }
  if (depth == 0) {
    ctx.frontier_reach += reach * qt.q;
    return qt.u;
  }
  QuadAccum acc;
  const auto cells =
      continuation_cells(f1, f2, ctx.params.r + ctx.params.lambda, acc);
  double value = qt.u;
  if (ctx.markov_pair) {
    // Every child of a Markov pair sees the same distributions, so one
    // representative subtree carries the whole continuation weight.
    double qsum = 0.0;
    for (const auto& c : cells) qsum += c.weight;
    if (qsum > 0.0 && !cells.empty()) {
      const auto& c = cells.front();
      History child = h.appended(h.final_time() + c.delay,
                                 c.tie ? PlayerSet::both : singleton(c.winner),
                                 singleton(c.winner));
      value += qsum * recurse(ctx, child, depth - 1, reach * qsum);
    }
    return value;
  }
  for (const auto& c : cells) {
    History child = h.appended(h.final_time() + c.delay,
                               c.tie ? PlayerSet::both : singleton(c.winner),
                               singleton(c.winner));
    value += c.weight * recurse(ctx, child, depth - 1, reach * c.weight);
  }
  return value;
}

}  // namespace

RecursiveValue evaluate_recursive(const Strategy& s1, const Strategy& s2,
                                  const History& h, const GameParams& params, int depth,
                                  const RecursionLimits& limits) {
  if (depth < 0) throw std::invalid_argument("depth must be non-negative");
  params.check_valid();
  RecursionCtx ctx{s1, s2, params, limits};
  ctx.markov_pair = s1.is_markov() && s2.is_markov();
  RecursiveValue out;
  out.value = recurse(ctx, h, depth, 1.0);
  out.complete = ctx.complete;
  double frontier_bound;
  if (ctx.qbar >= 1.0 - 1e-12) {
    frontier_bound = std::numeric_limits<double>::infinity();
  } else if (ctx.markov_pair) {
    frontier_bound = std::abs(ctx.root_u) / (1.0 - ctx.root_q);
  } else {
    frontier_bound =
        (params.cost1 + std::max(std::abs(params.v_finder), std::abs(params.v_other))) /
        (1.0 - ctx.qbar);
  }
  out.tail_bound = ctx.frontier_reach * frontier_bound * (1.0 + 1e-9) + 1e-15;
  return out;
}

}  // namespace ohg
