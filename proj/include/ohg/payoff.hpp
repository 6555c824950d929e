#pragma once

#include <stdexcept>
#include <string>

#include "ohg/params.hpp"
#include "ohg/strategy.hpp"

namespace ohg {

// Per-cycle quantities for a pair of next-inspection delay distributions
// (F1, F2), delays measured from the last inspection:
//
//   u_tilde  expected player-1 payoff from the first inspection, discounted
//            to now (ties on common atoms carry half weights)
//   p_tilde  E[exp(-r min(s1,s2))], 0 at min = infinity
//   q_factor E[exp(-(r+lambda) min(s1,s2))], the continuation factor
//   lambda_ratio      u_tilde / p_tilde (0 for the never/never pair)
//   fixed_point_value u_tilde / (1 - q_factor), the stationary value of the
//                     recursive payoff equation for Markov pairs
//
// Atom/exponential mixtures evaluate in closed form; generic-CDF components
// route through adaptive quadrature (absolute tolerance 1e-9).

enum class Method { closed_form, quadrature };

struct PayoffReport {
  double u_tilde = 0.0;
  double p_tilde = 0.0;
  double q_factor = 0.0;
  double lambda_ratio = 0.0;
  double fixed_point_value = 0.0;
  bool divergent = false;  // q_factor >= 1 - 1e-12; fixed point undefined
  Method method = Method::closed_form;
  double est_abs_error = 0.0;
};

/// JSON rendering with schema_version, the five quantities, divergence flag,
/// method, and est_abs_error.
std::string to_json_text(const PayoffReport& report);

struct DivergentValueError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct QuadratureError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

PayoffReport evaluate(const DelayDistribution& f1, const DelayDistribution& f2,
                      const GameParams& params);
PayoffReport evaluate(const DelayDistribution& f1, const DelayDistribution& f2,
                      const GameParams& params, Method method);

double tilde_u(const DelayDistribution& f1, const DelayDistribution& f2,
               const GameParams& params);
double tilde_p(const DelayDistribution& f1, const DelayDistribution& f2,
               const GameParams& params);
double continuation_factor(const DelayDistribution& f1, const DelayDistribution& f2,
                           const GameParams& params);
double lambda_ratio(const DelayDistribution& f1, const DelayDistribution& f2,
                    const GameParams& params);
/// Throws DivergentValueError when the continuation factor reaches 1.
double markov_value(const DelayDistribution& f1, const DelayDistribution& f2,
                    const GameParams& params);

struct RecursionLimits {
  std::size_t max_nodes = 200000;
};

struct RecursiveValue {
  double value = 0.0;
  double tail_bound = 0.0;
  bool complete = true;  // false when the node cap truncated the tree
};

/// Depth-d unrolling of the recursive payoff equation with continuation value
/// 0 at the frontier; tail_bound always dominates the truncation error.
/// Exact for strategy pairs whose behavior does not depend on the exact event
/// time inside a continuous branch (Markov pairs in particular); continuous
/// branches otherwise continue from a representative in-cell time.
RecursiveValue evaluate_recursive(const Strategy& s1, const Strategy& s2,
                                  const History& h, const GameParams& params, int depth,
                                  const RecursionLimits& limits = {});

}  // namespace ohg
