#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ohg/engine.hpp"
#include "ohg/payoff.hpp"

namespace ohg {

/// Finite stand-in for "another Markov strategy": deterministic and
/// exponential grids, optional inspect-with-probability-w-else-never
/// mixtures, and the never strategy itself.
struct DeviationFamily {
  std::vector<double> deterministic_grid;
  std::vector<double> exponential_grid;
  bool include_never = true;
  std::vector<std::pair<double, double>> mixture_grid;  // (tau, weight on inspecting)

  /// 64 log-spaced tau with lambda*tau in [0.01, 20] and 64 log-spaced mu
  /// with lambda/mu in the same range.
  static DeviationFamily defaults_for(double lambda);
  void check_valid() const;
};

struct FamilyMember {
  std::string label;
  DelayDistribution dist;
};

/// Enumeration order fixes the argmax tie-break: deterministic ascending,
/// exponential ascending, mixtures as listed, then never.
std::vector<FamilyMember> enumerate_family(const DeviationFamily& family);

struct BestResponseResult {
  std::size_t family_index = 0;
  std::string label;
  DelayDistribution dist;
  double value = 0.0;
  std::size_t divergent_members = 0;  // members skipped as divergent
};

/// Argmax of the stationary fixed-point value against a fixed opponent;
/// `params` is oriented to the responding player's seat (cost1 = responder).
BestResponseResult best_markov_response(const DelayDistribution& opponent,
                                        const DeviationFamily& family,
                                        const GameParams& params);

/// Grid argmax plus golden-section refinement between the bracketing grid
/// points when the winner is deterministic or exponential. Never smaller than
/// the plain grid value.
double refined_best_response_value(const DelayDistribution& opponent,
                                   const DeviationFamily& family,
                                   const GameParams& params);

struct VerificationReport {
  double candidate_value1 = 0.0;
  double candidate_value2 = 0.0;
  BestResponseResult best1;
  BestResponseResult best2;
  double gap1 = 0.0;
  double gap2 = 0.0;
  double epsilon = 0.0;
  bool confirmed = false;

  std::string to_json_text() const;
};

/// Markov-deviation test: the pair is confirmed (within epsilon) iff neither
/// player gains more than epsilon by any family member.
VerificationReport verify_mpe(const DelayDistribution& f1, const DelayDistribution& f2,
                              const DeviationFamily& family, const GameParams& params,
                              double epsilon);

struct ProbeOutcome {
  std::string spec;  // strategy description for the reproduction bundle
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t master_seed = 0;
  bool exceeds = false;  // estimate > reference + epsilon + 3 se
};

struct ProbeReport {
  double reference_value = 0.0;  // player-1 best Markov response value
  double epsilon = 0.0;
  double max_estimate = 0.0;
  bool any_exceedance = false;
  std::vector<ProbeOutcome> probes;

  std::string to_json_text(const GameParams& params, const SimConfig& cfg) const;
};

/// Estimates player-1 values of non-Markov probe strategies against the
/// stationary f2 by simulation (probe i uses derive_seed(cfg.master_seed, i)
/// as its batch master). Exceedances are findings, not faults.
ProbeReport probe_nonmarkov_deviations(const DelayDistribution& f1,
                                       const DelayDistribution& f2,
                                       const std::vector<Strategy>& probes,
                                       const DeviationFamily& family,
                                       const GameParams& params, const SimConfig& cfg,
                                       double epsilon, int threads = 1);

struct ExtractionResult {
  Strategy strategy = Strategy::never();
  double value = 0.0;       // stationary fixed-point value of the extraction
  double max_lambda = 0.0;  // best sampled per-cycle ratio
  std::size_t histories_sampled = 0;
};

/// Realizes the epsilon-best-response construction: samples histories of
/// (s1, f2), picks the history h0 maximizing the per-cycle ratio of s1's
/// reaction, and returns that reaction as a stationary strategy. Schedule
/// strategies additionally have their cascade positions enumerated directly.
ExtractionResult extract_markov_eps_best_response(const Strategy& s1,
                                                  const DelayDistribution& f2,
                                                  const GameParams& params,
                                                  const SimConfig& cfg);

/// Builds the bounded reactive probe battery used by the corroboration runs;
/// delays are scaled so count probes cover the named rules at several scales.
std::vector<Strategy> default_probe_battery(double lambda, std::size_t count);

}  // namespace ohg
