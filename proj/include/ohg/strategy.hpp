#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ohg/history.hpp"

namespace ohg {

/// Probability distribution over the delay until a player's next inspection
/// attempt, measured from the time of the last inspection. Support is
/// (0, inf]: finite atoms, exponential components, an optional generic-CDF
/// component, and an atom at infinity (never inspect again).
struct DelayDistribution {
  struct Atom {
    double delay = 0.0;  // strictly positive, finite
    double mass = 0.0;
    friend bool operator==(const Atom&, const Atom&) = default;
  };
  struct Exponential {
    double rate = 1.0;
    double weight = 0.0;
    friend bool operator==(const Exponential&, const Exponential&) = default;
  };
  /// cdf must be a proper CDF of a distribution supported on
  /// (0, support_end]: nondecreasing, cdf(0) = 0, cdf(support_end) = 1.
  struct GenericComponent {
    std::function<double(double)> cdf;
    double weight = 0.0;
    double support_end = 1.0;
  };

  std::vector<Atom> atoms;  // ascending by delay, pairwise distinct
  std::vector<Exponential> exponentials;
  std::optional<GenericComponent> generic;
  double never_mass = 0.0;

  static DelayDistribution point(double delay);
  static DelayDistribution never();
  static DelayDistribution exponential_rate(double rate);

  double total_mass() const;
  double continuous_weight() const;
  bool has_generic() const { return generic.has_value(); }
  /// Throws std::invalid_argument when an invariant fails (mass not 1 within
  /// 1e-12, non-positive or duplicate atoms, bad rates/weights).
  void check_valid() const;

  /// P[delay <= t] restricted to the finite part.
  double cdf(double t) const;
  /// P[delay > t], strict; includes the never mass.
  double survival(double t) const;
  /// Mass of an atom sitting exactly at t (0 when there is none).
  double mass_at(double t) const;

  /// Inverse-CDF sampling from one uniform draw in [0,1): cumulative-mass
  /// intervals ordered atoms ascending, then continuous components in listed
  /// order, then infinity. Returns kNeverTime for the never bucket.
  double sample(double unit_draw) const;

  /// Structural closeness: same atoms/masses/rates/weights within tol.
  /// Generic components compare by weight and CDF values on a probe grid.
  static bool approx_equal(const DelayDistribution& a, const DelayDistribution& b,
                           double tol = 1e-12);
};

/// Mixes the parts of `components` into one distribution (weights must sum
/// to 1 within 1e-9; at most one generic component in total).
DelayDistribution mix(const std::vector<std::pair<double, DelayDistribution>>& components);

/// Pure map from histories to next-inspection delay distributions. Markov
/// strategies return the same distribution after every history ("shifted to
/// the time of the last inspection"); they expose it via
/// stationary_distribution(). All randomness is externalized: strategies only
/// describe distributions, the engine supplies the draws.
class Strategy {
 public:
  static Strategy never();
  static Strategy deterministic(double tau);
  static Strategy exponential(double mu);
  static Strategy mixture(std::vector<std::pair<double, Strategy>> weighted);
  static Strategy stationary(DelayDistribution dist, std::string label = "stationary");
  /// Inspects at k + n/(n+1) for every unit interval k: the transfinite
  /// schedule with one cascade per interval and limit indices at w*(k+1).
  static Strategy zeno_schedule();
  /// Named bounded reactive rule (see reactive_rule_names()); history
  /// dependent through the last record's sets and the elapsed gap.
  static Strategy reactive(const std::string& rule,
                           const std::map<std::string, double>& params);

  DelayDistribution next_distribution(const History& h) const;
  bool is_markov() const;
  const DelayDistribution& stationary_distribution() const;  // Markov only

  /// Closed form of the cascade the schedule is currently inside, for engines
  /// that need to place limit ordinals. Empty for non-schedule strategies.
  std::optional<RatioForm> cascade_info(const History& h) const;

  const std::string& kind() const { return kind_; }
  /// Config-shaped description, e.g. {"kind":"deterministic","tau":0.5}.
  std::string spec_text() const;

 private:
  Strategy() = default;
  std::string kind_;
  std::string spec_;
  bool markov_ = false;
  bool schedule_ = false;
  std::optional<DelayDistribution> stationary_;
  std::function<DelayDistribution(const History&)> behavior_;
};

std::vector<std::string> reactive_rule_names();

/// The Markov strategy that replays s's reaction to h0 after every history.
Strategy markov_from_history(const Strategy& s, const History& h0);

}  // namespace ohg
