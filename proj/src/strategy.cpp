#include "ohg/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace ohg {

using nlohmann::json;

DelayDistribution DelayDistribution::point(double delay) {
  DelayDistribution d;
  d.atoms.push_back({delay, 1.0});
  return d;
}

DelayDistribution DelayDistribution::never() {
  DelayDistribution d;
  d.never_mass = 1.0;
  return d;
}

DelayDistribution DelayDistribution::exponential_rate(double rate) {
  DelayDistribution d;
  d.exponentials.push_back({rate, 1.0});
  return d;
}

double DelayDistribution::total_mass() const {
  double m = never_mass;
  for (const auto& a : atoms) m += a.mass;
  for (const auto& e : exponentials) m += e.weight;
  if (generic) m += generic->weight;
  return m;
}

double DelayDistribution::continuous_weight() const {
  double m = 0.0;
  for (const auto& e : exponentials) m += e.weight;
  if (generic) m += generic->weight;
  return m;
}

void DelayDistribution::check_valid() const {
  for (std::size_t i = 0; i < atoms.size(); ++i) {
    const auto& a = atoms[i];
    if (!(a.delay > 0.0) || !std::isfinite(a.delay))
      throw std::invalid_argument("atom delays must be strictly positive and finite");
    if (a.mass < 0.0 || a.mass > 1.0)
      throw std::invalid_argument("atom mass outside [0, 1]");
    if (i > 0 && !(atoms[i - 1].delay < a.delay))
      throw std::invalid_argument("atom delays must be ascending and distinct");
  }
  for (const auto& e : exponentials) {
    if (!(e.rate > 0.0) || !std::isfinite(e.rate))
      throw std::invalid_argument("exponential rate must be positive and finite");
    if (e.weight < 0.0 || e.weight > 1.0)
      throw std::invalid_argument("exponential weight outside [0, 1]");
  }
  if (generic) {
    if (!generic->cdf) throw std::invalid_argument("generic component without a CDF");
    if (generic->weight < 0.0 || generic->weight > 1.0)
      throw std::invalid_argument("generic weight outside [0, 1]");
    if (!(generic->support_end > 0.0) || !std::isfinite(generic->support_end))
      throw std::invalid_argument("generic support end must be positive and finite");
  }
  if (never_mass < 0.0 || never_mass > 1.0)
    throw std::invalid_argument("never mass outside [0, 1]");
  if (std::abs(total_mass() - 1.0) > 1e-12)
    throw std::invalid_argument("distribution mass must equal 1");
}

double DelayDistribution::cdf(double t) const {
  if (!(t > 0.0)) return 0.0;
  double p = 0.0;
  for (const auto& a : atoms) {
    if (a.delay <= t) p += a.mass;
  }
  for (const auto& e : exponentials) p += e.weight * (-std::expm1(-e.rate * t));
  if (generic) p += generic->weight * generic->cdf(std::min(t, generic->support_end));
  return p;
}

double DelayDistribution::survival(double t) const {
  double p = never_mass;
  for (const auto& a : atoms) {
    if (a.delay > t) p += a.mass;
  }
  for (const auto& e : exponentials) p += e.weight * std::exp(-e.rate * t);
  if (generic)
    p += generic->weight * (1.0 - generic->cdf(std::min(t, generic->support_end)));
  return p;
}

double DelayDistribution::mass_at(double t) const {
  for (const auto& a : atoms)
    if (a.delay == t) return a.mass;
  return 0.0;
}

double DelayDistribution::sample(double unit_draw) const {
  double cum = 0.0;
  for (const auto& a : atoms) {
    cum += a.mass;
    if (unit_draw < cum) return a.delay;
  }
  for (const auto& e : exponentials) {
    if (unit_draw < cum + e.weight) {
      const double v = (unit_draw - cum) / e.weight;
      const double delay = -std::log1p(-v) / e.rate;
      return std::max(delay, std::numeric_limits<double>::min());
    }
    cum += e.weight;
  }
  if (generic && unit_draw < cum + generic->weight) {
    const double v = (unit_draw - cum) / generic->weight;
    double lo = 0.0, hi = generic->support_end;
    for (int i = 0; i < 64; ++i) {
      const double mid = 0.5 * (lo + hi);
      (generic->cdf(mid) < v ? lo : hi) = mid;
    }
    return std::max(hi, std::numeric_limits<double>::min());
  }
  return kNeverTime;
}

bool DelayDistribution::approx_equal(const DelayDistribution& a, const DelayDistribution& b,
                                     double tol) {
  if (a.atoms.size() != b.atoms.size() ||
      a.exponentials.size() != b.exponentials.size() ||
      a.generic.has_value() != b.generic.has_value())
    return false;
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    if (std::abs(a.atoms[i].delay - b.atoms[i].delay) > tol ||
        std::abs(a.atoms[i].mass - b.atoms[i].mass) > tol)
      return false;
  }
  for (std::size_t i = 0; i < a.exponentials.size(); ++i) {
    if (std::abs(a.exponentials[i].rate - b.exponentials[i].rate) > tol ||
        std::abs(a.exponentials[i].weight - b.exponentials[i].weight) > tol)
      return false;
  }
  if (std::abs(a.never_mass - b.never_mass) > tol) return false;
  if (a.generic) {
    if (std::abs(a.generic->weight - b.generic->weight) > tol) return false;
    const double end = std::min(a.generic->support_end, b.generic->support_end);
    const double probe_tol = std::max(tol, 1e-9);
    for (int i = 1; i <= 16; ++i) {
      const double t = end * i / 16.0;
      if (std::abs(a.generic->cdf(t) - b.generic->cdf(t)) > probe_tol) return false;
    }
  }
  return true;
}

DelayDistribution mix(const std::vector<std::pair<double, DelayDistribution>>& components) {
  double wsum = 0.0;
  for (const auto& [w, d] : components) {
    if (w < 0.0) throw std::invalid_argument("mixture weights must be non-negative");
    wsum += w;
  }
  if (std::abs(wsum - 1.0) > 1e-9)
    throw std::invalid_argument("mixture weights must sum to 1");
  DelayDistribution out;
  for (const auto& [w, d] : components) {
    if (w == 0.0) continue;
    for (const auto& a : d.atoms) {
      auto it = std::find_if(out.atoms.begin(), out.atoms.end(),
                             [&](const auto& x) { return x.delay == a.delay; });
      if (it != out.atoms.end())
        it->mass += w * a.mass;
      else
        out.atoms.push_back({a.delay, w * a.mass});
    }
    for (const auto& e : d.exponentials) {
      auto it = std::find_if(out.exponentials.begin(), out.exponentials.end(),
                             [&](const auto& x) { return x.rate == e.rate; });
      if (it != out.exponentials.end())
        it->weight += w * e.weight;
      else
        out.exponentials.push_back({e.rate, w * e.weight});
    }
    if (d.generic) {
      if (out.generic)
        throw std::invalid_argument("a mixture may carry at most one generic component");
      out.generic = d.generic;
      out.generic->weight *= w;
    }
    out.never_mass += w * d.never_mass;
  }
  std::sort(out.atoms.begin(), out.atoms.end(),
            [](const auto& x, const auto& y) { return x.delay < y.delay; });
  return out;
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(what) + " must be positive and finite");
}

// The unit-interval schedule k + n/(n+1). Next inspection strictly after t.
double zeno_next_time(double t) {
  const double k = std::floor(t);
  RatioForm form{k, 1.0};
  std::uint64_t n = form.first_step_after(t);
  if (n == 0) {
    // t sits numerically at the supremum of interval k; move to the next one.
    form = RatioForm{k + 1.0, 1.0};
    n = 1;
  }
  return form.time_at(n);
}

}  // namespace

Strategy Strategy::never() {
  Strategy s;
  s.kind_ = "never";
  s.spec_ = json{{"kind", "never"}}.dump();
  s.markov_ = true;
  s.stationary_ = DelayDistribution::never();
  return s;
}

Strategy Strategy::deterministic(double tau) {
  require_positive(tau, "tau");
  Strategy s;
  s.kind_ = "deterministic";
  s.spec_ = json{{"kind", "deterministic"}, {"tau", tau}}.dump();
  s.markov_ = true;
  s.stationary_ = DelayDistribution::point(tau);
  return s;
}

Strategy Strategy::exponential(double mu) {
  require_positive(mu, "mu");
  Strategy s;
  s.kind_ = "exponential";
  s.spec_ = json{{"kind", "exponential"}, {"mu", mu}}.dump();
  s.markov_ = true;
  s.stationary_ = DelayDistribution::exponential_rate(mu);
  return s;
}

Strategy Strategy::mixture(std::vector<std::pair<double, Strategy>> weighted) {
  std::vector<std::pair<double, DelayDistribution>> parts;
  json specs = json::array();
  for (const auto& [w, comp] : weighted) {
    if (!comp.is_markov())
      throw std::invalid_argument("mixture components must be stationary kinds");
    parts.emplace_back(w, comp.stationary_distribution());
    json item = json::parse(comp.spec_);
    item["weight"] = w;
    specs.push_back(std::move(item));
  }
  DelayDistribution d = mix(parts);
  d.check_valid();
  Strategy s;
  s.kind_ = "mixture";
  s.spec_ = json{{"kind", "mixture"}, {"components", specs}}.dump();
  s.markov_ = true;
  s.stationary_ = std::move(d);
  return s;
}

Strategy Strategy::stationary(DelayDistribution dist, std::string label) {
  dist.check_valid();
  Strategy s;
  s.kind_ = std::move(label);
  s.spec_ = json{{"kind", "stationary"}}.dump();
  s.markov_ = true;
  s.stationary_ = std::move(dist);
  return s;
}

Strategy Strategy::zeno_schedule() {
  Strategy s;
  s.kind_ = "zeno";
  s.spec_ = json{{"kind", "zeno"}}.dump();
  s.markov_ = false;
  s.schedule_ = true;
  s.behavior_ = [](const History& h) {
    const double t = h.final_time();
    return DelayDistribution::point(zeno_next_time(t) - t);
  };
  return s;
}

namespace {

using RuleFactory = std::function<std::function<DelayDistribution(const History&)>(
    const std::map<std::string, double>&)>;

double require_param(const std::map<std::string, double>& params, const std::string& key,
                     const std::string& rule) {
  auto it = params.find(key);
  if (it == params.end())
    throw std::invalid_argument("reactive rule '" + rule + "' requires parameter '" + key +
                                "'");
  return it->second;
}

double param_or(const std::map<std::string, double>& params, const std::string& key,
                double fallback) {
  auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

double clamp_delay(double v, double lo, double hi) {
  return std::min(hi, std::max(lo, v));
}

const std::vector<std::pair<std::string, RuleFactory>>& rule_registry() {
  static const std::vector<std::pair<std::string, RuleFactory>> rules = {
      {"constant",
       [](const auto& p) {
         const double tau = require_param(p, "tau", "constant");
         require_positive(tau, "tau");
         return [tau](const History&) { return DelayDistribution::point(tau); };
       }},
      {"winner_dependent",
       [](const auto& p) {
         const double d1 = require_param(p, "p1_delay", "winner_dependent");
         const double d2 = require_param(p, "p2_delay", "winner_dependent");
         const double init = param_or(p, "initial", d1);
         require_positive(d1, "p1_delay");
         require_positive(d2, "p2_delay");
         require_positive(init, "initial");
         return [d1, d2, init](const History& h) {
           auto last = h.last_record();
           if (!last) return DelayDistribution::point(init);
           return DelayDistribution::point(last->actual == PlayerSet::p1 ? d1 : d2);
         };
       }},
      {"tie_shy",
       [](const auto& p) {
         const double base = require_param(p, "base", "tie_shy");
         const double after_tie = require_param(p, "after_tie", "tie_shy");
         require_positive(base, "base");
         require_positive(after_tie, "after_tie");
         return [base, after_tie](const History& h) {
           auto last = h.last_record();
           const bool tie = last && last->attempted == PlayerSet::both;
           return DelayDistribution::point(tie ? after_tie : base);
         };
       }},
      {"gap_ramp",
       [](const auto& p) {
         const double base = require_param(p, "base", "gap_ramp");
         const double slope = param_or(p, "slope", 1.0);
         const double lo = require_param(p, "lo", "gap_ramp");
         const double hi = require_param(p, "hi", "gap_ramp");
         require_positive(lo, "lo");
         if (!(hi >= lo) || !std::isfinite(hi))
           throw std::invalid_argument("gap_ramp needs finite hi >= lo");
         return [base, slope, lo, hi](const History& h) {
           return DelayDistribution::point(clamp_delay(base + slope * h.last_gap(), lo, hi));
         };
       }},
      {"preempt_fraction",
       [](const auto& p) {
         const double fraction = require_param(p, "fraction", "preempt_fraction");
         const double lo = require_param(p, "lo", "preempt_fraction");
         const double hi = require_param(p, "hi", "preempt_fraction");
         require_positive(fraction, "fraction");
         require_positive(lo, "lo");
         if (!(hi >= lo) || !std::isfinite(hi))
           throw std::invalid_argument("preempt_fraction needs finite hi >= lo");
         return [fraction, lo, hi](const History& h) {
           return DelayDistribution::point(clamp_delay(fraction * h.last_gap(), lo, hi));
         };
       }},
      {"paced_exponential",
       [](const auto& p) {
         const double initial = require_param(p, "initial_rate", "paced_exponential");
         const double after_me = param_or(p, "rate_after_p1", initial);
         const double after_them = param_or(p, "rate_after_p2", initial);
         require_positive(initial, "initial_rate");
         require_positive(after_me, "rate_after_p1");
         require_positive(after_them, "rate_after_p2");
         return [initial, after_me, after_them](const History& h) {
           auto last = h.last_record();
           if (!last) return DelayDistribution::exponential_rate(initial);
           return DelayDistribution::exponential_rate(
               last->actual == PlayerSet::p1 ? after_me : after_them);
         };
       }},
  };
  return rules;
}

}  // namespace

std::vector<std::string> reactive_rule_names() {
  std::vector<std::string> out;
  for (const auto& [name, _] : rule_registry()) out.push_back(name);
  return out;
}

Strategy Strategy::reactive(const std::string& rule,
                            const std::map<std::string, double>& params) {
  for (const auto& [name, factory] : rule_registry()) {
    if (name == rule) {
      Strategy s;
      s.kind_ = "reactive";
      json jparams = json::object();
      for (const auto& [k, v] : params) jparams[k] = v;
      s.spec_ = json{{"kind", "reactive"}, {"rule", rule}, {"params", jparams}}.dump();
      s.markov_ = false;
      s.behavior_ = factory(params);
      return s;
    }
  }
  std::string known;
  for (const auto& [name, _] : rule_registry()) {
    if (!known.empty()) known += ", ";
    known += name;
  }
  throw std::invalid_argument("unknown reactive rule '" + rule + "' (known: " + known + ")");
}

DelayDistribution Strategy::next_distribution(const History& h) const {
  if (h.has_open_cascade())
    throw std::invalid_argument("history has an open cascade");
  if (!std::isfinite(h.final_time()))
    throw std::invalid_argument("history final time must be finite");
  if (markov_) return *stationary_;  // validated at construction
  DelayDistribution d = behavior_(h);
  d.check_valid();
  return d;
}

bool Strategy::is_markov() const { return markov_; }

const DelayDistribution& Strategy::stationary_distribution() const {
  if (!markov_) throw std::logic_error("strategy has no stationary distribution");
  return *stationary_;
}

std::optional<RatioForm> Strategy::cascade_info(const History& h) const {
  if (!schedule_) return std::nullopt;
  const double next = zeno_next_time(h.final_time());
  return RatioForm{std::floor(next), 1.0};
}

std::string Strategy::spec_text() const { return spec_; }

Strategy markov_from_history(const Strategy& s, const History& h0) {
  if (auto violations = h0.validate(); !violations.empty())
    throw std::invalid_argument("history is invalid: " + violations.front().message);
  if (s.is_markov()) return s;
  return Strategy::stationary(s.next_distribution(h0));
}

}  // namespace ohg
