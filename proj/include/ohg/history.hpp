#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ohg/ordinal.hpp"

namespace ohg {

/// Extended non-negative real; kNeverTime stands for +infinity.
using TimePoint = double;
inline constexpr TimePoint kNeverTime = std::numeric_limits<double>::infinity();

enum class PlayerSet : unsigned char { none = 0, p1 = 1, p2 = 2, both = 3 };

constexpr PlayerSet singleton(int player) {
  return player == 1 ? PlayerSet::p1 : PlayerSet::p2;
}
constexpr bool contains(PlayerSet s, int player) {
  return (static_cast<unsigned>(s) >> (player - 1)) & 1u;
}
constexpr bool is_singleton(PlayerSet s) { return s == PlayerSet::p1 || s == PlayerSet::p2; }
constexpr bool is_subset(PlayerSet a, PlayerSet b) {
  return (static_cast<unsigned>(a) & ~static_cast<unsigned>(b)) == 0;
}
/// The player of a singleton set.
constexpr int sole_player(PlayerSet s) { return s == PlayerSet::p1 ? 1 : 2; }
std::string_view player_set_name(PlayerSet s);
std::optional<PlayerSet> parse_player_set(std::string_view text);

/// Closed-form cascade step times u(n) = base + span * n / (n + 1) for n >= 1.
/// Strictly increasing with finite supremum base + span. This is the one
/// formula family the schedule strategies emit.
struct RatioForm {
  double base = 0.0;
  double span = 1.0;

  double time_at(std::uint64_t n) const {
    const double dn = static_cast<double>(n);
    return base + span * (dn / (dn + 1.0));
  }
  double supremum() const { return base + span; }
  /// Smallest n with time_at(n) strictly above t; 0 when even n=1 is above.
  std::uint64_t first_step_after(double t) const;
  /// The step whose time matches t within tol, if any.
  std::optional<std::uint64_t> step_of(double t, double tol) const;

  friend bool operator==(const RatioForm&, const RatioForm&) = default;
};

struct InspectionRecord {
  Ordinal index;  // always a successor ordinal in a valid history
  double time = 0.0;
  PlayerSet attempted = PlayerSet::none;
  PlayerSet actual = PlayerSet::none;
  friend bool operator==(const InspectionRecord&, const InspectionRecord&) = default;
};

/// A run of explicitly materialized records at consecutive indices
/// start_index, start_index + 1, ...
struct ExplicitSegment {
  struct Rec {
    double time = 0.0;
    PlayerSet attempted = PlayerSet::none;
    PlayerSet actual = PlayerSet::none;
    friend bool operator==(const Rec&, const Rec&) = default;
  };
  Ordinal start_index;
  std::vector<Rec> recs;
  friend bool operator==(const ExplicitSegment&, const ExplicitSegment&) = default;
};

/// Symbolic tail of a transfinite cascade: records at index start_index + j
/// with times form.time_at(n_begin + j) for all j >= 0, all with the same
/// attempted/actual pattern, followed (once closed) by the limit point at
/// limit_index with time limit_time.
struct CascadeSegment {
  RatioForm form;
  std::uint64_t n_begin = 1;
  Ordinal start_index;
  PlayerSet attempted = PlayerSet::none;
  PlayerSet actual = PlayerSet::none;
  bool closed = false;
  Ordinal limit_index;
  double limit_time = 0.0;
  friend bool operator==(const CascadeSegment&, const CascadeSegment&) = default;
};

using HistorySegment = std::variant<ExplicitSegment, CascadeSegment>;

struct Violation {
  Ordinal index;
  std::string message;
};

/// Ordinal-indexed inspection history. t_0 = 0 always; times strictly
/// increase; at every limit ordinal the time is the supremum of the earlier
/// times. Transfinite prefixes are held as closed-form cascade segments, never
/// materialized. Value semantics: the *appended/with_* members return new
/// histories, the imperative members mutate an exclusively owned value.
class History {
 public:
  History() = default;
  static History empty() { return History{}; }

  // -- queries ---------------------------------------------------------------
  /// Final index. Requires no open (unclosed) cascade.
  const Ordinal& alpha_star() const;
  /// Time at the final index; 0 for the empty history.
  double final_time() const;
  bool has_open_cascade() const { return open_; }
  std::size_t segment_count() const { return segments_.size(); }
  const std::vector<HistorySegment>& segments() const { return segments_; }
  /// Time at an arbitrary index alpha <= alpha_star, if defined.
  std::optional<double> time_at(const Ordinal& alpha) const;
  /// Explicitly materialized records, in order (cascade tails excluded).
  std::vector<InspectionRecord> materialized_records() const;
  std::size_t explicit_record_count() const;
  /// Last record if the final segment is explicit and nonempty.
  std::optional<InspectionRecord> last_record() const;
  /// Gap between the two most recent defined times (final_time itself for
  /// histories with fewer than two events).
  double last_gap() const;

  // -- construction ----------------------------------------------------------
  /// Appends one inspection record at a strictly later finite time.
  /// Throws std::invalid_argument on non-increasing time or malformed sets.
  void append(double time, PlayerSet attempted, PlayerSet actual);
  History appended(double time, PlayerSet attempted, PlayerSet actual) const;

  /// Appends an open cascade whose first step lies strictly in the future.
  void open_cascade(RatioForm form, std::uint64_t n_begin, PlayerSet attempted,
                    PlayerSet actual);
  History with_open_cascade(RatioForm form, std::uint64_t n_begin, PlayerSet attempted,
                            PlayerSet actual) const;

  /// Closes the trailing cascade: alpha_star becomes the least limit ordinal
  /// above all covered indices and its time becomes limit_time. Errors if the
  /// final segment is not an open cascade or the supremum does not match
  /// limit_time within 1e-12.
  void close_limit(double limit_time);
  History with_closed_limit(double limit_time) const;

  /// Converts the maximal explicit suffix matching `form` (same singleton
  /// pattern, consecutive steps, times within tol) into a closed cascade.
  /// Returns false (history unchanged) when fewer than min_len records match.
  bool try_splice_cascade(const RatioForm& form, PlayerSet attempted, PlayerSet actual,
                          double tol, std::size_t min_len = 2);

  /// Checks every history invariant; one entry per failure. An open trailing
  /// cascade is itself reported (times at its limit are not yet defined).
  std::vector<Violation> validate() const;

  /// Assembles a history from raw segments without any checking. Intended for
  /// parsers and for tests that need invalid fixtures.
  static History from_segments_unchecked(std::vector<HistorySegment> segments);

  friend bool operator==(const History&, const History&) = default;

 private:
  const Ordinal& next_index() const;  // index the next record would take

  std::vector<HistorySegment> segments_;
  Ordinal alpha_star_;       // 0 for the empty history
  double final_time_ = 0.0;  // t_0 = 0 convention (sup over the empty set)
  Ordinal next_index_ = Ordinal(1);
  bool open_ = false;
};

struct Discovery {
  int by = 1;
  double at = 0.0;
  friend bool operator==(const Discovery&, const Discovery&) = default;
};

/// A finished (or truncated) run of the game. Like a history except the final
/// time may be infinite: tail_infinite marks a play in which neither player
/// ever inspects again.
struct Play {
  History history;
  std::optional<Discovery> discovery;
  bool tail_infinite = false;
  bool truncated = false;

  double final_time() const { return tail_infinite ? kNeverTime : history.final_time(); }
  std::vector<Violation> validate() const;
  friend bool operator==(const Play&, const Play&) = default;
};

/// The 2w schedule fixture: t_n = n/(n+1), t_w = 1, t_{w+n} = 1 + n/(n+1),
/// t_{w*2} = 2, every inspection attempted and done by player 1.
History zeno_example_history();

// Line-oriented text format. One line per explicit record
// `index<TAB>time<TAB>attempted<TAB>actual`; cascade segments as
// `CASCADE<TAB>ratio<TAB>params<TAB>limit-index<TAB>limit-time`; plays append
// one `OUTCOME<TAB>...` line. Doubles use shortest round-trip rendering, so
// serialize -> parse -> serialize is byte-identical.
std::string serialize(const History& h);
std::string serialize(const Play& p);

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
History parse_history(std::string_view text);
Play parse_play(std::string_view text);

std::string format_double(double v);

}  // namespace ohg
