#include "ohg/history.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace ohg {

std::string_view player_set_name(PlayerSet s) {
  switch (s) {
    case PlayerSet::p1: return "1";
    case PlayerSet::p2: return "2";
    case PlayerSet::both: return "12";
    default: return "";
  }
}

std::optional<PlayerSet> parse_player_set(std::string_view text) {
  if (text == "1") return PlayerSet::p1;
  if (text == "2") return PlayerSet::p2;
  if (text == "12") return PlayerSet::both;
  return std::nullopt;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

namespace {

std::optional<double> parse_double(std::string_view s) {
  if (s == "inf") return kNeverTime;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

constexpr double kLimitTol = 1e-12;

}  // namespace

std::uint64_t RatioForm::first_step_after(double t) const {
  if (span <= 0.0) return 0;
  if (time_at(1) > t) return 1;
  const double f = (t - base) / span;
  if (f >= 1.0) return 0;  // t is at or above the supremum
  double guess = std::floor(f / (1.0 - f)) + 1.0;
  if (guess < 1.0) guess = 1.0;
  auto n = static_cast<std::uint64_t>(guess);
  while (n > 1 && time_at(n - 1) > t) --n;
  while (time_at(n) <= t) ++n;
  return n;
}

std::optional<std::uint64_t> RatioForm::step_of(double t, double tol) const {
  if (span <= 0.0) return std::nullopt;
  const double f = (t - base) / span;
  if (f <= 0.0 || f >= 1.0) return std::nullopt;
  const double guess = std::round(f / (1.0 - f));
  if (guess < 1.0 || guess > 9e15) return std::nullopt;
  const auto n = static_cast<std::uint64_t>(guess);
  for (std::uint64_t cand = n > 1 ? n - 1 : 1; cand <= n + 1; ++cand) {
    if (std::abs(time_at(cand) - t) <= tol) return cand;
  }
  return std::nullopt;
}

const Ordinal& History::alpha_star() const {
  if (open_) throw std::logic_error("alpha_star undefined while a cascade is open");
  return alpha_star_;
}

double History::final_time() const {
  if (open_) throw std::logic_error("final_time undefined while a cascade is open");
  return final_time_;
}

std::optional<double> History::time_at(const Ordinal& alpha) const {
  if (alpha.is_zero()) return 0.0;
  for (const auto& seg : segments_) {
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) {
      if (auto off = alpha.finite_offset_from(ex->start_index);
          off && *off < ex->recs.size())
        return ex->recs[*off].time;
    } else {
      const auto& c = std::get<CascadeSegment>(seg);
      if (c.closed && alpha == c.limit_index) return c.limit_time;
      if (auto off = alpha.finite_offset_from(c.start_index))
        return c.form.time_at(c.n_begin + *off);
    }
  }
  return std::nullopt;
}

std::vector<InspectionRecord> History::materialized_records() const {
  std::vector<InspectionRecord> out;
  for (const auto& seg : segments_) {
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) {
      for (std::size_t j = 0; j < ex->recs.size(); ++j) {
        const auto& r = ex->recs[j];
        out.push_back({ex->start_index.plus_finite(j), r.time, r.attempted, r.actual});
      }
    }
  }
  return out;
}

std::size_t History::explicit_record_count() const {
  std::size_t n = 0;
  for (const auto& seg : segments_)
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) n += ex->recs.size();
  return n;
}

std::optional<InspectionRecord> History::last_record() const {
  if (segments_.empty()) return std::nullopt;
  const auto* ex = std::get_if<ExplicitSegment>(&segments_.back());
  if (!ex || ex->recs.empty()) return std::nullopt;
  const std::size_t j = ex->recs.size() - 1;
  const auto& r = ex->recs[j];
  return InspectionRecord{ex->start_index.plus_finite(j), r.time, r.attempted, r.actual};
}

double History::last_gap() const {
  if (open_) throw std::logic_error("last_gap undefined while a cascade is open");
  if (segments_.empty()) return final_time_;
  const auto* ex = std::get_if<ExplicitSegment>(&segments_.back());
  if (!ex) return 0.0;  // times accumulate into a just-closed limit
  const auto& recs = ex->recs;
  if (recs.size() >= 2) return recs.back().time - recs[recs.size() - 2].time;
  double prev = 0.0;
  if (segments_.size() >= 2) {
    const auto& before = segments_[segments_.size() - 2];
    if (const auto* pex = std::get_if<ExplicitSegment>(&before))
      prev = pex->recs.back().time;
    else
      prev = std::get<CascadeSegment>(before).limit_time;
  }
  return recs.back().time - prev;
}

namespace {

void check_record_sets(PlayerSet attempted, PlayerSet actual) {
  if (attempted == PlayerSet::none)
    throw std::invalid_argument("attempted set must be nonempty");
  if (!is_singleton(actual))
    throw std::invalid_argument("actual set must be a singleton");
  if (!is_subset(actual, attempted))
    throw std::invalid_argument("actual set must be contained in attempted");
}

}  // namespace

void History::append(double time, PlayerSet attempted, PlayerSet actual) {
  if (open_) throw std::invalid_argument("cannot append past an open cascade");
  if (!std::isfinite(time)) throw std::invalid_argument("inspection time must be finite");
  if (!(time > final_time_))
    throw std::invalid_argument("inspection time must strictly increase");
  check_record_sets(attempted, actual);
  if (segments_.empty() || !std::holds_alternative<ExplicitSegment>(segments_.back()))
    segments_.push_back(ExplicitSegment{next_index_, {}});
  std::get<ExplicitSegment>(segments_.back())
      .recs.push_back({time, attempted, actual});
  alpha_star_ = next_index_;
  next_index_ = alpha_star_.successor();
  final_time_ = time;
}

History History::appended(double time, PlayerSet attempted, PlayerSet actual) const {
  History h = *this;
  h.append(time, attempted, actual);
  return h;
}

void History::open_cascade(RatioForm form, std::uint64_t n_begin, PlayerSet attempted,
                           PlayerSet actual) {
  if (open_) throw std::invalid_argument("cascade already open");
  if (form.span <= 0.0) throw std::invalid_argument("cascade span must be positive");
  if (n_begin < 1) throw std::invalid_argument("cascade steps start at n >= 1");
  if (!(form.time_at(n_begin) > final_time_))
    throw std::invalid_argument("cascade must start strictly in the future");
  check_record_sets(attempted, actual);
  CascadeSegment seg;
  seg.form = form;
  seg.n_begin = n_begin;
  seg.start_index = next_index_;
  seg.attempted = attempted;
  seg.actual = actual;
  seg.closed = false;
  seg.limit_index = next_index_.least_limit_above();
  seg.limit_time = form.supremum();
  segments_.push_back(std::move(seg));
  open_ = true;
}

History History::with_open_cascade(RatioForm form, std::uint64_t n_begin,
                                   PlayerSet attempted, PlayerSet actual) const {
  History h = *this;
  h.open_cascade(form, n_begin, attempted, actual);
  return h;
}

void History::close_limit(double limit_time) {
  if (!open_)
    throw std::invalid_argument(segments_.empty() ||
                                        std::holds_alternative<ExplicitSegment>(segments_.back())
                                    ? "close_limit requires a trailing cascade"
                                    : "cascade already closed");
  auto& c = std::get<CascadeSegment>(segments_.back());
  if (!std::isfinite(limit_time) ||
      std::abs(c.form.supremum() - limit_time) > kLimitTol)
    throw std::invalid_argument("limit time does not match the cascade supremum");
  c.closed = true;
  c.limit_time = limit_time;
  alpha_star_ = c.limit_index;
  final_time_ = limit_time;
  next_index_ = alpha_star_.successor();
  open_ = false;
}

History History::with_closed_limit(double limit_time) const {
  History h = *this;
  h.close_limit(limit_time);
  return h;
}

bool History::try_splice_cascade(const RatioForm& form, PlayerSet attempted,
                                 PlayerSet actual, double tol, std::size_t min_len) {
  if (open_ || segments_.empty()) return false;
  auto* ex = std::get_if<ExplicitSegment>(&segments_.back());
  if (!ex || ex->recs.empty()) return false;
  auto last_step = form.step_of(ex->recs.back().time, tol);
  if (!last_step) return false;
  // Maximal suffix matching consecutive steps ..., *last_step - 1, *last_step.
  std::size_t len = 0;
  while (len < ex->recs.size() && *last_step > len) {
    const auto& r = ex->recs[ex->recs.size() - 1 - len];
    if (r.attempted != attempted || r.actual != actual) break;
    if (std::abs(r.time - form.time_at(*last_step - len)) > tol) break;
    ++len;
  }
  if (len < min_len) return false;
  const std::uint64_t n_begin = *last_step - len + 1;
  CascadeSegment seg;
  seg.form = form;
  seg.n_begin = n_begin;
  seg.start_index = ex->start_index.plus_finite(ex->recs.size() - len);
  seg.attempted = attempted;
  seg.actual = actual;
  seg.closed = true;
  seg.limit_index = seg.start_index.least_limit_above();
  seg.limit_time = form.supremum();
  ex->recs.resize(ex->recs.size() - len);
  if (ex->recs.empty()) segments_.pop_back();
  alpha_star_ = seg.limit_index;
  final_time_ = seg.limit_time;
  next_index_ = alpha_star_.successor();
  segments_.push_back(std::move(seg));
  return true;
}

std::vector<Violation> History::validate() const {
  std::vector<Violation> out;
  Ordinal expected = Ordinal(1);
  double prev_time = 0.0;
  for (std::size_t si = 0; si < segments_.size(); ++si) {
    const auto& seg = segments_[si];
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) {
      if (ex->recs.empty()) {
        out.push_back({ex->start_index, "empty explicit segment"});
        continue;
      }
      if (ex->start_index != expected)
        out.push_back({ex->start_index, "segment does not continue the index sequence"});
      for (std::size_t j = 0; j < ex->recs.size(); ++j) {
        const Ordinal idx = ex->start_index.plus_finite(j);
        const auto& r = ex->recs[j];
        if (!idx.is_successor())
          out.push_back({idx, "inspection record at a non-successor index"});
        if (!std::isfinite(r.time))
          out.push_back({idx, "non-finite inspection time"});
        else if (!(r.time > prev_time))
          out.push_back({idx, "times must strictly increase"});
        if (r.attempted == PlayerSet::none)
          out.push_back({idx, "attempted set is empty"});
        if (!is_singleton(r.actual))
          out.push_back({idx, "actual set is not a singleton"});
        else if (!is_subset(r.actual, r.attempted))
          out.push_back({idx, "actual set is not contained in attempted"});
        prev_time = r.time;
      }
      expected = ex->start_index.plus_finite(ex->recs.size());
    } else {
      const auto& c = std::get<CascadeSegment>(seg);
      if (c.start_index != expected)
        out.push_back({c.start_index, "segment does not continue the index sequence"});
      if (c.form.span <= 0.0)
        out.push_back({c.start_index, "cascade times are not increasing"});
      if (c.n_begin < 1) out.push_back({c.start_index, "cascade step index below 1"});
      if (!(c.form.time_at(c.n_begin) > prev_time))
        out.push_back({c.start_index, "times must strictly increase into the cascade"});
      if (c.attempted == PlayerSet::none)
        out.push_back({c.start_index, "attempted set is empty"});
      if (!is_singleton(c.actual) || !is_subset(c.actual, c.attempted))
        out.push_back({c.start_index, "cascade actual/attempted pattern malformed"});
      if (c.limit_index != c.start_index.least_limit_above())
        out.push_back({c.limit_index, "cascade limit is not the least limit ordinal above"});
      if (!c.closed) {
        out.push_back({c.limit_index, "unclosed cascade segment"});
        if (si + 1 < segments_.size())
          out.push_back({c.limit_index, "open cascade is not the final segment"});
        prev_time = c.form.supremum();
        expected = c.limit_index.successor();
        continue;
      }
      if (std::abs(c.form.supremum() - c.limit_time) > kLimitTol)
        out.push_back(
            {c.limit_index,
             "limit-continuity violation: limit time " + format_double(c.limit_time) +
                 " differs from cascade supremum " + format_double(c.form.supremum())});
      prev_time = c.limit_time;
      expected = c.limit_index.successor();
    }
  }
  return out;
}

History History::from_segments_unchecked(std::vector<HistorySegment> segments) {
  History h;
  h.segments_ = std::move(segments);
  for (const auto& seg : h.segments_) {
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) {
      if (ex->recs.empty()) continue;
      h.alpha_star_ = ex->start_index.plus_finite(ex->recs.size() - 1);
      h.final_time_ = ex->recs.back().time;
      h.open_ = false;
    } else {
      const auto& c = std::get<CascadeSegment>(seg);
      h.alpha_star_ = c.limit_index;
      h.final_time_ = c.limit_time;
      h.open_ = !c.closed;
    }
  }
  h.next_index_ = h.alpha_star_.successor();
  return h;
}

std::vector<Violation> Play::validate() const {
  std::vector<Violation> out = history.validate();
  if (discovery && tail_infinite)
    out.push_back({Ordinal{}, "discovered play cannot have an infinite tail"});
  if (discovery) {
    auto last = history.last_record();
    if (!last || last->time != discovery->at || last->actual != singleton(discovery->by))
      out.push_back({last ? last->index : Ordinal{},
                     "discovery must coincide with the final inspection record"});
  }
  return out;
}

History zeno_example_history() {
  History h;
  h.open_cascade(RatioForm{0.0, 1.0}, 1, PlayerSet::p1, PlayerSet::p1);
  h.close_limit(1.0);
  h.open_cascade(RatioForm{1.0, 1.0}, 1, PlayerSet::p1, PlayerSet::p1);
  h.close_limit(2.0);
  return h;
}

namespace {

void serialize_segments(const History& h, std::string& out) {
  for (const auto& seg : h.segments()) {
    if (const auto* ex = std::get_if<ExplicitSegment>(&seg)) {
      for (std::size_t j = 0; j < ex->recs.size(); ++j) {
        const auto& r = ex->recs[j];
        out += ex->start_index.plus_finite(j).to_string();
        out += '\t';
        out += format_double(r.time);
        out += '\t';
        out += player_set_name(r.attempted);
        out += '\t';
        out += player_set_name(r.actual);
        out += '\n';
      }
    } else {
      const auto& c = std::get<CascadeSegment>(seg);
      if (!c.closed) throw std::logic_error("cannot serialize an open cascade");
      out += "CASCADE\tratio\t";
      out += "base=" + format_double(c.form.base);
      out += ";span=" + format_double(c.form.span);
      out += ";n0=" + std::to_string(c.n_begin);
      out += ";start=" + c.start_index.to_string();
      out += ";attempted=" + std::string(player_set_name(c.attempted));
      out += ";actual=" + std::string(player_set_name(c.actual));
      out += '\t';
      out += c.limit_index.to_string();
      out += '\t';
      out += format_double(c.limit_time);
      out += '\n';
    }
  }
}

}  // namespace

std::string serialize(const History& h) {
  std::string out;
  serialize_segments(h, out);
  return out;
}

std::string serialize(const Play& p) {
  std::string out;
  serialize_segments(p.history, out);
  out += "OUTCOME\t";
  if (p.discovery) {
    out += "discovered\t";
    out += std::to_string(p.discovery->by);
    out += '\t';
    out += format_double(p.discovery->at);
  } else {
    out += "undiscovered\t";
    out += format_double(p.final_time());
  }
  out += '\t';
  out += p.truncated ? "1" : "0";
  out += '\n';
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = s.find(sep, pos);
    if (next == std::string_view::npos) {
      out.push_back(s.substr(pos));
      return out;
    }
    out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw ParseError("line " + std::to_string(line_no) + ": " + what);
}

struct ParsedText {
  std::vector<HistorySegment> segments;
  std::optional<std::vector<std::string_view>> outcome;  // fields after "OUTCOME"
  std::size_t outcome_line = 0;
};

ParsedText parse_lines(std::string_view text) {
  ParsedText out;
  ExplicitSegment pending;
  bool has_pending = false;
  auto flush = [&] {
    if (has_pending) {
      out.segments.push_back(pending);
      pending.recs.clear();
      has_pending = false;
    }
  };
  std::size_t line_no = 0;
  for (std::string_view line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    auto fields = split(line, '\t');
    if (fields[0] == "OUTCOME") {
      flush();
      out.outcome = std::vector<std::string_view>(fields.begin() + 1, fields.end());
      out.outcome_line = line_no;
      continue;
    }
    if (out.outcome) fail(line_no, "content after OUTCOME line");
    if (fields[0] == "CASCADE") {
      if (fields.size() != 5) fail(line_no, "CASCADE line needs 5 fields");
      if (fields[1] != "ratio") fail(line_no, "unknown cascade formula id");
      flush();
      CascadeSegment c;
      c.closed = true;
      bool saw_base = false, saw_span = false, saw_n0 = false, saw_start = false,
           saw_att = false, saw_act = false;
      for (std::string_view kv : split(fields[2], ';')) {
        std::size_t eq = kv.find('=');
        if (eq == std::string_view::npos) fail(line_no, "malformed cascade parameter");
        std::string_view key = kv.substr(0, eq);
        std::string_view val = kv.substr(eq + 1);
        if (key == "base") {
          auto v = parse_double(val);
          if (!v) fail(line_no, "bad cascade base");
          c.form.base = *v;
          saw_base = true;
        } else if (key == "span") {
          auto v = parse_double(val);
          if (!v) fail(line_no, "bad cascade span");
          c.form.span = *v;
          saw_span = true;
        } else if (key == "n0") {
          std::uint64_t v = 0;
          auto [p, ec] = std::from_chars(val.data(), val.data() + val.size(), v);
          if (ec != std::errc{} || p != val.data() + val.size())
            fail(line_no, "bad cascade n0");
          c.n_begin = v;
          saw_n0 = true;
        } else if (key == "start") {
          auto o = Ordinal::parse(val);
          if (!o) fail(line_no, "bad cascade start index");
          c.start_index = *o;
          saw_start = true;
        } else if (key == "attempted") {
          auto s = parse_player_set(val);
          if (!s) fail(line_no, "bad cascade attempted set");
          c.attempted = *s;
          saw_att = true;
        } else if (key == "actual") {
          auto s = parse_player_set(val);
          if (!s) fail(line_no, "bad cascade actual set");
          c.actual = *s;
          saw_act = true;
        } else {
          fail(line_no, "unknown cascade parameter");
        }
      }
      if (!(saw_base && saw_span && saw_n0 && saw_start && saw_att && saw_act))
        fail(line_no, "missing cascade parameter");
      auto limit = Ordinal::parse(fields[3]);
      if (!limit) fail(line_no, "bad cascade limit index");
      c.limit_index = *limit;
      auto lt = parse_double(fields[4]);
      if (!lt) fail(line_no, "bad cascade limit time");
      c.limit_time = *lt;
      out.segments.push_back(std::move(c));
      continue;
    }
    if (fields.size() != 4) fail(line_no, "record line needs 4 fields");
    auto idx = Ordinal::parse(fields[0]);
    if (!idx) fail(line_no, "bad record index");
    auto time = parse_double(fields[1]);
    if (!time) fail(line_no, "bad record time");
    auto att = parse_player_set(fields[2]);
    auto act = parse_player_set(fields[3]);
    if (!att || !act) fail(line_no, "bad record player set");
    if (has_pending && *idx != pending.start_index.plus_finite(pending.recs.size()))
      flush();
    if (!has_pending) {
      pending.start_index = *idx;
      has_pending = true;
    }
    pending.recs.push_back({*time, *att, *act});
  }
  flush();
  return out;
}

}  // namespace

History parse_history(std::string_view text) {
  ParsedText parsed = parse_lines(text);
  if (parsed.outcome) fail(parsed.outcome_line, "unexpected OUTCOME line in a history");
  return History::from_segments_unchecked(std::move(parsed.segments));
}

Play parse_play(std::string_view text) {
  ParsedText parsed = parse_lines(text);
  if (!parsed.outcome) throw ParseError("play is missing its OUTCOME line");
  const auto& f = *parsed.outcome;
  Play p;
  p.history = History::from_segments_unchecked(std::move(parsed.segments));
  if (f.size() == 4 && f[0] == "discovered") {
    int by = f[1] == "1" ? 1 : f[1] == "2" ? 2 : 0;
    auto at = parse_double(f[2]);
    if (by == 0 || !at) fail(parsed.outcome_line, "malformed discovered outcome");
    p.discovery = Discovery{by, *at};
    p.truncated = f[3] == "1";
  } else if (f.size() == 3 && f[0] == "undiscovered") {
    auto ft = parse_double(f[1]);
    if (!ft) fail(parsed.outcome_line, "malformed undiscovered outcome");
    p.tail_infinite = std::isinf(*ft);
    p.truncated = f[2] == "1";
  } else {
    fail(parsed.outcome_line, "malformed OUTCOME line");
  }
  return p;
}

}  // namespace ohg
