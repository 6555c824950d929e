#include "ohg/ordinal.hpp"

#include <charconv>
#include <stdexcept>

namespace ohg {

Ordinal::Ordinal(std::uint64_t n) {
  if (n > 0) terms_.push_back(Term{0, n});
}

Ordinal Ordinal::omega() { return omega_power(1, 1); }

Ordinal Ordinal::omega_times(std::uint64_t c) { return omega_power(1, c); }

Ordinal Ordinal::omega_power(std::uint32_t exponent, std::uint64_t coefficient) {
  Ordinal o;
  if (coefficient > 0) o.terms_.push_back(Term{exponent, coefficient});
  return o;
}

Ordinal Ordinal::from_terms(std::vector<Term> terms) {
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (terms[i].coefficient == 0)
      throw std::invalid_argument("ordinal term with zero coefficient");
    if (i > 0 && terms[i - 1].exponent <= terms[i].exponent)
      throw std::invalid_argument("ordinal exponents must strictly decrease");
  }
  Ordinal o;
  o.terms_ = std::move(terms);
  return o;
}

Ordinal Ordinal::successor() const { return plus_finite(1); }

std::optional<Ordinal> Ordinal::predecessor() const {
  if (!is_successor()) return std::nullopt;
  Ordinal o = *this;
  if (o.terms_.back().coefficient > 1)
    --o.terms_.back().coefficient;
  else
    o.terms_.pop_back();
  return o;
}

Ordinal operator+(const Ordinal& a, const Ordinal& b) {
  if (b.is_zero()) return a;
  const std::uint32_t lead = b.terms_.front().exponent;
  Ordinal out;
  for (const auto& t : a.terms_) {
    if (t.exponent > lead) out.terms_.push_back(t);
  }
  // Merge when the surviving left part ends at the leading exponent of b.
  std::size_t start = 0;
  if (!a.terms_.empty()) {
    for (const auto& t : a.terms_) {
      if (t.exponent == lead) {
        out.terms_.push_back(Ordinal::Term{lead, t.coefficient + b.terms_.front().coefficient});
        start = 1;
        break;
      }
    }
  }
  for (std::size_t i = start; i < b.terms_.size(); ++i) out.terms_.push_back(b.terms_[i]);
  return out;
}

Ordinal Ordinal::plus_finite(std::uint64_t n) const {
  if (n == 0) return *this;
  Ordinal o = *this;
  if (!o.terms_.empty() && o.terms_.back().exponent == 0)
    o.terms_.back().coefficient += n;
  else
    o.terms_.push_back(Term{0, n});
  return o;
}

Ordinal Ordinal::fundamental_term(std::uint64_t n) const {
  if (is_zero() || !is_limit())
    throw std::domain_error("fundamental sequence requires a nonzero limit ordinal");
  // *this = base + w^k with k >= 1; the sequence is base + fund(w^k, n).
  Ordinal base = *this;
  const std::uint32_t k = base.terms_.back().exponent;
  if (base.terms_.back().coefficient > 1)
    --base.terms_.back().coefficient;
  else
    base.terms_.pop_back();
  if (k == 1) return base.plus_finite(n);
  return base + omega_power(k - 1, n == 0 ? 0 : n);
}

Ordinal Ordinal::least_limit_above() const {
  Ordinal o = *this;
  if (!o.terms_.empty() && o.terms_.back().exponent == 0) o.terms_.pop_back();
  return o + omega();
}

std::optional<std::uint64_t> Ordinal::finite_offset_from(const Ordinal& base) const {
  auto split = [](const Ordinal& o) {
    std::uint64_t fin = 0;
    std::vector<Term> inf = o.terms_;
    if (!inf.empty() && inf.back().exponent == 0) {
      fin = inf.back().coefficient;
      inf.pop_back();
    }
    return std::pair{inf, fin};
  };
  auto [inf_a, fin_a] = split(*this);
  auto [inf_b, fin_b] = split(base);
  if (inf_a != inf_b || fin_a < fin_b) return std::nullopt;
  return fin_a - fin_b;
}

std::strong_ordering Ordinal::operator<=>(const Ordinal& other) const {
  const std::size_t n = std::min(terms_.size(), other.terms_.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (terms_[i].exponent != other.terms_[i].exponent)
      return terms_[i].exponent <=> other.terms_[i].exponent;
    if (terms_[i].coefficient != other.terms_[i].coefficient)
      return terms_[i].coefficient <=> other.terms_[i].coefficient;
  }
  return terms_.size() <=> other.terms_.size();
}

std::string Ordinal::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (std::size_t i = 0; i < terms_.size(); ++i) {
    if (i > 0) out += " + ";
    const Term& t = terms_[i];
    if (t.exponent == 0) {
      out += std::to_string(t.coefficient);
      continue;
    }
    out += "w";
    if (t.exponent > 1) {
      out += "^";
      out += std::to_string(t.exponent);
    }
    if (t.coefficient > 1) {
      out += "*";
      out += std::to_string(t.coefficient);
    }
  }
  return out;
}

namespace {

// Strict natural-number parse: no sign, no leading zeros (except "0" itself).
std::optional<std::uint64_t> parse_nat(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.size() > 1 && s.front() == '0') return std::nullopt;
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

}  // namespace

std::optional<Ordinal> Ordinal::parse(std::string_view text) {
  if (text == "0") return Ordinal{};
  std::vector<Term> terms;
  std::size_t pos = 0;
  while (true) {
    std::size_t next = text.find(" + ", pos);
    std::string_view piece =
        next == std::string_view::npos ? text.substr(pos) : text.substr(pos, next - pos);
    Term term;
    if (!piece.empty() && piece.front() == 'w') {
      piece.remove_prefix(1);
      term.exponent = 1;
      if (!piece.empty() && piece.front() == '^') {
        piece.remove_prefix(1);
        std::size_t star = piece.find('*');
        auto exp = parse_nat(star == std::string_view::npos ? piece : piece.substr(0, star));
        // canonical form never spells w^0 or w^1
        if (!exp || *exp < 2 || *exp > 0xFFFFFFFFull) return std::nullopt;
        term.exponent = static_cast<std::uint32_t>(*exp);
        piece = star == std::string_view::npos ? std::string_view{} : piece.substr(star);
      }
      term.coefficient = 1;
      if (!piece.empty()) {
        if (piece.front() != '*') return std::nullopt;
        auto coeff = parse_nat(piece.substr(1));
        if (!coeff || *coeff < 2) return std::nullopt;  // "*1" is non-canonical
        term.coefficient = *coeff;
      }
    } else {
      auto coeff = parse_nat(piece);
      if (!coeff || *coeff == 0) return std::nullopt;  // bare 0 only as the whole string
      term.exponent = 0;
      term.coefficient = *coeff;
    }
    if (!terms.empty() && terms.back().exponent <= term.exponent) return std::nullopt;
    terms.push_back(term);
    if (next == std::string_view::npos) break;
    pos = next + 3;
  }
  return from_terms(std::move(terms));
}

}  // namespace ohg
