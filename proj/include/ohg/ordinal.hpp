#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ohg {

/// Countable ordinal below w^w in Cantor normal form: a strictly
/// exponent-decreasing sum of terms w^exponent * coefficient with positive
/// coefficients. The empty sum is 0. These index inspection histories; the
/// restriction to natural exponents keeps every index a finite term list
/// while still covering arbitrarily nested cascades.
class Ordinal {
 public:
  struct Term {
    std::uint32_t exponent = 0;
    std::uint64_t coefficient = 0;
    friend bool operator==(const Term&, const Term&) = default;
  };

  Ordinal() = default;  // zero
  Ordinal(std::uint64_t n);
  static Ordinal omega();
  static Ordinal omega_times(std::uint64_t c);
  static Ordinal omega_power(std::uint32_t exponent, std::uint64_t coefficient = 1);
  /// Builds from explicit terms; throws std::invalid_argument unless the list
  /// is in Cantor normal form.
  static Ordinal from_terms(std::vector<Term> terms);

  bool is_zero() const { return terms_.empty(); }
  bool is_finite() const { return terms_.empty() || terms_.front().exponent == 0; }
  /// True iff there is no w^0 term. By convention 0 counts as a limit.
  bool is_limit() const { return terms_.empty() || terms_.back().exponent > 0; }
  bool is_successor() const { return !is_limit(); }

  Ordinal successor() const;
  /// Defined for successors only.
  std::optional<Ordinal> predecessor() const;

  /// Ordinal addition in CNF; left terms below the leading exponent of the
  /// right operand are absorbed.
  friend Ordinal operator+(const Ordinal& a, const Ordinal& b);
  Ordinal plus_finite(std::uint64_t n) const;

  /// n-th element of the canonical fundamental sequence of a nonzero limit
  /// ordinal: strictly increasing in n with supremum equal to *this.
  /// Throws std::domain_error for zero or successor input.
  Ordinal fundamental_term(std::uint64_t n) const;

  /// Least limit ordinal strictly above *this.
  Ordinal least_limit_above() const;

  /// If *this == base + k for a finite k >= 0, returns k.
  std::optional<std::uint64_t> finite_offset_from(const Ordinal& base) const;

  std::strong_ordering operator<=>(const Ordinal& other) const;
  bool operator==(const Ordinal& other) const = default;

  /// Canonical rendering, e.g. "0", "5", "w", "w*2 + 5", "w^2*3 + w + 1".
  /// parse() is the exact inverse and rejects non-canonical spellings.
  std::string to_string() const;
  static std::optional<Ordinal> parse(std::string_view text);

  const std::vector<Term>& terms() const { return terms_; }

 private:
  std::vector<Term> terms_;
};

}  // namespace ohg
