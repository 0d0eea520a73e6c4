#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace clbf {

struct Monomial {
  double coeff = 0.0;
  std::vector<int> exponents;  // one per variable

  bool operator==(const Monomial&) const = default;
};

/// Sparse multivariate polynomial in x1..xn, kept as the list of terms it was
/// built from (like terms are not merged, so text round-trips term by term).
///
/// Text grammar (whitespace allowed between tokens):
///
///     poly   := [sign] term { sign term }
///     sign   := '+' | '-'
///     term   := factor { '*' factor }
///     factor := number | 'x' index [ '^' power ]
///
/// `number` is a decimal real (`2`, `0.5`, `1e-3`), `index` is 1-based and at
/// most n, `power` a non-negative integer. A term's coefficient is the product
/// of its numeric factors (1 if none); repeated variables add exponents. Terms
/// whose coefficient is exactly zero are dropped, so "0" is the zero polynomial.
class Polynomial {
 public:
  Polynomial() = default;
  /// Throws InputError on exponent-length mismatch, negative exponent or
  /// non-finite coefficient.
  Polynomial(int num_vars, std::vector<Monomial> terms);

  /// Throws InputError with the offending column on malformed text.
  static Polynomial parse(std::string_view text, int num_vars);
  static Polynomial constant(int num_vars, double value);

  int num_vars() const { return num_vars_; }
  const std::vector<Monomial>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Polynomial partial(int var) const;

  /// Canonical text, coefficients printed with round-trip precision.
  std::string to_string() const;

  bool operator==(const Polynomial&) const = default;

 private:
  int num_vars_ = 0;
  std::vector<Monomial> terms_;
};

/// x^p for small non-negative integer p by repeated squaring.
inline double int_pow(double x, int p) {
  double result = 1.0;
  double base = x;
  while (p > 0) {
    if (p & 1) result *= base;
    base *= base;
    p >>= 1;
  }
  return result;
}

/// Shortest decimal text that parses back to exactly `v`.
std::string format_real(double v);

}  // namespace clbf
