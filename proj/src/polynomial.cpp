#include "clbf/polynomial.hpp"

#include <charconv>
#include <cmath>
#include <limits>

#include "clbf/errors.hpp"

namespace clbf {

std::string format_real(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return std::to_string(v);
  return std::string(buf, ptr);
}

Polynomial::Polynomial(int num_vars, std::vector<Monomial> terms) : num_vars_(num_vars), terms_(std::move(terms)) {
  if (num_vars < 1) throw InputError("polynomial needs at least one variable");
  for (const Monomial& t : terms_) {
    if (static_cast<int>(t.exponents.size()) != num_vars) {
      throw InputError("monomial has " + std::to_string(t.exponents.size()) + " exponents, expected " +
                       std::to_string(num_vars));
    }
    for (int e : t.exponents) {
      if (e < 0) throw InputError("negative exponent in monomial");
    }
    if (!std::isfinite(t.coeff)) throw InputError("non-finite polynomial coefficient");
  }
}

Polynomial Polynomial::constant(int num_vars, double value) {
  std::vector<Monomial> terms;
  if (value != 0.0) terms.push_back({value, std::vector<int>(num_vars, 0)});
  return Polynomial(num_vars, std::move(terms));
}

double Polynomial::operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != num_vars_) {
    throw InputError("polynomial in " + std::to_string(num_vars_) + " variables evaluated at a point of dimension " +
                     std::to_string(x.size()));
  }
  double sum = 0.0;
  for (const Monomial& t : terms_) {
    double prod = t.coeff;
    for (int i = 0; i < num_vars_; ++i) {
      if (t.exponents[i] != 0) prod *= int_pow(x[i], t.exponents[i]);
    }
    sum += prod;
  }
  return sum;
}

Polynomial Polynomial::partial(int var) const {
  if (var < 0 || var >= num_vars_) throw InputError("partial derivative variable out of range");
  std::vector<Monomial> out;
  for (const Monomial& t : terms_) {
    const int e = t.exponents[var];
    if (e == 0) continue;
    Monomial d = t;
    d.coeff *= e;
    d.exponents[var] = e - 1;
    out.push_back(std::move(d));
  }
  return Polynomial(num_vars_, std::move(out));
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (size_t k = 0; k < terms_.size(); ++k) {
    const Monomial& t = terms_[k];
    const double mag = std::abs(t.coeff);
    const bool negative = std::signbit(t.coeff);
    if (k == 0) {
      if (negative) out += "-";
    } else {
      out += negative ? " - " : " + ";
    }
    out += format_real(mag);
    for (int i = 0; i < num_vars_; ++i) {
      const int e = t.exponents[i];
      if (e == 0) continue;
      out += " * x" + std::to_string(i + 1);
      if (e != 1) out += "^" + std::to_string(e);
    }
  }
  return out;
}

namespace {

class PolyParser {
 public:
  PolyParser(std::string_view text, int num_vars) : text_(text), n_(num_vars) {}

  Polynomial run() {
    std::vector<Monomial> terms;
    skip_ws();
    if (at_end()) fail("empty polynomial");
    double sign = 1.0;
    if (peek() == '+' || peek() == '-') {
      sign = peek() == '-' ? -1.0 : 1.0;
      ++pos_;
    }
    while (true) {
      Monomial m = term();
      m.coeff *= sign;
      if (m.coeff != 0.0) terms.push_back(std::move(m));
      skip_ws();
      if (at_end()) break;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1.0 : 1.0;
        ++pos_;
        continue;
      }
      fail(std::string("unexpected character '") + peek() + "'");
    }
    return Polynomial(n_, std::move(terms));
  }

 private:
  Monomial term() {
    Monomial m{1.0, std::vector<int>(n_, 0)};
    factor(m);
    while (true) {
      skip_ws();
      if (!at_end() && peek() == '*') {
        ++pos_;
        factor(m);
      } else {
        break;
      }
    }
    return m;
  }

  void factor(Monomial& m) {
    skip_ws();
    if (at_end()) fail("expected a number or variable");
    const char c = peek();
    if (c == 'x') {
      ++pos_;
      const long long idx = integer("variable index");
      if (idx < 1 || idx > n_) fail("variable x" + std::to_string(idx) + " out of range 1.." + std::to_string(n_));
      long long power = 1;
      skip_ws();
      if (!at_end() && peek() == '^') {
        ++pos_;
        skip_ws();
        power = integer("exponent");
      }
      m.exponents[idx - 1] += static_cast<int>(power);
      return;
    }
    if ((c >= '0' && c <= '9') || c == '.') {
      size_t end = pos_;
      while (end < text_.size()) {
        const char d = text_[end];
        const bool exp_sign = (d == '+' || d == '-') && end > pos_ && (text_[end - 1] == 'e' || text_[end - 1] == 'E');
        if ((d >= '0' && d <= '9') || d == '.' || d == 'e' || d == 'E' || exp_sign) {
          ++end;
        } else {
          break;
        }
      }
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + end, v);
      if (ec != std::errc() || ptr != text_.data() + end || !std::isfinite(v)) fail("malformed number");
      pos_ = end;
      m.coeff *= v;
      return;
    }
    fail(std::string("unexpected character '") + c + "'");
  }

  long long integer(const char* what) {
    const size_t start = pos_;
    while (!at_end() && peek() >= '0' && peek() <= '9') ++pos_;
    if (pos_ == start) fail(std::string("expected ") + what);
    long long v = 0;
    std::from_chars(text_.data() + start, text_.data() + pos_, v);
    if (v > 64) fail(std::string(what) + " too large");
    return v;
  }

  void skip_ws() {
    while (!at_end() && (peek() == ' ' || peek() == '\t')) ++pos_;
  }
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& msg) const {
    throw InputError("polynomial '" + std::string(text_) + "' column " + std::to_string(pos_ + 1) + ": " + msg);
  }

  std::string_view text_;
  int n_;
  size_t pos_ = 0;
};

}  // namespace

Polynomial Polynomial::parse(std::string_view text, int num_vars) {
  if (num_vars < 1) throw InputError("polynomial needs at least one variable");
  return PolyParser(text, num_vars).run();
}

}  // namespace clbf
