#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <utility>

namespace superlin {

/// Values above this are never produced by direct evaluation.
inline constexpr double kDirectBound = 1e300;
/// log(kDirectBound).
inline const double kLogDirectBound = std::log(kDirectBound);

/// A nonnegative real stored either directly or by its natural logarithm.
///
/// Solutions of superlinear equations reach magnitudes like exp(exp(60)); those only
/// exist here as logarithms. `log()` is always available, `value()` returns +inf once
/// the magnitude leaves the double range.
class Magnitude {
 public:
  Magnitude() = default;

  [[nodiscard]] static Magnitude from_value(double v) {
    Magnitude m;
    m.log_ = v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
    m.value_ = v;
    m.log_form_ = false;
    return m;
  }

  [[nodiscard]] static Magnitude from_log(double log_v) {
    Magnitude m;
    m.log_ = log_v;
    m.log_form_ = log_v > kLogDirectBound;
    m.value_ = m.log_form_ ? std::numeric_limits<double>::infinity() : std::exp(log_v);
    return m;
  }

  [[nodiscard]] double log() const noexcept { return log_; }
  [[nodiscard]] double value() const noexcept { return value_; }
  /// True when the magnitude is only known as a logarithm.
  [[nodiscard]] bool is_log_form() const noexcept { return log_form_; }

 private:
  double log_ = -std::numeric_limits<double>::infinity();
  double value_ = 0.0;
  bool log_form_ = false;
};

/// log(exp(a) + exp(b)) without overflow.
[[nodiscard]] inline double log_add_exp(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == -std::numeric_limits<double>::infinity()) return a;
  return a + std::log1p(std::exp(b - a));
}

/// log(exp(a) - exp(b)) for a >= b.
[[nodiscard]] inline double log_sub_exp(double a, double b) {
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double d = b - a;
  return a + (d > -0.6931471805599453 ? std::log(-std::expm1(d)) : std::log1p(-std::exp(d)));
}

/// Shortest decimal text that round-trips the double.
[[nodiscard]] std::string format_double(double v);

}  // namespace superlin
