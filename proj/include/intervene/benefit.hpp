#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "intervene/errors.hpp"

namespace intervene {

/// Strictly increasing benefit U(x) of a data rate x >= 0. Closed catalogue
/// plus a tabulated piecewise-linear escape hatch.
class BenefitFunction {
public:
  enum class Kind { identity, power, log_shifted, saturating_exp, tabulated };

  static BenefitFunction identity() { return BenefitFunction(Kind::identity, 0.0); }

  static BenefitFunction power(double p) {
    if (!(p > 0.0)) throw PreconditionError("power benefit: exponent must be positive");
    return BenefitFunction(Kind::power, p);
  }

  /// log(delta + x)
  static BenefitFunction log_shifted(double delta = 1e-3) {
    if (!(delta > 0.0)) throw PreconditionError("log-shifted benefit: shift must be positive");
    return BenefitFunction(Kind::log_shifted, delta);
  }

  /// 1 - exp(-lambda x)
  static BenefitFunction saturating_exp(double lambda = 1.0) {
    if (!(lambda > 0.0)) throw PreconditionError("saturating-exponential benefit: rate must be positive");
    return BenefitFunction(Kind::saturating_exp, lambda);
  }

  /// Linear interpolation through (x_k, y_k), linear extrapolation outside.
  static BenefitFunction tabulated(std::vector<double> xs, std::vector<double> ys) {
    if (xs.size() < 2 || xs.size() != ys.size())
      throw PreconditionError("tabulated benefit: need at least two (x, y) knots of equal count");
    for (std::size_t k = 1; k < xs.size(); ++k) {
      if (!(xs[k - 1] < xs[k])) throw PreconditionError("tabulated benefit: knots must be strictly increasing");
      if (!(ys[k - 1] < ys[k])) throw PreconditionError("tabulated benefit: values must be strictly increasing");
    }
    BenefitFunction b(Kind::tabulated, 0.0);
    b.xs_ = std::move(xs);
    b.ys_ = std::move(ys);
    return b;
  }

  Kind kind() const { return kind_; }
  double parameter() const { return param_; }

  /// Analytic first derivative is offered to oracles only for these.
  bool has_analytic_derivative() const { return kind_ == Kind::identity || kind_ == Kind::power; }

  bool concave() const {
    switch (kind_) {
    case Kind::power: return param_ <= 1.0;
    case Kind::tabulated: {
      for (std::size_t k = 2; k < xs_.size(); ++k)
        if (slope(k - 1) > slope(k - 2)) return false;
      return true;
    }
    default: return true;
    }
  }

  double operator()(double x) const {
    switch (kind_) {
    case Kind::identity: return x;
    case Kind::power: return std::pow(x, param_);
    case Kind::log_shifted: return std::log(param_ + x);
    case Kind::saturating_exp: return 1.0 - std::exp(-param_ * x);
    case Kind::tabulated: {
      const std::size_t seg = segment(x);
      return ys_[seg] + slope(seg) * (x - xs_[seg]);
    }
    }
    return x;
  }

  double derivative(double x) const {
    switch (kind_) {
    case Kind::identity: return 1.0;
    case Kind::power: return param_ == 1.0 ? 1.0 : param_ * std::pow(x, param_ - 1.0);
    case Kind::log_shifted: return 1.0 / (param_ + x);
    case Kind::saturating_exp: return param_ * std::exp(-param_ * x);
    case Kind::tabulated: return slope(segment(x));
    }
    return 1.0;
  }

  std::string label() const {
    switch (kind_) {
    case Kind::identity: return "identity";
    case Kind::power: return "power:" + trim(param_);
    case Kind::log_shifted: return "log:" + trim(param_);
    case Kind::saturating_exp: return "satexp:" + trim(param_);
    case Kind::tabulated: return "tabulated";
    }
    return "?";
  }

private:
  BenefitFunction(Kind k, double p) : kind_(k), param_(p) {}

  std::size_t segment(double x) const {
    std::size_t k = 0;
    while (k + 2 < xs_.size() && x > xs_[k + 1]) ++k;
    return k;
  }
  double slope(std::size_t k) const { return (ys_[k + 1] - ys_[k]) / (xs_[k + 1] - xs_[k]); }

  static std::string trim(double v) {
    std::string s = std::to_string(v);
    while (!s.empty() && s.back() == '0') s.pop_back();
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  }

  Kind kind_;
  double param_;
  std::vector<double> xs_;
  std::vector<double> ys_;
};

} // namespace intervene
