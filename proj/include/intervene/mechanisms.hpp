#pragma once

// Mechanism families (constant, maximum punishment, affine, tabulated), the
// intervention-rate formula for affine mechanisms and a numerical verifier
// of the sufficient second-order conditions under which an affine mechanism
// supports an interior target.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "intervene/derivatives.hpp"
#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/mechanism.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

/// Signed intervention rates c_1..c_N of an affine mechanism.
using AffineRateProfile = std::vector<double>;

inline Mechanism max_punishment(Profile target, InterventionBounds bounds) {
  bounds.validate();
  for (double x : target)
    if (!std::isfinite(x)) throw PreconditionError("max_punishment: non-finite target coordinate");
  return Mechanism(Mechanism::MaxPunishment{std::move(target), std::move(bounds)});
}

inline Mechanism affine(Profile target, AffineRateProfile rates, InterventionBounds bounds) {
  bounds.validate();
  if (bounds.dims() != 1) throw PreconditionError("affine: requires scalar intervention bounds");
  if (rates.size() != target.size()) throw PreconditionError("affine: one rate per user required");
  for (double c : rates)
    if (!std::isfinite(c)) throw PreconditionError("affine: non-finite intervention rate");
  return Mechanism(Mechanism::Affine{std::move(target), std::move(rates), std::move(bounds)});
}

inline Mechanism constant(ManagerAction a0, const InterventionBounds& bounds) {
  bounds.validate();
  if (a0.size() != bounds.dims()) throw PreconditionError("constant: manager action has wrong dimension");
  for (std::size_t k = 0; k < a0.size(); ++k)
    if (a0[k] < bounds.minimal[k] - kMembershipTol || a0[k] > bounds.maximal[k] + kMembershipTol)
      throw PreconditionError("constant: action component " + std::to_string(k) + " = " + std::to_string(a0[k]) +
                              " outside intervention bounds");
  return Mechanism(Mechanism::Constant{std::move(a0)});
}

inline Mechanism constant(double a0, const InterventionBounds& bounds) { return constant(ManagerAction{a0}, bounds); }

inline Mechanism tabulated(std::vector<std::pair<Profile, ManagerAction>> table) {
  if (table.empty()) throw PreconditionError("tabulated: empty table");
  return Mechanism(Mechanism::Tabulated{std::move(table), {}});
}

inline Mechanism tabulated_by_signal(std::vector<ManagerAction> actions) {
  if (actions.empty()) throw PreconditionError("tabulated: empty table");
  return Mechanism(Mechanism::Tabulated{{}, std::move(actions)});
}

namespace detail {

inline void require_interior(const InterventionGame& game, const Profile& target, const char* who) {
  game.check_profile(target);
  for (std::size_t i = 0; i < target.size(); ++i) {
    const ActionSpace& s = game.actions[i];
    if (!s.is_interval())
      throw PreconditionError(std::string(who) + ": user " + std::to_string(i + 1) + " has a finite action space");
    if (!(target[i] > s.hull().lo && target[i] < s.hull().hi))
      throw PreconditionError(std::string(who) + ": target coordinate a_" + std::to_string(i + 1) +
                              " is not interior to its action space");
  }
}

} // namespace detail

/// c_i = -(du_i/da_i) / (du_i/da0) at (a_min, target), the manager partial
/// taken from the right.
inline AffineRateProfile compute_affine_rates(const InterventionGame& game, const Profile& target,
                                              const FDSpec& fd = {}) {
  game.validate();
  detail::require_interior(game, target, "compute_affine_rates");
  if (!game.scalar_manager()) throw PreconditionError("compute_affine_rates: requires scalar intervention");

  const std::vector<double> p = UtilityDerivatives::joint(game.bounds.minimal[0], target);
  AffineRateProfile rates(target.size());
  for (std::size_t i = 0; i < target.size(); ++i) {
    UtilityDerivatives d(game, i, fd);
    const double den = d.first(p, 0);
    if (std::abs(den) < 1e-9)
      throw SingularityError("compute_affine_rates: du/da0 vanishes for user " + std::to_string(i + 1));
    if (den > 0.0)
      throw PreconditionError("compute_affine_rates: utility of user " + std::to_string(i + 1) +
                              " increases with the manager action");
    rates[i] = -d.first(p, i + 1) / den;
  }
  return rates;
}

// ---------------------------------------------------------------------------
// Second-order condition verifier
// ---------------------------------------------------------------------------

enum class RateSign { zero, positive, negative };

enum class ConditionStatus { strict, non_strict, failed, vacuous };

inline const char* to_string(RateSign s) {
  switch (s) {
  case RateSign::zero: return "zero";
  case RateSign::positive: return "positive";
  case RateSign::negative: return "negative";
  }
  return "?";
}

inline const char* to_string(ConditionStatus s) {
  switch (s) {
  case ConditionStatus::strict: return "strict";
  case ConditionStatus::non_strict: return "non_strict";
  case ConditionStatus::failed: return "failed";
  case ConditionStatus::vacuous: return "vacuous";
  }
  return "?";
}

/// How to read the left end of the ramp interval for negative rates. As
/// printed it is max{a_max_i, ramp end}, which makes the interval empty
/// whenever the target is interior; the mirrored reading uses the lower end
/// of the action space.
enum class NegativeRampReading { as_printed, mirrored };

struct ConditionCheck {
  std::string name;
  Interval interval{};            ///< open interval that was sampled
  bool vacuous = false;
  std::size_t samples = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  ///< >= 0 means satisfied
  double witness = std::numeric_limits<double>::quiet_NaN();       ///< a_i at the worst margin
  ConditionStatus status = ConditionStatus::vacuous;
  bool uniqueness_relevant = false;  ///< strictness here makes the target the unique best response
};

struct UserConditions {
  std::size_t user = 0;  ///< 1-based
  double rate = 0.0;
  RateSign sign = RateSign::zero;
  std::vector<ConditionCheck> conditions;
  bool passed = true;
  bool strict = true;
};

struct Prop4Report {
  std::vector<UserConditions> users;
  bool passed = true;
  /// Every non-vacuous inequality held with margin above the noise floor.
  bool strict = true;
  /// The concavity conditions that decide uniqueness all held strictly.
  bool unique_maximizer = true;

  std::string summary() const {
    std::ostringstream os;
    os.precision(6);
    os << "affine support conditions " << (passed ? "pass" : "FAIL") << (strict ? " (strict)" : "") << '\n';
    for (const auto& u : users) {
      os << "  user " << u.user << " rate " << u.rate << " (" << to_string(u.sign) << ")\n";
      for (const auto& c : u.conditions) {
        os << "    " << c.name << " on (" << c.interval.lo << ", " << c.interval.hi << "): " << to_string(c.status);
        if (!c.vacuous) os << ", worst margin " << c.worst_margin << " at " << c.witness;
        os << '\n';
      }
    }
    return os.str();
  }
};

struct Prop4Options {
  std::size_t samples = 64;       ///< interior points per interval, endpoints excluded
  double noise_floor = 1e-8;      ///< |margin| within this counts as a non-strict pass
  double zero_rate_tol = 0.0;     ///< |c_i| <= tol selects the zero-rate case
  FDSpec fd{};
  NegativeRampReading negative_reading = NegativeRampReading::as_printed;
};

/// Numerically checks, for each user, the sign-case conditions of the
/// affine support result on `samples` points of each open interval.
inline Prop4Report verify_prop4_conditions(const InterventionGame& game, const Profile& target,
                                           const AffineRateProfile& rates, const Prop4Options& opt = {}) {
  game.validate();
  detail::require_interior(game, target, "verify_prop4_conditions");
  if (!game.scalar_manager()) throw PreconditionError("verify_prop4_conditions: requires scalar intervention");
  if (rates.size() != target.size()) throw PreconditionError("verify_prop4_conditions: one rate per user required");
  if (opt.samples == 0) throw PreconditionError("verify_prop4_conditions: samples must be positive");

  const double a0_min = game.bounds.minimal[0];
  const double a0_max = game.bounds.maximal[0];
  Prop4Report report;

  for (std::size_t i = 0; i < target.size(); ++i) {
    UtilityDerivatives d(game, i, opt.fd);
    const double c = rates[i];
    const double lo = game.actions[i].hull().lo;
    const double hi = game.actions[i].hull().hi;
    const double star = target[i];

    UserConditions uc;
    uc.user = i + 1;
    uc.rate = c;
    uc.sign = std::abs(c) <= opt.zero_rate_tol ? RateSign::zero : (c > 0.0 ? RateSign::positive : RateSign::negative);

    auto at = [&](double a0, double x) {
      std::vector<double> p = UtilityDerivatives::joint(a0, target);
      p[i + 1] = x;
      return p;
    };
    // u_ii at the minimal intervention, must be <= 0
    auto concavity = [&](double x) { return -d.second(at(a0_min, x), i + 1, i + 1); };
    // second derivative of u along the ramp a0 = c (a_i - a_i*) + a_min, must be <= 0
    auto ramp = [&](double x) {
      const auto p = at(c * (x - star) + a0_min, x);
      const double u00 = d.second(p, 0, 0);
      const double u0i = d.second(p, i + 1, 0);
      const double uii = d.second(p, i + 1, i + 1);
      return -(c * c * u00 + 2.0 * c * u0i + uii);
    };
    auto slope_at_max = [&](double x) { return d.first(at(a0_max, x), i + 1); };

    auto check = [&](std::string name, double from, double to, auto margin, bool uniqueness) {
      ConditionCheck cc;
      cc.name = std::move(name);
      cc.interval = {from, to};
      cc.uniqueness_relevant = uniqueness;
      if (!(from < to)) {
        cc.vacuous = true;
        cc.status = ConditionStatus::vacuous;
        uc.conditions.push_back(cc);
        return;
      }
      for (std::size_t k = 0; k < opt.samples; ++k) {
        const double x = from + (to - from) * static_cast<double>(k + 1) / static_cast<double>(opt.samples + 1);
        const double m = margin(x);
        if (m < cc.worst_margin) {
          cc.worst_margin = m;
          cc.witness = x;
        }
      }
      cc.samples = opt.samples;
      if (cc.worst_margin < -opt.noise_floor) cc.status = ConditionStatus::failed;
      else if (cc.worst_margin > opt.noise_floor) cc.status = ConditionStatus::strict;
      else cc.status = ConditionStatus::non_strict;
      uc.conditions.push_back(cc);
    };

    const double ramp_end = c != 0.0 ? star + (a0_max - a0_min) / c : star;
    switch (uc.sign) {
    case RateSign::zero:
      check("concave_at_min_intervention", lo, hi, concavity, true);
      break;
    case RateSign::positive:
      check("concave_below_target", lo, star, concavity, false);
      check("concave_along_ramp_above_target", star, std::min(hi, ramp_end), ramp, true);
      check("nonincreasing_at_max_intervention", ramp_end, hi, [&](double x) { return -slope_at_max(x); }, false);
      break;
    case RateSign::negative: {
      const double left = opt.negative_reading == NegativeRampReading::as_printed ? std::max(hi, ramp_end)
                                                                                  : std::max(lo, ramp_end);
      check("nondecreasing_at_max_intervention", lo, ramp_end, slope_at_max, false);
      check("concave_along_ramp_below_target", left, star, ramp, true);
      check("concave_above_target", star, hi, concavity, false);
      break;
    }
    }

    for (const auto& cc : uc.conditions) {
      if (cc.status == ConditionStatus::failed) uc.passed = false;
      if (cc.status == ConditionStatus::failed || cc.status == ConditionStatus::non_strict) {
        uc.strict = false;
        if (cc.uniqueness_relevant) report.unique_maximizer = false;
      }
    }
    report.passed = report.passed && uc.passed;
    report.strict = report.strict && uc.strict;
    report.users.push_back(std::move(uc));
  }
  report.unique_maximizer = report.unique_maximizer && report.passed;
  return report;
}

} // namespace intervene
