#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

/// Exact-within-tolerance comparison of two profiles.
inline bool same_profile(std::span<const double> a, std::span<const double> b, double tol = kMembershipTol) {
  if (a.size() != b.size()) return false;
  for (std::size_t k = 0; k < a.size(); ++k)
    if (std::abs(a[k] - b[k]) > tol) return false;
  return true;
}

/// Mapping from signals to manager actions. Under perfect monitoring the
/// signal is the profile itself; under finite stochastic monitoring it is a
/// signal index, which only the constant and signal-tabulated forms accept.
class Mechanism {
public:
  struct Constant {
    ManagerAction action;
  };
  /// a_min on the target, a_max anywhere else (joint deviations included).
  struct MaxPunishment {
    Profile target;
    InterventionBounds bounds;
  };
  /// clamp(sum_i c_i (a_i - target_i) + a_min, a_min, a_max), scalar intervention.
  struct Affine {
    Profile target;
    std::vector<double> rates;
    InterventionBounds bounds;
  };
  /// Explicit table. Either keyed by profile (perfect monitoring) or by
  /// signal index (finite stochastic monitoring).
  struct Tabulated {
    std::vector<std::pair<Profile, ManagerAction>> by_profile;
    std::vector<ManagerAction> by_signal;
  };
  /// Closed-form profile-to-action rule (e.g. linear pricing).
  struct ClosedForm {
    std::function<ManagerAction(std::span<const double>)> rule;
    std::string label;
  };

  using Variant = std::variant<Constant, MaxPunishment, Affine, Tabulated, ClosedForm>;

  explicit Mechanism(Variant v) : form_(std::move(v)) {}

  const Variant& form() const { return form_; }

  bool accepts_signal_indices() const {
    if (std::holds_alternative<Constant>(form_)) return true;
    if (auto t = std::get_if<Tabulated>(&form_)) return !t->by_signal.empty();
    return false;
  }

  /// f(a) under perfect monitoring.
  ManagerAction operator()(std::span<const double> observed) const {
    return std::visit([&](const auto& m) { return apply(m, observed); }, form_);
  }

  /// f(s_m) under finite stochastic monitoring.
  ManagerAction at_signal(std::size_t signal) const {
    if (auto c = std::get_if<Constant>(&form_)) return c->action;
    if (auto t = std::get_if<Tabulated>(&form_)) {
      if (signal < t->by_signal.size()) return t->by_signal[signal];
      throw PreconditionError("tabulated mechanism has no entry for signal " + std::to_string(signal));
    }
    throw PreconditionError("mechanism '" + name() + "' is defined on profiles, not signal indices");
  }

  std::string name() const {
    struct Namer {
      std::string operator()(const Constant&) const { return "constant"; }
      std::string operator()(const MaxPunishment&) const { return "max_punishment"; }
      std::string operator()(const Affine&) const { return "affine"; }
      std::string operator()(const Tabulated&) const { return "tabulated"; }
      std::string operator()(const ClosedForm& c) const { return c.label.empty() ? "closed_form" : c.label; }
    };
    return std::visit(Namer{}, form_);
  }

  std::string describe() const {
    std::ostringstream os;
    os << name();
    if (auto c = std::get_if<Constant>(&form_)) os << ' ' << format_point(c->action);
    if (auto m = std::get_if<MaxPunishment>(&form_)) os << " target=" << format_point(m->target);
    if (auto m = std::get_if<Affine>(&form_))
      os << " target=" << format_point(m->target) << " rates=" << format_point(m->rates);
    return os.str();
  }

private:
  static ManagerAction apply(const Constant& c, std::span<const double>) { return c.action; }

  static ManagerAction apply(const MaxPunishment& m, std::span<const double> a) {
    return same_profile(a, m.target) ? m.bounds.minimal : m.bounds.maximal;
  }

  static ManagerAction apply(const Affine& m, std::span<const double> a) {
    if (a.size() != m.target.size()) throw PreconditionError("affine mechanism: profile size mismatch");
    double level = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) level += m.rates[i] * (a[i] - m.target[i]);
    const double lo = m.bounds.minimal[0];
    return {clamp(level + lo, lo, m.bounds.maximal[0])};
  }

  static ManagerAction apply(const Tabulated& t, std::span<const double> a) {
    for (const auto& [profile, action] : t.by_profile)
      if (same_profile(a, profile)) return action;
    throw PreconditionError("tabulated mechanism has no entry for profile " + format_point(a));
  }

  static ManagerAction apply(const ClosedForm& c, std::span<const double> a) { return c.rule(a); }

  Variant form_;
};

} // namespace intervene
