#pragma once

// Game description types: action spaces, utility oracles, monitoring and the
// assembled intervention game. Everything here is immutable once built;
// oracles must be pure so that all evaluations are reentrant.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intervene/errors.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

/// Actions of the N regular users, one scalar per user.
using Profile = std::vector<double>;
/// Manager action: one component for scalar intervention, one per user for
/// asymmetric (vector) intervention.
using ManagerAction = std::vector<double>;

inline constexpr double kMembershipTol = 1e-12;
inline constexpr double kProbabilityTol = 1e-9;

class ActionSpace {
public:
  static ActionSpace interval(double lo, double hi) {
    if (!(lo < hi)) throw PreconditionError("ActionSpace: interval needs lower < upper");
    ActionSpace s;
    s.finite_ = false;
    s.hull_ = {lo, hi};
    return s;
  }

  static ActionSpace finite(std::vector<double> values) {
    if (values.empty()) throw PreconditionError("ActionSpace: finite set must be nonempty");
    for (std::size_t k = 1; k < values.size(); ++k)
      if (!(values[k - 1] < values[k]))
        throw PreconditionError("ActionSpace: finite set must be strictly increasing");
    ActionSpace s;
    s.finite_ = true;
    s.hull_ = {values.front(), values.back()};
    s.values_ = std::move(values);
    return s;
  }

  bool is_interval() const { return !finite_; }
  bool is_finite() const { return finite_; }
  const Interval& hull() const { return hull_; }
  const std::vector<double>& values() const { return values_; }

  /// Index of `x` in a finite space, or npos.
  std::size_t index_of(double x, double tol = kMembershipTol) const {
    for (std::size_t k = 0; k < values_.size(); ++k)
      if (std::abs(values_[k] - x) <= tol) return k;
    return npos;
  }

  bool contains(double x, double tol = kMembershipTol) const {
    if (!finite_) return hull_.contains(x, tol);
    return index_of(x, tol) != npos;
  }

  /// Evaluation grid: the whole set for finite spaces, `resolution` equally
  /// spaced points otherwise.
  std::vector<double> grid(std::size_t resolution) const {
    return finite_ ? values_ : linspace(hull_, resolution);
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  ActionSpace() = default;
  bool finite_ = false;
  Interval hull_{};
  std::vector<double> values_;
};

/// Minimal and maximal intervention actions.
struct InterventionBounds {
  ManagerAction minimal;
  ManagerAction maximal;

  static InterventionBounds scalar(double lo, double hi) { return {{lo}, {hi}}; }

  std::size_t dims() const { return minimal.size(); }
  void validate() const {
    if (minimal.empty() || minimal.size() != maximal.size())
      throw PreconditionError("InterventionBounds: minimal and maximal actions must have equal nonzero size");
    for (std::size_t k = 0; k < minimal.size(); ++k)
      if (minimal[k] > maximal[k]) throw PreconditionError("InterventionBounds: minimal exceeds maximal");
  }
};

using UtilityFn = std::function<double(const ManagerAction&, std::span<const double>)>;
using ActionPartialFn = std::function<double(const ManagerAction&, std::span<const double>, std::size_t)>;

/// u(a0, a) with optional analytic first partials. `d_manager` is the partial
/// with respect to a scalar manager action; `d_action(a0, a, j)` the partial
/// with respect to a_j (0-based).
struct UtilityOracle {
  UtilityFn value;
  UtilityFn d_manager;
  ActionPartialFn d_action;
  std::string formula;

  double operator()(const ManagerAction& a0, std::span<const double> a) const { return value(a0, a); }
  bool has_manager_partial() const { return static_cast<bool>(d_manager); }
  bool has_action_partial() const { return static_cast<bool>(d_action); }
};

using DistributionFn = std::function<std::vector<double>(std::span<const double>)>;

struct Monitoring {
  enum class Kind { perfect, finite_stochastic };

  Kind kind = Kind::perfect;
  std::size_t signals = 0;
  DistributionFn distribution;

  static Monitoring perfect() { return {}; }
  static Monitoring finite(std::size_t signal_count, DistributionFn rho) {
    if (signal_count == 0) throw PreconditionError("Monitoring: signal count must be positive");
    return {Kind::finite_stochastic, signal_count, std::move(rho)};
  }
  bool is_perfect() const { return kind == Kind::perfect; }

  /// rho(a), checked for length, sign and normalization.
  std::vector<double> signal_distribution(std::span<const double> a) const {
    std::vector<double> p = distribution(a);
    if (p.size() != signals)
      throw DataError("monitoring: distribution has " + std::to_string(p.size()) + " entries, expected " +
                      std::to_string(signals));
    double total = 0.0;
    for (double q : p) {
      if (!(q >= 0.0)) throw DataError("monitoring: negative or NaN probability at " + format_point(a));
      total += q;
    }
    if (std::abs(total - 1.0) > kProbabilityTol)
      throw DataError("monitoring: probabilities at " + format_point(a) + " sum to " + std::to_string(total));
    return p;
  }
};

struct InterventionGame {
  std::vector<ActionSpace> actions;          ///< one per regular user
  std::vector<ActionSpace> manager_actions;  ///< one component, or one per user (vector intervention)
  std::vector<UtilityOracle> users;
  UtilityOracle manager;
  Monitoring monitoring = Monitoring::perfect();
  InterventionBounds bounds;
  std::vector<double> weights;               ///< welfare weights, default all 1

  std::size_t players() const { return actions.size(); }
  std::size_t manager_dims() const { return manager_actions.size(); }
  bool scalar_manager() const { return manager_actions.size() == 1; }

  void validate() const {
    const std::size_t n = actions.size();
    if (n == 0) throw PreconditionError("game: at least one regular user required");
    if (users.size() != n) throw PreconditionError("game: one utility oracle per user required");
    if (!weights.empty() && weights.size() != n) throw PreconditionError("game: one welfare weight per user required");
    for (double w : weights)
      if (!(w >= 0.0)) throw PreconditionError("game: welfare weights must be nonnegative");
    if (manager_actions.empty()) throw PreconditionError("game: manager action space missing");
    if (!manager.value) throw PreconditionError("game: manager utility missing");
    for (const auto& u : users)
      if (!u.value) throw PreconditionError("game: user utility missing");
    bounds.validate();
    if (bounds.dims() != manager_actions.size())
      throw PreconditionError("game: bounds dimension does not match manager action space");
    for (std::size_t k = 0; k < bounds.dims(); ++k)
      if (!manager_actions[k].contains(bounds.minimal[k]) || !manager_actions[k].contains(bounds.maximal[k]))
        throw PreconditionError("game: intervention bounds outside manager action space");
  }

  double weight(std::size_t user) const { return weights.empty() ? 1.0 : weights[user]; }

  void check_profile(std::span<const double> a) const {
    if (a.size() != actions.size())
      throw PreconditionError("profile has " + std::to_string(a.size()) + " coordinates, game has " +
                              std::to_string(actions.size()) + " users");
    for (std::size_t k = 0; k < a.size(); ++k)
      if (!actions[k].contains(a[k]))
        throw PreconditionError("profile coordinate a_" + std::to_string(k + 1) + " = " + std::to_string(a[k]) +
                                " outside its action space");
  }

  void check_manager_action(const ManagerAction& a0) const {
    if (a0.size() != manager_actions.size())
      throw PreconditionError("manager action has wrong dimension");
    for (std::size_t k = 0; k < a0.size(); ++k)
      if (!manager_actions[k].contains(a0[k]))
        throw PreconditionError("manager action component a_0[" + std::to_string(k) + "] = " +
                                std::to_string(a0[k]) + " outside its action space");
  }

  /// Utility oracle for player i, 0 = manager, 1..N = users.
  const UtilityOracle& oracle(std::size_t i) const {
    if (i > users.size()) throw PreconditionError("player index " + std::to_string(i) + " out of range");
    return i == 0 ? manager : users[i - 1];
  }
};

/// Manager utility sum_i w_i u_i(a0, a).
inline UtilityOracle benevolent_manager(std::vector<UtilityOracle> users, std::vector<double> weights = {}) {
  if (weights.empty()) weights.assign(users.size(), 1.0);
  if (weights.size() != users.size()) throw PreconditionError("benevolent_manager: weight count mismatch");
  UtilityOracle m;
  m.formula = "sum_i w_i u_i";
  m.value = [users, weights](const ManagerAction& a0, std::span<const double> a) {
    double s = 0.0;
    for (std::size_t i = 0; i < users.size(); ++i)
      if (weights[i] != 0.0) s += weights[i] * users[i].value(a0, a);
    return s;
  };
  return m;
}

} // namespace intervene
