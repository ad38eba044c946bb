#pragma once

// Partial derivatives of user utilities over the joint point (a0, a) for
// scalar intervention. Coordinate 0 is the manager action, coordinate k+1 is
// a_k. Declared analytic partials are used when present; otherwise finite
// differences with the one-sided convention at the intervention bounds.

#include <span>
#include <vector>

#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

class UtilityDerivatives {
public:
  UtilityDerivatives(const InterventionGame& game, std::size_t user, FDSpec fd = {})
      : game_(&game), oracle_(&game.users.at(user)), fd_(fd) {
    if (!game.scalar_manager())
      throw PreconditionError("derivatives are only defined for scalar intervention");
    bounds_.push_back(Interval{game.bounds.minimal[0], game.bounds.maximal[0]});
    for (const auto& s : game.actions) bounds_.push_back(s.hull());
  }

  std::span<const Interval> bounds() const { return bounds_; }

  double value(std::span<const double> p) const { return oracle_->value({p[0]}, p.subspan(1)); }

  bool analytic(std::size_t dim) const {
    return dim == 0 ? oracle_->has_manager_partial() : oracle_->has_action_partial();
  }

  /// First partial in joint coordinate `dim`.
  double first(std::span<const double> p, std::size_t dim) const {
    if (dim == 0 && oracle_->has_manager_partial()) return oracle_->d_manager({p[0]}, p.subspan(1));
    if (dim > 0 && oracle_->has_action_partial()) return oracle_->d_action({p[0]}, p.subspan(1), dim - 1);
    return partial_derivative([this](std::span<const double> q) { return value(q); }, p, dim, bounds(), fd_);
  }

  /// Second partial d2u / (d outer d inner). Differentiates the analytic
  /// first partial with step h when available, else nests two differences.
  double second(std::span<const double> p, std::size_t outer, std::size_t inner) const {
    if (analytic(inner)) {
      auto g = [this, inner](std::span<const double> q) { return first(q, inner); };
      return partial_derivative(g, p, outer, bounds(), fd_);
    }
    return second_partial([this](std::span<const double> q) { return value(q); }, p, outer, inner, bounds(), fd_);
  }

  static std::vector<double> joint(double a0, std::span<const double> a) {
    std::vector<double> p;
    p.reserve(a.size() + 1);
    p.push_back(a0);
    p.insert(p.end(), a.begin(), a.end());
    return p;
  }

private:
  const InterventionGame* game_;
  const UtilityOracle* oracle_;
  FDSpec fd_;
  std::vector<Interval> bounds_;
};

} // namespace intervene
