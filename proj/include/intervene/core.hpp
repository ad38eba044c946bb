#pragma once

// Fundamental evaluations on an intervention game: raw utilities, expected
// utilities under a mechanism, the induced normal-form game and the
// manager's objective.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/mechanism.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

/// u_i(a0, a) for player i (0 = manager, 1..N = users), with domain checks.
inline double evaluate_utility(const InterventionGame& game, std::size_t i, const ManagerAction& a0,
                               std::span<const double> a) {
  const UtilityOracle& u = game.oracle(i);
  game.check_manager_action(a0);
  game.check_profile(a);
  return u.value(a0, a);
}

inline double evaluate_utility(const InterventionGame& game, std::size_t i, double a0, std::span<const double> a) {
  return evaluate_utility(game, i, ManagerAction{a0}, a);
}

namespace detail {

inline double expected(const InterventionGame& game, const Mechanism& f, const UtilityOracle& u,
                       std::span<const double> a) {
  if (game.monitoring.is_perfect()) return u.value(f(a), a);
  const std::vector<double> rho = game.monitoring.signal_distribution(a);
  double v = 0.0;
  for (std::size_t m = 0; m < rho.size(); ++m)
    if (rho[m] != 0.0) v += rho[m] * u.value(f.at_signal(m), a);
  return v;
}

} // namespace detail

/// v_i^f(a) = E_{rho(a)}[u_i(f(s), a)]; under perfect monitoring exactly
/// u_i(f(a), a).
inline double expected_utility(const InterventionGame& game, const Mechanism& f, std::size_t i,
                               std::span<const double> a) {
  const UtilityOracle& u = game.oracle(i);
  game.check_profile(a);
  if (!game.monitoring.is_perfect() && !f.accepts_signal_indices())
    throw PreconditionError("mechanism '" + f.name() + "' cannot be evaluated on finite signals");
  return detail::expected(game, f, u, a);
}

/// Expected manager utility under (f, a).
inline double manager_value(const InterventionGame& game, const Mechanism& f, std::span<const double> a) {
  return expected_utility(game, f, 0, a);
}

/// Lazy view of the simultaneous game among the users induced by a
/// mechanism. Holds a reference to the game, which must outlive the view.
class InducedGame {
public:
  InducedGame(const InterventionGame& game, Mechanism f) : game_(&game), mechanism_(std::move(f)) {
    if (!game.monitoring.is_perfect() && !mechanism_.accepts_signal_indices())
      throw PreconditionError("mechanism '" + mechanism_.name() + "' cannot be evaluated on finite signals");
  }

  std::size_t players() const { return game_->players(); }
  const InterventionGame& game() const { return *game_; }
  const Mechanism& mechanism() const { return mechanism_; }

  /// v_i^f(a) for user i in 1..N (0 gives the manager's expected utility).
  double payoff(std::size_t i, std::span<const double> a) const {
    return detail::expected(*game_, mechanism_, game_->oracle(i), a);
  }

  /// Payoff table over the Cartesian product of `axes`, row-major with the
  /// first user's coordinate most significant; entry [flat][i-1] = v_i.
  std::vector<std::vector<double>> table(const std::vector<std::vector<double>>& axes) const {
    std::size_t total = 1;
    for (const auto& ax : axes) total *= ax.size();
    std::vector<std::vector<double>> out(total, std::vector<double>(players()));
    std::vector<std::size_t> idx(axes.size(), 0);
    Profile a(axes.size());
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (std::size_t d = 0; d < axes.size(); ++d) a[d] = axes[d][idx[d]];
      for (std::size_t i = 0; i < players(); ++i) out[flat][i] = payoff(i + 1, a);
      for (std::size_t d = axes.size(); d-- > 0;) {
        if (++idx[d] < axes[d].size()) break;
        idx[d] = 0;
      }
    }
    return out;
  }

private:
  const InterventionGame* game_;
  Mechanism mechanism_;
};

inline InducedGame induced_game(const InterventionGame& game, const Mechanism& f) {
  game.validate();
  return InducedGame(game, f);
}

// ---------------------------------------------------------------------------
// Assumption 1 (minimal/maximal intervention) sampling check
// ---------------------------------------------------------------------------

struct Assumption1Violation {
  std::size_t player = 0;  ///< 0 = manager ordering, otherwise user index 1..N
  ManagerAction a0;
  Profile a;
  std::string inequality;  ///< "min>=a0" or "a0>=max"
  double slack = 0.0;      ///< negative by the amount of violation
};

struct Assumption1Report {
  bool passed = true;
  bool users_ordered = true;
  bool manager_ordered = true;
  std::size_t samples_checked = 0;
  double min_slack = std::numeric_limits<double>::infinity();
  double max_slack = -std::numeric_limits<double>::infinity();
  std::vector<Assumption1Violation> violations;

  std::string summary() const {
    std::ostringstream os;
    os.precision(17);
    os << (passed ? "assumption 1 holds" : "assumption 1 violated") << " on " << samples_checked
       << (samples_checked == 1 ? " sample" : " samples") << "; slack range [" << min_slack << ", " << max_slack
       << "]";
    if (!violations.empty()) {
      const auto& v = violations.front();
      os << "; first witness player " << v.player << " a0=" << format_point(v.a0) << " a=" << format_point(v.a)
         << " (" << v.inequality << ")";
    }
    return os.str();
  }
};

namespace detail {

inline double sample_space(const ActionSpace& s, double u) {
  if (s.is_interval()) return s.hull().lo + u * s.hull().width();
  const auto& v = s.values();
  const auto k = std::min(v.size() - 1, static_cast<std::size_t>(u * static_cast<double>(v.size())));
  return v[k];
}

} // namespace detail

/// Checks u_i(a_min, a) >= u_i(a0, a) >= u_i(a_max, a) for every user, and the
/// same ordering for the manager, on `samples` Halton points of (a0, a).
/// `offset` shifts the start of the sequence.
inline Assumption1Report validate_assumption1(const InterventionGame& game, std::size_t samples,
                                              std::size_t offset = 0, double tol = kMembershipTol) {
  if (samples < 1) throw PreconditionError("validate_assumption1: sample count must be at least 1");
  game.validate();
  const std::size_t md = game.manager_dims();
  const std::size_t n = game.players();
  Assumption1Report report;

  for (std::size_t s = 0; s < samples; ++s) {
    const std::vector<double> h = halton_point(offset + s + 1, md + n);
    ManagerAction a0(md);
    Profile a(n);
    for (std::size_t k = 0; k < md; ++k) a0[k] = detail::sample_space(game.manager_actions[k], h[k]);
    for (std::size_t k = 0; k < n; ++k) a[k] = detail::sample_space(game.actions[k], h[md + k]);

    for (std::size_t i = 0; i <= n; ++i) {
      const UtilityOracle& u = game.oracle(i);
      const double lo = u.value(game.bounds.minimal, a);
      const double mid = u.value(a0, a);
      const double hi = u.value(game.bounds.maximal, a);
      const double upper_slack = lo - mid;
      const double lower_slack = mid - hi;
      for (auto [slack, label] : {std::pair{upper_slack, "min>=a0"}, std::pair{lower_slack, "a0>=max"}}) {
        report.min_slack = std::min(report.min_slack, slack);
        report.max_slack = std::max(report.max_slack, slack);
        if (slack < -tol) {
          report.violations.push_back({i, a0, a, label, slack});
          (i == 0 ? report.manager_ordered : report.users_ordered) = false;
        }
      }
    }
    ++report.samples_checked;
  }
  report.passed = report.users_ordered && report.manager_ordered;
  return report;
}

} // namespace intervene
