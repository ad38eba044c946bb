#pragma once

// Support checks, the supportable set, intervention-equilibrium search and
// related diagnostics. Continuum best responses are approximated on grids, so
// every verdict here is relative to the GridSpec it reports.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "intervene/core.hpp"
#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/mechanism.hpp"
#include "intervene/mechanisms.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

inline constexpr double kSupportTol = 1e-9;
inline constexpr std::size_t kDefaultProfileCap = 10'000'000;

/// Cartesian grid of profiles. Axes are the users' action grids with any
/// `include` coordinates merged in, so that a given profile is a grid point
/// and can be matched by index.
class ProfileGrid {
public:
  ProfileGrid(const InterventionGame& game, const GridSpec& grid, std::span<const double> include = {}) {
    grid.validate();
    axes_.reserve(game.players());
    for (std::size_t i = 0; i < game.players(); ++i) {
      std::vector<double> ax = game.actions[i].grid(grid.resolution);
      if (!include.empty()) insert_sorted(ax, include[i]);
      axes_.push_back(std::move(ax));
    }
    size_ = 1;
    for (const auto& ax : axes_) {
      if (size_ > std::numeric_limits<std::size_t>::max() / ax.size()) {
        size_ = std::numeric_limits<std::size_t>::max();
        break;
      }
      size_ *= ax.size();
    }
  }

  const std::vector<std::vector<double>>& axes() const { return axes_; }
  std::size_t size() const { return size_; }

  void check_cap(std::size_t cap) const {
    if (size_ > cap)
      throw ResourceError("profile grid has " + std::to_string(size_) + " points, above the cap of " +
                          std::to_string(cap) + "; use a coarser grid");
  }

  Profile at(std::size_t flat) const {
    Profile a(axes_.size());
    for (std::size_t d = axes_.size(); d-- > 0;) {
      a[d] = axes_[d][flat % axes_[d].size()];
      flat /= axes_[d].size();
    }
    return a;
  }

  std::vector<std::size_t> indices(std::size_t flat) const {
    std::vector<std::size_t> idx(axes_.size());
    for (std::size_t d = axes_.size(); d-- > 0;) {
      idx[d] = flat % axes_[d].size();
      flat /= axes_[d].size();
    }
    return idx;
  }

  std::size_t stride(std::size_t dim) const {
    std::size_t s = 1;
    for (std::size_t d = axes_.size(); d-- > dim + 1;) s *= axes_[d].size();
    return s;
  }

  /// Flat index of `a`, or npos when some coordinate is off-grid.
  std::size_t flat_index(std::span<const double> a) const {
    std::size_t flat = 0;
    for (std::size_t d = 0; d < axes_.size(); ++d) {
      const auto& ax = axes_[d];
      std::size_t k = 0;
      while (k < ax.size() && std::abs(ax[k] - a[d]) > kMembershipTol) ++k;
      if (k == ax.size()) return npos;
      flat = flat * ax.size() + k;
    }
    return flat;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

private:
  static void insert_sorted(std::vector<double>& ax, double x) {
    for (double v : ax)
      if (std::abs(v - x) <= kMembershipTol) return;
    ax.insert(std::upper_bound(ax.begin(), ax.end(), x), x);
  }

  std::vector<std::vector<double>> axes_;
  std::size_t size_ = 0;
};

namespace detail {

/// Grid maximum of `objective(x)` over user i's action space: exhaustive for
/// finite spaces, grid_argmax with refinement for intervals.
template <class F>
std::pair<double, double> best_over_space(const ActionSpace& space, const GridSpec& grid, const F& objective) {
  auto f = [&](std::span<const double> x) { return objective(x[0]); };
  ArgmaxResult r;
  if (space.is_finite()) {
    r = argmax_over_axes(f, {space.values()});
  } else {
    const Interval box[] = {space.hull()};
    r = grid_argmax(f, std::span<const Interval>(box), grid);
  }
  return {r.point[0], r.value};
}

} // namespace detail

struct SupportReport {
  bool verdict = true;
  std::vector<double> on_profile;      ///< v_i^f(a)
  std::vector<double> best_deviation;  ///< best a_i found (a_i itself if nothing beats it)
  std::vector<double> gains;           ///< best deviation payoff minus on-profile payoff, >= 0
  GridSpec grid{};
  double tolerance = kSupportTol;

  double max_gain() const { return gains.empty() ? 0.0 : *std::max_element(gains.begin(), gains.end()); }
};

/// Whether `a` is a Nash equilibrium of the game induced by f, with
/// deviations searched on the user's action grid (plus a_i itself).
inline SupportReport supports(const InterventionGame& game, const Mechanism& f, std::span<const double> a,
                              const GridSpec& grid, double tol = kSupportTol) {
  game.validate();
  game.check_profile(a);
  const InducedGame view(game, f);
  SupportReport rep;
  rep.grid = grid;
  rep.tolerance = tol;
  Profile dev(a.begin(), a.end());
  for (std::size_t i = 0; i < game.players(); ++i) {
    const double on = view.payoff(i + 1, a);
    auto objective = [&](double x) {
      dev[i] = x;
      return view.payoff(i + 1, dev);
    };
    auto [x, best] = detail::best_over_space(game.actions[i], grid, objective);
    dev[i] = a[i];
    const double gain = std::max(0.0, best - on);
    rep.on_profile.push_back(on);
    rep.best_deviation.push_back(best > on ? x : a[i]);
    rep.gains.push_back(gain);
    if (gain > tol) rep.verdict = false;
  }
  return rep;
}

namespace detail {

/// Flat indices of the grid profiles at which no user has an on-grid
/// deviation gaining more than tol. `table[flat][i]` holds v_i.
inline std::vector<std::size_t> nash_indices(const ProfileGrid& pg, const std::vector<std::vector<double>>& table,
                                             double tol) {
  std::vector<std::size_t> out;
  const std::size_t n = pg.axes().size();
  std::vector<std::size_t> strides(n);
  for (std::size_t d = 0; d < n; ++d) strides[d] = pg.stride(d);
  for (std::size_t flat = 0; flat < pg.size(); ++flat) {
    const auto idx = pg.indices(flat);
    bool nash = true;
    for (std::size_t i = 0; i < n && nash; ++i) {
      const std::size_t base = flat - idx[i] * strides[i];
      const double on = table[flat][i];
      for (std::size_t k = 0; k < pg.axes()[i].size(); ++k)
        if (table[base + k * strides[i]][i] > on + tol) {
          nash = false;
          break;
        }
    }
    if (nash) out.push_back(flat);
  }
  return out;
}

inline std::optional<Profile> mechanism_target(const Mechanism& f) {
  if (auto m = std::get_if<Mechanism::MaxPunishment>(&f.form())) return m->target;
  if (auto m = std::get_if<Mechanism::Affine>(&f.form())) return m->target;
  return std::nullopt;
}

} // namespace detail

struct StrongSupportResult {
  bool strongly_supported = false;  ///< on the grid only ("grid-strong")
  bool target_is_nash = false;
  std::vector<Profile> other_equilibria;
  std::size_t profiles_enumerated = 0;
};

/// Enumerates all grid profiles (the target's coordinates are merged into
/// the axes) and collects the Nash equilibria of the induced game.
inline StrongSupportResult strongly_supports(const InterventionGame& game, const Mechanism& f,
                                             std::span<const double> a, const GridSpec& grid,
                                             std::size_t cap = kDefaultProfileCap, double tol = kSupportTol) {
  game.validate();
  game.check_profile(a);
  const ProfileGrid pg(game, grid, a);
  pg.check_cap(cap);
  const InducedGame view(game, f);
  const auto table = view.table(pg.axes());
  const std::size_t target = pg.flat_index(a);

  StrongSupportResult res;
  res.profiles_enumerated = pg.size();
  for (std::size_t flat : detail::nash_indices(pg, table, tol)) {
    if (flat == target) res.target_is_nash = true;
    else res.other_equilibria.push_back(pg.at(flat));
  }
  res.strongly_supported = res.target_is_nash && res.other_equilibria.empty();
  return res;
}

/// Whether some mechanism supports `a`: for every user, the best payoff
/// obtainable against maximal intervention does not exceed the payoff at
/// `a` under minimal intervention.
inline bool supportable(const InterventionGame& game, std::span<const double> a, const GridSpec& grid,
                        double tol = kSupportTol) {
  game.validate();
  game.check_profile(a);
  Profile dev(a.begin(), a.end());
  for (std::size_t i = 0; i < game.players(); ++i) {
    const UtilityOracle& u = game.users[i];
    const double rewarded = u.value(game.bounds.minimal, a);
    const double punished_here = u.value(game.bounds.maximal, a);
    if (punished_here > rewarded + tol) return false;
    auto objective = [&](double x) {
      dev[i] = x;
      return u.value(game.bounds.maximal, dev);
    };
    const double best = detail::best_over_space(game.actions[i], grid, objective).second;
    dev[i] = a[i];
    if (best > rewarded + tol) return false;
  }
  return true;
}

/// All grid profiles that some mechanism supports; by the characterization
/// these are exactly the profiles maximum-punishment mechanisms support.
inline std::vector<Profile> supportable_set(const InterventionGame& game, const GridSpec& grid,
                                            std::size_t cap = kDefaultProfileCap) {
  game.validate();
  const ProfileGrid pg(game, grid);
  pg.check_cap(cap);
  std::vector<Profile> out;
  for (std::size_t flat = 0; flat < pg.size(); ++flat) {
    Profile a = pg.at(flat);
    if (supportable(game, a, grid)) out.push_back(std::move(a));
  }
  return out;
}

struct EquilibriumResult {
  Mechanism mechanism;
  Profile profile;
  double manager_value = 0.0;
  std::size_t candidates_examined = 0;
  SupportReport verification;
};

/// Maximizes u_0(a_min, a) over the supportable grid profiles (ties to the
/// lexicographically smallest), refines around the incumbent while staying
/// inside the supportable set, and pairs the winner with its
/// maximum-punishment mechanism.
inline EquilibriumResult find_intervention_equilibrium(const InterventionGame& game, const GridSpec& grid,
                                                       std::size_t cap = kDefaultProfileCap) {
  game.validate();
  if (!game.monitoring.is_perfect())
    throw PreconditionError("find_intervention_equilibrium: requires perfect monitoring");
  const ProfileGrid pg(game, grid);
  pg.check_cap(cap);

  const auto& minimal = game.bounds.minimal;
  std::optional<Profile> best;
  double best_value = -std::numeric_limits<double>::infinity();
  std::size_t examined = 0;

  auto consider = [&](const Profile& a) {
    ++examined;
    if (!supportable(game, a, grid)) return;
    const double v = game.manager.value(minimal, a);
    if (!std::isfinite(v)) throw DataError("manager utility is not finite at " + format_point(a));
    if (v > best_value) {
      best_value = v;
      best = a;
    }
  };

  for (std::size_t flat = 0; flat < pg.size(); ++flat) consider(pg.at(flat));
  if (!best) throw NoSupportableProfile();

  std::vector<double> width(game.players());
  for (std::size_t d = 0; d < width.size(); ++d) width[d] = game.actions[d].hull().width();
  for (std::size_t round = 0; round < grid.refine_rounds; ++round) {
    std::vector<std::vector<double>> axes;
    for (std::size_t d = 0; d < game.players(); ++d) {
      const ActionSpace& s = game.actions[d];
      if (s.is_finite()) {
        axes.push_back({(*best)[d]});
        continue;
      }
      width[d] *= grid.shrink;
      const Interval box{std::max(s.hull().lo, (*best)[d] - 0.5 * width[d]),
                         std::min(s.hull().hi, (*best)[d] + 0.5 * width[d])};
      axes.push_back(box.lo == box.hi ? std::vector<double>{box.lo} : linspace(box, grid.resolution));
    }
    std::size_t total = 1;
    for (const auto& ax : axes) total *= ax.size();
    if (total > cap) throw ResourceError("refinement grid above the profile cap; use a coarser grid");
    std::vector<std::size_t> idx(axes.size(), 0);
    Profile a(axes.size());
    for (std::size_t flat = 0; flat < total; ++flat) {
      for (std::size_t d = 0; d < axes.size(); ++d) a[d] = axes[d][idx[d]];
      consider(a);
      for (std::size_t d = axes.size(); d-- > 0;) {
        if (++idx[d] < axes[d].size()) break;
        idx[d] = 0;
      }
    }
  }

  Mechanism f = max_punishment(*best, game.bounds);
  SupportReport verification = supports(game, f, *best, grid);
  const double value = manager_value(game, f, *best);
  return EquilibriumResult{std::move(f), std::move(*best), value, examined, std::move(verification)};
}

struct StrictPreferenceResult {
  bool holds = true;
  std::optional<Profile> witness;  ///< first supportable grid profile where it fails
};

/// Whether u_0(a_min, a) > u_0(a_max, a) + tol on every supportable grid
/// profile; when it holds the optimal maximum-punishment mechanism pins down
/// its target as the only equilibrium profile.
inline StrictPreferenceResult check_strict_preference(const InterventionGame& game, const GridSpec& grid,
                                                      double tol = 1e-12, std::size_t cap = kDefaultProfileCap) {
  game.validate();
  const ProfileGrid pg(game, grid);
  pg.check_cap(cap);
  for (std::size_t flat = 0; flat < pg.size(); ++flat) {
    const Profile a = pg.at(flat);
    if (!supportable(game, a, grid)) continue;
    if (!(game.manager.value(game.bounds.minimal, a) > game.manager.value(game.bounds.maximal, a) + tol))
      return {false, a};
  }
  return {};
}

struct MaximinEntry {
  double worst_value = -std::numeric_limits<double>::infinity();
  std::size_t equilibria = 0;  ///< grid Nash profiles found; 0 scores -inf
  std::optional<Profile> worst_profile;
};

struct MaximinResult {
  std::size_t index = 0;
  Mechanism mechanism;
  double worst_value = 0.0;
  std::vector<MaximinEntry> entries;
};

/// Conservative design over a finite family: each mechanism is scored by the
/// lowest manager value among the grid Nash profiles of its induced game;
/// the best score wins, ties to the lowest index.
inline MaximinResult maximin_design(const InterventionGame& game, const std::vector<Mechanism>& family,
                                    const GridSpec& grid, std::size_t cap = kDefaultProfileCap,
                                    double tol = kSupportTol) {
  game.validate();
  if (family.empty()) throw PreconditionError("maximin_design: empty mechanism family");
  std::vector<MaximinEntry> entries;
  std::size_t winner = 0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto target = detail::mechanism_target(family[k]);
    const ProfileGrid pg = target ? ProfileGrid(game, grid, *target) : ProfileGrid(game, grid);
    pg.check_cap(cap);
    const InducedGame view(game, family[k]);
    const auto table = view.table(pg.axes());
    MaximinEntry e;
    for (std::size_t flat : detail::nash_indices(pg, table, tol)) {
      const Profile a = pg.at(flat);
      const double v = view.payoff(0, a);
      if (e.equilibria == 0 || v < e.worst_value) {
        e.worst_value = v;
        e.worst_profile = a;
      }
      ++e.equilibria;
    }
    entries.push_back(e);
    if (entries[k].worst_value > entries[winner].worst_value) winner = k;
  }
  return MaximinResult{winner, family[winner], entries[winner].worst_value, std::move(entries)};
}

} // namespace intervene
