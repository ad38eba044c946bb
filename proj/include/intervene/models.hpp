#pragma once

// Concrete game builders: slotted random access with a jamming manager, the
// rate-pricing alternative, asymmetric (tax-like) intervention templates and
// small tabulated finite games.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "intervene/benefit.hpp"
#include "intervene/core.hpp"
#include "intervene/equilibrium.hpp"
#include "intervene/errors.hpp"
#include "intervene/game.hpp"
#include "intervene/mechanism.hpp"
#include "intervene/mechanisms.hpp"
#include "intervene/numerics.hpp"

namespace intervene {

// ---------------------------------------------------------------------------
// Random access
// ---------------------------------------------------------------------------

struct RandomAccessSpec {
  std::vector<double> peak_rates;          ///< gamma_i > 0
  std::vector<BenefitFunction> benefits;   ///< U_i, one per user
  std::vector<double> weights;             ///< welfare weights, empty = all 1
  Interval action_range{0.0, 1.0};         ///< A_i, a sub-interval of [0,1]

  static RandomAccessSpec uniform(std::size_t n, double gamma = 1.0,
                                  BenefitFunction u = BenefitFunction::identity()) {
    return {std::vector<double>(n, gamma), std::vector<BenefitFunction>(n, u), {}, {0.0, 1.0}};
  }

  std::size_t users() const { return peak_rates.size(); }

  void validate() const {
    if (peak_rates.empty()) throw PreconditionError("random access: at least one user required");
    if (benefits.size() != peak_rates.size()) throw PreconditionError("random access: one benefit function per user");
    for (double g : peak_rates)
      if (!(g > 0.0)) throw PreconditionError("random access: peak rates must be positive");
    if (!(action_range.lo >= 0.0 && action_range.hi <= 1.0 && action_range.lo < action_range.hi))
      throw PreconditionError("random access: action range must be a nondegenerate subset of [0,1]");
  }
};

/// gamma_i a_i prod_{j != i} (1 - a_j) (1 - a0).
inline double access_rate(double gamma, std::size_t i, double a0, std::span<const double> a) {
  double r = gamma * a[i] * (1.0 - a0);
  for (std::size_t j = 0; j < a.size(); ++j)
    if (j != i) r *= 1.0 - a[j];
  return r;
}

/// Rate without the manager's transmissions (pricing scenario).
inline double access_rate(double gamma, std::size_t i, std::span<const double> a) {
  return access_rate(gamma, i, 0.0, a);
}

namespace detail {

// U'(r) * dr, treating 0 * inf as 0 (the partial of the rate vanishes).
inline double chain(const BenefitFunction& u, double r, double dr) {
  return dr == 0.0 ? 0.0 : u.derivative(r) * dr;
}

inline UtilityOracle random_access_user(std::size_t i, double gamma, const BenefitFunction& u) {
  UtilityOracle o;
  o.formula = "U_" + std::to_string(i + 1) + "(gamma a_i prod(1-a_j)(1-a_0)), U=" + u.label();
  o.value = [i, gamma, u](const ManagerAction& a0, std::span<const double> a) {
    return u(access_rate(gamma, i, a0[0], a));
  };
  if (u.has_analytic_derivative()) {
    o.d_manager = [i, gamma, u](const ManagerAction& a0, std::span<const double> a) {
      double dr = -gamma * a[i];
      for (std::size_t j = 0; j < a.size(); ++j)
        if (j != i) dr *= 1.0 - a[j];
      return chain(u, access_rate(gamma, i, a0[0], a), dr);
    };
    o.d_action = [i, gamma, u](const ManagerAction& a0, std::span<const double> a, std::size_t k) {
      double dr = gamma * (1.0 - a0[0]) * (k == i ? 1.0 : -a[i]);
      for (std::size_t j = 0; j < a.size(); ++j)
        if (j != i && j != k) dr *= 1.0 - a[j];
      return chain(u, access_rate(gamma, i, a0[0], a), dr);
    };
  }
  return o;
}

} // namespace detail

/// Users and manager choose transmission probabilities; the manager's
/// transmissions collide with everyone. Benevolent manager, perfect
/// monitoring, a_min = 0 and a_max = 1.
inline InterventionGame random_access_game(const RandomAccessSpec& spec) {
  spec.validate();
  InterventionGame g;
  const std::size_t n = spec.users();
  for (std::size_t i = 0; i < n; ++i) {
    g.actions.push_back(ActionSpace::interval(spec.action_range.lo, spec.action_range.hi));
    g.users.push_back(detail::random_access_user(i, spec.peak_rates[i], spec.benefits[i]));
  }
  g.manager_actions = {ActionSpace::interval(0.0, 1.0)};
  g.bounds = InterventionBounds::scalar(0.0, 1.0);
  g.weights = spec.weights.empty() ? std::vector<double>(n, 1.0) : spec.weights;
  g.manager = benevolent_manager(g.users, g.weights);
  g.monitoring = Monitoring::perfect();
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Pricing
// ---------------------------------------------------------------------------

struct PricingSpec {
  std::vector<double> peak_rates;
  std::vector<BenefitFunction> benefits;
  std::vector<double> prices;           ///< per unit of rate, >= 0
  std::optional<double> payment_cap;    ///< per-user upper end of the payment space

  std::size_t users() const { return peak_rates.size(); }

  void validate() const {
    if (peak_rates.empty()) throw PreconditionError("pricing: at least one user required");
    if (benefits.size() != peak_rates.size()) throw PreconditionError("pricing: one benefit function per user");
    if (!prices.empty() && prices.size() != peak_rates.size())
      throw PreconditionError("pricing: one price per user");
    for (double g : peak_rates)
      if (!(g > 0.0)) throw PreconditionError("pricing: peak rates must be positive");
    for (double p : prices)
      if (!(p >= 0.0)) throw PreconditionError("pricing: prices must be nonnegative");
    if (payment_cap && !(*payment_cap > 0.0)) throw PreconditionError("pricing: payment cap must be positive");
  }

  bool concave() const {
    return std::all_of(benefits.begin(), benefits.end(), [](const BenefitFunction& u) { return u.concave(); });
  }
};

/// Additively asymmetric game: the manager action is the payment vector and
/// u_i = U_i(r_i(a)) - payment_i, with a benevolent manager.
inline InterventionGame pricing_game(const PricingSpec& spec) {
  spec.validate();
  InterventionGame g;
  const std::size_t n = spec.users();
  std::vector<double> caps(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double natural = spec.benefits[i](spec.peak_rates[i]);
    caps[i] = spec.payment_cap ? *spec.payment_cap : (natural > 0.0 ? natural : 1.0);
    g.actions.push_back(ActionSpace::interval(0.0, 1.0));
    g.manager_actions.push_back(ActionSpace::interval(0.0, caps[i]));
    UtilityOracle o;
    o.formula = "U_" + std::to_string(i + 1) + "(r_i(a)) - p_i, U=" + spec.benefits[i].label();
    o.value = [i, gamma = spec.peak_rates[i], u = spec.benefits[i]](const ManagerAction& pay,
                                                                    std::span<const double> a) {
      return u(access_rate(gamma, i, a)) - pay[i];
    };
    g.users.push_back(std::move(o));
  }
  g.bounds = {ManagerAction(n, 0.0), caps};
  g.weights.assign(n, 1.0);
  g.manager = benevolent_manager(g.users, g.weights);
  g.validate();
  return g;
}

/// Linear pricing f_i(a) = p_i r_i(a).
inline Mechanism linear_pricing(std::vector<double> peak_rates, std::vector<double> prices) {
  if (peak_rates.size() != prices.size()) throw PreconditionError("linear_pricing: one price per user");
  return Mechanism(Mechanism::ClosedForm{
      [gamma = std::move(peak_rates), p = std::move(prices)](std::span<const double> a) {
        ManagerAction pay(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) pay[i] = p[i] * access_rate(gamma[i], i, a);
        return pay;
      },
      "linear_pricing"});
}

inline Mechanism linear_pricing(const PricingSpec& spec) { return linear_pricing(spec.peak_rates, spec.prices); }

struct PriceDesign {
  std::vector<double> prices;
  bool concavity_warning = false;  ///< some U_i is not concave: support is not guaranteed
  SupportReport verification;
};

/// p_i = U_i'(r_i(target)), then checks that linear pricing supports the target.
inline PriceDesign design_prices(const PricingSpec& spec, const Profile& target, const GridSpec& grid) {
  spec.validate();
  PriceDesign d;
  d.concavity_warning = !spec.concave();
  for (std::size_t i = 0; i < spec.users(); ++i) {
    if (!(target.at(i) > 0.0 && target[i] < 1.0))
      throw PreconditionError("design_prices: target coordinate a_" + std::to_string(i + 1) + " is not interior");
    const BenefitFunction& u = spec.benefits[i];
    const double r = access_rate(spec.peak_rates[i], i, target);
    double p;
    if (u.has_analytic_derivative()) {
      p = u.derivative(r);
    } else {
      const double x[] = {r};
      const Interval b[] = {{0.0, spec.peak_rates[i]}};
      p = partial_derivative([&u](std::span<const double> q) { return u(q[0]); }, std::span<const double>(x), 0,
                             std::span<const Interval>(b));
    }
    d.prices.push_back(p);
  }
  PricingSpec priced = spec;
  priced.prices = d.prices;
  const InterventionGame g = pricing_game(priced);
  d.verification = supports(g, linear_pricing(priced), target, grid);
  return d;
}

// ---------------------------------------------------------------------------
// Asymmetric intervention
// ---------------------------------------------------------------------------

enum class AsymmetricForm { additive, multiplicative };
enum class ManagerType { benevolent, self_interested, total_welfare };

using ProfileFn = std::function<double(std::span<const double>)>;

struct AsymmetricSpec {
  AsymmetricForm form = AsymmetricForm::additive;
  std::vector<ProfileFn> benefits;      ///< g_i(a); nonnegative for the multiplicative form
  ProfileFn operating_cost;             ///< c_0(a) >= 0, empty = 0
  ManagerType manager = ManagerType::benevolent;
  std::vector<ActionSpace> actions;     ///< empty = [0,1] for every user
  std::optional<double> payment_cap;    ///< additive form only
  std::size_t cap_grid_resolution = 21;
};

struct AsymmetricGame {
  InterventionGame game;
  std::vector<double> payment_caps;  ///< a_max components actually used
};

/// Lump-sum (additive) or proportional (multiplicative) taxation of each
/// user's benefit, with the selected manager objective. For the additive form
/// payments are capped so that a maximal intervention exists; unless set,
/// the cap for user i is the grid maximum of g_i.
inline AsymmetricGame asymmetric_game(const AsymmetricSpec& spec) {
  const std::size_t n = spec.benefits.size();
  if (n == 0) throw PreconditionError("asymmetric: at least one benefit function required");
  if (!spec.actions.empty() && spec.actions.size() != n)
    throw PreconditionError("asymmetric: one action space per user required");
  if (spec.payment_cap && !(*spec.payment_cap > 0.0)) throw PreconditionError("asymmetric: payment cap must be positive");

  InterventionGame g;
  g.actions = spec.actions.empty() ? std::vector<ActionSpace>(n, ActionSpace::interval(0.0, 1.0)) : spec.actions;

  // scan the benefit functions on the action grid: caps and sign check
  GridSpec scan;
  scan.resolution = std::max<std::size_t>(2, spec.cap_grid_resolution);
  scan.refine_rounds = 0;
  std::vector<double> gmax(n, -std::numeric_limits<double>::infinity());
  {
    const ProfileGrid pg(g, scan);
    pg.check_cap(kDefaultProfileCap);
    for (std::size_t flat = 0; flat < pg.size(); ++flat) {
      const Profile a = pg.at(flat);
      for (std::size_t i = 0; i < n; ++i) {
        const double v = spec.benefits[i](a);
        if (spec.form == AsymmetricForm::multiplicative && v < 0.0)
          throw PreconditionError("asymmetric: multiplicative benefit g_" + std::to_string(i + 1) +
                                  " is negative at " + format_point(a));
        gmax[i] = std::max(gmax[i], v);
      }
    }
  }

  std::vector<double> caps(n, 1.0);
  if (spec.form == AsymmetricForm::additive)
    for (std::size_t i = 0; i < n; ++i) caps[i] = spec.payment_cap ? *spec.payment_cap : (gmax[i] > 0.0 ? gmax[i] : 1.0);

  for (std::size_t i = 0; i < n; ++i) {
    g.manager_actions.push_back(ActionSpace::interval(0.0, caps[i]));
    UtilityOracle o;
    if (spec.form == AsymmetricForm::additive) {
      o.formula = "g_" + std::to_string(i + 1) + "(a) - a_0^" + std::to_string(i + 1);
      o.value = [i, gi = spec.benefits[i]](const ManagerAction& a0, std::span<const double> a) { return gi(a) - a0[i]; };
    } else {
      o.formula = "(1 - a_0^" + std::to_string(i + 1) + ") g_" + std::to_string(i + 1) + "(a)";
      o.value = [i, gi = spec.benefits[i]](const ManagerAction& a0, std::span<const double> a) {
        return (1.0 - a0[i]) * gi(a);
      };
    }
    g.users.push_back(std::move(o));
  }
  g.bounds = {ManagerAction(n, 0.0), caps};
  g.weights.assign(n, 1.0);

  const ProfileFn cost = spec.operating_cost ? spec.operating_cost : ProfileFn([](std::span<const double>) { return 0.0; });
  switch (spec.manager) {
  case ManagerType::benevolent:
    g.manager = benevolent_manager(g.users, g.weights);
    break;
  case ManagerType::self_interested:
    g.manager.formula = spec.form == AsymmetricForm::additive ? "sum_i a_0^i - c_0(a)" : "sum_i a_0^i g_i(a) - c_0(a)";
    g.manager.value = [form = spec.form, gs = spec.benefits, cost](const ManagerAction& a0, std::span<const double> a) {
      double s = 0.0;
      for (std::size_t i = 0; i < gs.size(); ++i) s += form == AsymmetricForm::additive ? a0[i] : a0[i] * gs[i](a);
      return s - cost(a);
    };
    break;
  case ManagerType::total_welfare:
    g.manager.formula = "sum_i g_i(a) - c_0(a)";
    g.manager.value = [gs = spec.benefits, cost](const ManagerAction&, std::span<const double> a) {
      double s = 0.0;
      for (const auto& gi : gs) s += gi(a);
      return s - cost(a);
    };
    break;
  }
  g.validate();
  return {std::move(g), std::move(caps)};
}

// ---------------------------------------------------------------------------
// Finite tabulated games
// ---------------------------------------------------------------------------

struct FiniteGameSpec {
  std::vector<std::vector<double>> user_actions;  ///< strictly increasing values per user
  std::vector<double> manager_actions;            ///< strictly increasing
  /// payoffs[m][flat][i]: utility of user i when the manager plays action m
  /// and users play the profile with row-major index `flat`.
  std::vector<std::vector<std::vector<double>>> payoffs;
  std::size_t minimal_index = 0;
  std::optional<std::size_t> maximal_index;       ///< default: last manager action
  std::vector<double> weights;
};

/// Lookup-table game with a benevolent manager and perfect monitoring.
inline InterventionGame finite_game(const FiniteGameSpec& spec) {
  InterventionGame g;
  const std::size_t n = spec.user_actions.size();
  std::size_t profiles = 1;
  for (const auto& v : spec.user_actions) {
    g.actions.push_back(ActionSpace::finite(v));
    profiles *= v.size();
  }
  g.manager_actions = {ActionSpace::finite(spec.manager_actions)};
  if (spec.payoffs.size() != spec.manager_actions.size())
    throw PreconditionError("finite game: one payoff table per manager action required");
  for (const auto& t : spec.payoffs) {
    if (t.size() != profiles) throw PreconditionError("finite game: payoff table must cover every profile");
    for (const auto& row : t)
      if (row.size() != n) throw PreconditionError("finite game: one payoff per user required");
  }
  const std::size_t hi = spec.maximal_index.value_or(spec.manager_actions.size() - 1);
  if (spec.minimal_index >= spec.manager_actions.size() || hi >= spec.manager_actions.size())
    throw PreconditionError("finite game: bound index out of range");

  auto locate = [actions = g.actions, mgr = g.manager_actions[0]](const ManagerAction& a0, std::span<const double> a) {
    const std::size_t m = mgr.index_of(a0[0]);
    if (m == ActionSpace::npos) throw PreconditionError("finite game: manager action " + std::to_string(a0[0]) + " not in its set");
    std::size_t flat = 0;
    for (std::size_t d = 0; d < actions.size(); ++d) {
      const std::size_t k = actions[d].index_of(a[d]);
      if (k == ActionSpace::npos)
        throw PreconditionError("finite game: a_" + std::to_string(d + 1) + " = " + std::to_string(a[d]) + " not in its set");
      flat = flat * actions[d].values().size() + k;
    }
    return std::pair{m, flat};
  };
  for (std::size_t i = 0; i < n; ++i) {
    UtilityOracle o;
    o.formula = "table";
    o.value = [i, locate, table = spec.payoffs](const ManagerAction& a0, std::span<const double> a) {
      const auto [m, flat] = locate(a0, a);
      return table[m][flat][i];
    };
    g.users.push_back(std::move(o));
  }
  g.bounds = InterventionBounds::scalar(spec.manager_actions[spec.minimal_index], spec.manager_actions[hi]);
  g.weights = spec.weights.empty() ? std::vector<double>(n, 1.0) : spec.weights;
  g.manager = benevolent_manager(g.users, g.weights);
  g.validate();
  return g;
}

// ---------------------------------------------------------------------------
// Direct intervention versus pricing
// ---------------------------------------------------------------------------

struct RobustnessRow {
  std::string family;
  bool supports = false;
  double max_gain = 0.0;
  std::vector<double> gains;
  std::vector<double> best_deviation;
};

struct RobustnessReport {
  Profile target;
  AffineRateProfile rates;               ///< computed once, reused for every family
  std::vector<double> prices;            ///< designed under the first family
  std::vector<RobustnessRow> affine;
  std::vector<RobustnessRow> fixed_prices;
  std::vector<RobustnessRow> redesigned_prices;
};

/// Builds the affine mechanism and a linear price vector for `target` under
/// the first benefit family, then checks both, unchanged, under every family.
/// Prices re-designed for each family are checked as well.
inline RobustnessReport robustness_experiment(const Profile& target, const std::vector<double>& peak_rates,
                                              const std::vector<BenefitFunction>& families, const GridSpec& grid) {
  if (families.empty()) throw PreconditionError("robustness_experiment: no benefit families given");
  if (target.size() != peak_rates.size()) throw PreconditionError("robustness_experiment: target/peak-rate size mismatch");
  const std::size_t n = target.size();
  auto access = [&](const BenefitFunction& u) {
    return random_access_game({peak_rates, std::vector<BenefitFunction>(n, u), {}, {0.0, 1.0}});
  };
  auto pricing = [&](const BenefitFunction& u, std::vector<double> p) {
    return PricingSpec{peak_rates, std::vector<BenefitFunction>(n, u), std::move(p), std::nullopt};
  };
  auto row = [](const BenefitFunction& u, const SupportReport& s) {
    return RobustnessRow{u.label(), s.verdict, s.max_gain(), s.gains, s.best_deviation};
  };

  RobustnessReport rep;
  rep.target = target;
  const InterventionGame first = access(families.front());
  rep.rates = compute_affine_rates(first, target);
  const Mechanism direct = affine(target, rep.rates, first.bounds);
  rep.prices = design_prices(pricing(families.front(), {}), target, grid).prices;
  const Mechanism priced = linear_pricing(peak_rates, rep.prices);

  for (const auto& u : families) {
    rep.affine.push_back(row(u, supports(access(u), direct, target, grid)));
    rep.fixed_prices.push_back(row(u, supports(pricing_game(pricing(u, rep.prices)), priced, target, grid)));
    const PriceDesign own = design_prices(pricing(u, {}), target, grid);
    rep.redesigned_prices.push_back(row(u, own.verification));
  }
  return rep;
}

} // namespace intervene
