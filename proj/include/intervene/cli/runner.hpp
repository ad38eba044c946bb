#pragma once

// Task execution for scenario files. `run` is free of file I/O and returns
// the report, the CSV text and the exit status; `run_file` wires it to disk.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "intervene/cli/scenario.hpp"
#include "intervene/intervene.hpp"

namespace intervene::cli {

enum ExitStatus : int { kSuccess = 0, kNegativeVerdict = 1, kInputError = 2 };

inline constexpr const char* kGridEnvVar = "INTERVENE_GRID";

struct Overrides {
  std::optional<std::size_t> grid;
  std::optional<std::size_t> refine;
  std::optional<std::string> csv_path;
  std::optional<std::string> report_path;
};

struct RunResult {
  int exit_code = kSuccess;
  std::string report;
  std::string csv;
};

/// 17 significant digits, the CSV number format.
inline std::string csv_number(double v) {
  if (!std::isfinite(v)) throw DataError("refusing to emit a non-finite number");
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Shortest round-trip representation, always with a decimal point.
inline std::string pretty(double v) {
  char buf[32];
  for (int digits = 1; digits <= 17; ++digits) {
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  std::string s = buf;
  if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

inline std::string pretty(std::span<const double> p) {
  std::string s = "(";
  for (std::size_t k = 0; k < p.size(); ++k) s += (k ? ", " : "") + pretty(p[k]);
  return s + ")";
}

class CsvWriter {
public:
  explicit CsvWriter(const std::vector<std::string>& header) { line(header); }

  void row(const std::vector<std::string>& cells) { line(cells); }
  std::string str() const { return os_.str(); }

private:
  void line(const std::vector<std::string>& cells) {
    for (std::size_t k = 0; k < cells.size(); ++k) os_ << (k ? "," : "") << cells[k];
    os_ << '\n';
  }
  std::ostringstream os_;
};

inline std::vector<std::string> profile_header(std::size_t n) {
  std::vector<std::string> h;
  for (std::size_t i = 0; i < n; ++i) h.push_back("a_" + std::to_string(i + 1));
  return h;
}

// ---------------------------------------------------------------------------
// Grid and mechanism assembly
// ---------------------------------------------------------------------------

inline GridSpec resolve_grid(const Scenario& sc, const Overrides& ov, std::size_t users) {
  GridSpec g = GridSpec::defaults_for(users);
  if (const char* env = std::getenv(kGridEnvVar); env && *env) {
    const double v = parse_number(env, std::string("environment ") + kGridEnvVar);
    if (v < 2 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw ScenarioError(std::string("environment ") + kGridEnvVar + ": expected an integer >= 2");
    g.resolution = static_cast<std::size_t>(v);
  }
  g.resolution = sc.task.count("grid", g.resolution);
  g.refine_rounds = sc.task.count("refine", g.refine_rounds);
  g.shrink = sc.task.number("shrink", g.shrink);
  if (ov.grid) g.resolution = *ov.grid;
  if (ov.refine) g.refine_rounds = *ov.refine;
  try {
    g.validate();
  } catch (const PreconditionError& e) {
    throw ScenarioError(std::string("[task] grid: ") + e.what());
  }
  return g;
}

struct Context {
  const Scenario& scenario;
  Model model;
  GridSpec grid;
  std::size_t users() const { return model.game.players(); }
};

inline Profile read_profile(const Section& s, const std::string& key, std::size_t n) { return s.numbers(key, n); }

/// Mechanism described by `kind` and a parameter accessor.
inline Mechanism make_mechanism(const Context& ctx, const std::string& kind, const Section& s,
                                std::optional<Profile> target_override = std::nullopt,
                                std::optional<std::vector<double>> rates_override = std::nullopt) {
  const InterventionGame& g = ctx.model.game;
  const std::size_t n = ctx.users();
  if (kind == "constant") return constant(s.numbers("value", g.manager_dims()), g.bounds);
  if (kind == "max_punishment") return max_punishment(target_override.value_or(read_profile(s, "target", n)), g.bounds);
  if (kind == "affine") {
    const Profile target = target_override.value_or(read_profile(s, "target", n));
    std::vector<double> rates;
    if (rates_override) rates = *rates_override;
    else if (!s.has("rates") || s.is_auto("rates")) rates = compute_affine_rates(g, target);
    else rates = s.numbers("rates", n);
    return affine(target, rates, g.bounds);
  }
  if (kind == "pricing") {
    if (!ctx.model.pricing) throw ScenarioError(s.where("type") + ": pricing mechanism requires a pricing model");
    PricingSpec spec = *ctx.model.pricing;
    if (s.has("prices") && !s.is_auto("prices")) {
      spec.prices = s.numbers("prices", n);
    } else if (spec.prices.empty()) {
      const Profile target = target_override.value_or(read_profile(s, "target", n));
      spec.prices = design_prices(spec, target, ctx.grid).prices;
    }
    return linear_pricing(spec);
  }
  if (kind == "tabulated") {
    // entries = a_1,a_2:a0; ...
    std::vector<std::pair<Profile, ManagerAction>> table;
    for (const auto& entry : split(s.text("entries"), ';')) {
      if (entry.empty()) continue;
      const auto parts = split(entry, ':');
      if (parts.size() != 2) throw ScenarioError(s.where("entries") + ": entries are written profile:action");
      Profile p = parse_numbers(parts[0], s.where("entries"));
      if (p.size() != n) throw ScenarioError(s.where("entries") + ": profile of wrong length");
      table.emplace_back(std::move(p), parse_numbers(parts[1], s.where("entries")));
    }
    return tabulated(std::move(table));
  }
  throw ScenarioError(s.where("type") + ": unknown mechanism '" + kind + "'");
}

inline const Section& require_mechanism(const Scenario& sc, const std::string& task) {
  if (!sc.mechanism) throw ScenarioError("task " + task + " requires a [mechanism] block");
  return *sc.mechanism;
}

inline std::optional<Profile> mechanism_target(const Context& ctx) {
  const auto& m = ctx.scenario.mechanism;
  if (m && m->has("target")) return read_profile(*m, "target", ctx.users());
  return std::nullopt;
}

/// Profile a task is about: [task] profile/target, else the mechanism target.
inline Profile task_profile(const Context& ctx) {
  const Section& t = ctx.scenario.task;
  if (t.has("profile")) return read_profile(t, "profile", ctx.users());
  if (t.has("target")) return read_profile(t, "target", ctx.users());
  if (auto m = mechanism_target(ctx)) return *m;
  throw ScenarioError("[task] profile: missing field (no mechanism target to fall back on)");
}

// ---------------------------------------------------------------------------
// Tasks
// ---------------------------------------------------------------------------

inline RunResult task_verify(const Context& ctx) {
  const Section& ms = require_mechanism(ctx.scenario, "verify");
  const Mechanism f = make_mechanism(ctx, ms.text("type"), ms);
  const Profile a = task_profile(ctx);
  const SupportReport rep = supports(ctx.model.game, f, a, ctx.grid);

  std::ostringstream os;
  os << "mechanism: " << f.describe() << '\n'
     << "profile: " << pretty(a) << '\n'
     << "grid: " << ctx.grid.resolution << " points, " << ctx.grid.refine_rounds << " refinement rounds\n"
     << "supports: " << (rep.verdict ? "true" : "false") << "; max gain " << pretty(rep.max_gain()) << '\n';
  CsvWriter csv({"user", "best_deviation", "gain"});
  for (std::size_t i = 0; i < rep.gains.size(); ++i) {
    os << "  user " << i + 1 << ": payoff " << pretty(rep.on_profile[i]) << ", best deviation "
       << pretty(rep.best_deviation[i]) << ", gain " << pretty(rep.gains[i]) << '\n';
    csv.row({std::to_string(i + 1), csv_number(rep.best_deviation[i]), csv_number(rep.gains[i])});
  }
  return {rep.verdict ? kSuccess : kNegativeVerdict, os.str(), csv.str()};
}

inline RunResult task_solve(const Context& ctx) {
  const EquilibriumResult eq = find_intervention_equilibrium(ctx.model.game, ctx.grid);
  std::ostringstream os;
  os << "intervention equilibrium profile: " << pretty(eq.profile) << '\n'
     << "mechanism: " << eq.mechanism.describe() << '\n'
     << "manager value: " << pretty(eq.manager_value) << '\n'
     << "candidates examined: " << eq.candidates_examined << '\n'
     << "verified supports: " << (eq.verification.verdict ? "true" : "false") << "; max gain "
     << pretty(eq.verification.max_gain()) << '\n';
  auto header = profile_header(ctx.users());
  header.push_back("manager_value");
  CsvWriter csv(header);
  std::vector<std::string> row;
  for (double x : eq.profile) row.push_back(csv_number(x));
  row.push_back(csv_number(eq.manager_value));
  csv.row(row);
  return {kSuccess, os.str(), csv.str()};
}

inline RunResult task_design_affine(const Context& ctx) {
  const Profile target = task_profile(ctx);
  const AffineRateProfile rates = compute_affine_rates(ctx.model.game, target);
  Prop4Options opt;
  opt.samples = ctx.scenario.task.count("samples", opt.samples);
  const Prop4Report cond = verify_prop4_conditions(ctx.model.game, target, rates, opt);
  const SupportReport rep = supports(ctx.model.game, affine(target, rates, ctx.model.game.bounds), target, ctx.grid);
  std::ostringstream os;
  os << "target: " << pretty(target) << '\n' << "rates: " << pretty(rates) << '\n' << cond.summary()
     << "supports: " << (rep.verdict ? "true" : "false") << "; max gain " << pretty(rep.max_gain()) << '\n';
  CsvWriter csv({"user", "rate"});
  for (std::size_t i = 0; i < rates.size(); ++i) csv.row({std::to_string(i + 1), csv_number(rates[i])});
  return {rep.verdict ? kSuccess : kNegativeVerdict, os.str(), csv.str()};
}

inline RunResult task_strong_check(const Context& ctx) {
  const Section& ms = require_mechanism(ctx.scenario, "strong-check");
  const Mechanism f = make_mechanism(ctx, ms.text("type"), ms);
  const Profile a = task_profile(ctx);
  const std::size_t cap = ctx.scenario.task.count("cap", kDefaultProfileCap);
  const StrongSupportResult r = strongly_supports(ctx.model.game, f, a, ctx.grid, cap);
  std::ostringstream os;
  os << "mechanism: " << f.describe() << '\n'
     << "profile: " << pretty(a) << '\n'
     << "profiles enumerated: " << r.profiles_enumerated << '\n'
     << "profile is a grid Nash equilibrium: " << (r.target_is_nash ? "true" : "false") << '\n'
     << "other grid Nash equilibria: " << r.other_equilibria.size() << '\n'
     << "grid-strong support: " << (r.strongly_supported ? "true" : "false") << '\n';
  CsvWriter csv(profile_header(ctx.users()));
  for (const auto& p : r.other_equilibria) {
    std::vector<std::string> row;
    for (double x : p) row.push_back(csv_number(x));
    csv.row(row);
  }
  return {r.strongly_supported ? kSuccess : kNegativeVerdict, os.str(), csv.str()};
}

inline RunResult task_maximin(const Context& ctx) {
  const Section& ms = require_mechanism(ctx.scenario, "maximin");
  std::vector<Mechanism> family;
  std::vector<std::string> labels;
  // family = kind:params; kind:params ...   (affine params: target|rates)
  for (const auto& item : split(ms.text("family"), ';')) {
    if (item.empty()) continue;
    const auto colon = item.find(':');
    const std::string kind = trim(item.substr(0, colon));
    const std::string params = colon == std::string::npos ? "" : item.substr(colon + 1);
    boost::property_tree::ptree t;
    if (kind == "constant") {
      t.put("value", params);
    } else if (kind == "affine") {
      const auto bar = params.find('|');
      t.put("target", params.substr(0, bar));
      if (bar != std::string::npos) t.put("rates", params.substr(bar + 1));
    } else {
      t.put("target", params);
      t.put("prices", params);
    }
    family.push_back(make_mechanism(ctx, kind, Section("mechanism", t)));
    labels.push_back(trim(item));
  }
  if (family.empty()) throw ScenarioError(ms.where("family") + ": empty mechanism family");
  const std::size_t cap = ctx.scenario.task.count("cap", kDefaultProfileCap);
  const MaximinResult r = maximin_design(ctx.model.game, family, ctx.grid, cap);
  std::ostringstream os;
  CsvWriter csv({"index", "worst_value", "equilibria"});
  for (std::size_t k = 0; k < r.entries.size(); ++k) {
    const auto& e = r.entries[k];
    os << "  [" << k << "] " << labels[k] << ": ";
    if (e.equilibria == 0) os << "no grid Nash profile (scores -inf)\n";
    else os << "worst value " << pretty(e.worst_value) << " at " << pretty(*e.worst_profile) << " over "
            << e.equilibria << " equilibria\n";
    csv.row({std::to_string(k), e.equilibria ? csv_number(e.worst_value) : "-inf", std::to_string(e.equilibria)});
  }
  std::ostringstream head;
  head << "maximin choice: [" << r.index << "] " << labels[r.index] << "; worst-case value "
       << pretty(r.worst_value) << '\n';
  return {kSuccess, head.str() + os.str(), csv.str()};
}

inline RunResult task_robustness(const Context& ctx) {
  const Section& t = ctx.scenario.task;
  if (!ctx.model.random_access) throw ScenarioError("task robustness requires a random_access model");
  const Profile target = task_profile(ctx);
  std::vector<BenefitFunction> families;
  for (const auto& item : split(t.text("families", "identity,cube,satexp"), ','))
    families.push_back(parse_benefit(item, t.where("families")));
  const RobustnessReport r = robustness_experiment(target, ctx.model.random_access->peak_rates, families, ctx.grid);

  std::ostringstream os;
  os << "target: " << pretty(target) << '\n'
     << "affine rates (fixed): " << pretty(r.rates) << '\n'
     << "prices (designed for " << families.front().label() << "): " << pretty(r.prices) << '\n';
  CsvWriter csv({"instrument", "family", "supports", "max_gain"});
  auto emit = [&](const char* instrument, const std::vector<RobustnessRow>& rows) {
    for (const auto& row : rows) {
      os << "  " << instrument << " under " << row.family << ": supports " << (row.supports ? "true" : "false")
         << ", max gain " << pretty(row.max_gain) << '\n';
      csv.row({instrument, row.family, row.supports ? "1" : "0", csv_number(row.max_gain)});
    }
  };
  emit("affine", r.affine);
  emit("fixed_prices", r.fixed_prices);
  emit("redesigned_prices", r.redesigned_prices);
  return {kSuccess, os.str(), csv.str()};
}

inline RunResult task_prop4(const Context& ctx) {
  const Section& t = ctx.scenario.task;
  const Profile target = task_profile(ctx);
  AffineRateProfile rates;
  if (t.has("rates") && !t.is_auto("rates")) rates = t.numbers("rates", ctx.users());
  else if (ctx.scenario.mechanism && ctx.scenario.mechanism->has("rates") && !ctx.scenario.mechanism->is_auto("rates"))
    rates = ctx.scenario.mechanism->numbers("rates", ctx.users());
  else rates = compute_affine_rates(ctx.model.game, target);
  Prop4Options opt;
  opt.samples = t.count("samples", opt.samples);
  const std::string reading = t.text("negative_interval", "as_printed");
  if (reading == "mirrored") opt.negative_reading = NegativeRampReading::mirrored;
  else if (reading != "as_printed") throw ScenarioError(t.where("negative_interval") + ": expected as_printed or mirrored");
  const Prop4Report rep = verify_prop4_conditions(ctx.model.game, target, rates, opt);

  CsvWriter csv({"user", "sign", "condition", "status", "worst_margin", "witness"});
  for (const auto& u : rep.users)
    for (const auto& c : u.conditions)
      csv.row({std::to_string(u.user), to_string(u.sign), c.name, to_string(c.status),
               c.vacuous ? "" : csv_number(c.worst_margin), c.vacuous ? "" : csv_number(c.witness)});
  std::ostringstream os;
  os << "target: " << pretty(target) << '\n' << "rates: " << pretty(rates) << '\n' << rep.summary()
     << "unique maximizer: " << (rep.unique_maximizer ? "true" : "false") << '\n';
  return {rep.passed ? kSuccess : kNegativeVerdict, os.str(), csv.str()};
}

/// One row per sweep value: (value, supports, max_gain, manager_value).
/// Parameters: gamma<i>, price<i>, c<i>, target<i> (1-based user index).
inline RunResult task_sweep(const Context& base) {
  const Scenario& sc = base.scenario;
  const Section& t = sc.task;
  const std::string param = t.text("parameter");
  const Section& ms = require_mechanism(sc, "sweep");
  const std::size_t n = base.users();

  std::string kind;
  std::size_t user = 0;
  for (const char* k : {"gamma", "price", "target", "c"}) {
    const std::string prefix = k;
    if (param.rfind(prefix, 0) == 0 && param.size() > prefix.size()) {
      const std::string rest = param.substr(prefix.size());
      if (rest.find_first_not_of("0123456789") != std::string::npos) continue;
      kind = prefix;
      user = std::stoul(rest);
      break;
    }
  }
  if (kind.empty() || user < 1 || user > n) throw ScenarioError(t.where("parameter") + ": unknown parameter '" + param + "'");
  const std::string mech_kind = ms.text("type");
  if (kind == "c" && mech_kind != "affine") throw ScenarioError(t.where("parameter") + ": rate sweeps need an affine mechanism");
  if (kind == "price" && mech_kind != "pricing") throw ScenarioError(t.where("parameter") + ": price sweeps need a pricing mechanism");
  if (kind == "gamma" && !base.model.random_access && !base.model.pricing)
    throw ScenarioError(t.where("parameter") + ": gamma sweeps need a random_access or pricing model");

  const std::vector<double> values = t.numbers("values");
  CsvWriter csv({param, "supports", "max_gain", "manager_value"});
  std::ostringstream os;
  os << "sweep of " << param << " over " << values.size() << " values\n";

  for (double v : values) {
    Context ctx{sc, base.model, base.grid};
    std::optional<Profile> target = mechanism_target(ctx);
    std::optional<std::vector<double>> rates;
    if (kind == "gamma") {
      if (ctx.model.random_access) {
        ctx.model.random_access->peak_rates.at(user - 1) = v;
        ctx.model.game = random_access_game(*ctx.model.random_access);
      } else {
        ctx.model.pricing->peak_rates.at(user - 1) = v;
        ctx.model.game = pricing_game(*ctx.model.pricing);
      }
    }
    if (kind == "target") {
      if (!target) target = task_profile(ctx);
      target->at(user - 1) = v;
    }
    if (kind == "c") {
      if (!target) throw ScenarioError(ms.where("target") + ": missing field");
      rates = (!ms.has("rates") || ms.is_auto("rates")) ? compute_affine_rates(ctx.model.game, *target)
                                                         : ms.numbers("rates", n);
      rates->at(user - 1) = v;
    }
    Mechanism f = [&] {
      if (kind == "price") {
        PricingSpec spec = *ctx.model.pricing;
        spec.prices = ms.has("prices") && !ms.is_auto("prices")
                          ? ms.numbers("prices", n)
                          : design_prices(spec, target.value_or(task_profile(ctx)), ctx.grid).prices;
        spec.prices.at(user - 1) = v;
        return linear_pricing(spec);
      }
      return make_mechanism(ctx, mech_kind, ms, target, rates);
    }();
    const Profile a = kind == "target" ? *target : (t.has("profile") ? task_profile(ctx) : target.value_or(task_profile(ctx)));
    const SupportReport rep = supports(ctx.model.game, f, a, ctx.grid);
    const double mv = manager_value(ctx.model.game, f, a);
    os << "  " << param << " = " << pretty(v) << ": supports " << (rep.verdict ? "true" : "false") << ", max gain "
       << pretty(rep.max_gain()) << ", manager value " << pretty(mv) << '\n';
    csv.row({csv_number(v), rep.verdict ? "1" : "0", csv_number(rep.max_gain()), csv_number(mv)});
  }
  return {kSuccess, os.str(), csv.str()};
}

/// Samples the minimal/maximal-intervention ordering; [output] seed offsets
/// the low-discrepancy sequence.
inline RunResult task_assumption1(const Context& ctx) {
  const std::size_t samples = ctx.scenario.task.count("samples", 256);
  const std::size_t seed = ctx.scenario.output.count("seed", 0);
  const Assumption1Report r = validate_assumption1(ctx.model.game, samples, seed);
  CsvWriter csv({"player", "inequality", "slack"});
  for (const auto& v : r.violations) csv.row({std::to_string(v.player), v.inequality, csv_number(v.slack)});
  return {r.passed ? kSuccess : kNegativeVerdict, r.summary() + "\n", csv.str()};
}

/// Executes a parsed scenario. Input problems throw ScenarioError; library
/// precondition, data and resource errors are mapped to ScenarioError too.
inline RunResult run(const Scenario& sc, const Overrides& ov = {}) {
  try {
    Model model = build_model(sc.model);
    const GridSpec grid = resolve_grid(sc, ov, model.game.players());
    Context ctx{sc, std::move(model), grid};
    const std::string task = sc.task.text("type");
    if (task == "verify") return task_verify(ctx);
    if (task == "solve") return task_solve(ctx);
    if (task == "design-affine") return task_design_affine(ctx);
    if (task == "strong-check") return task_strong_check(ctx);
    if (task == "maximin") return task_maximin(ctx);
    if (task == "robustness") return task_robustness(ctx);
    if (task == "prop4") return task_prop4(ctx);
    if (task == "sweep") return task_sweep(ctx);
    if (task == "assumption1") return task_assumption1(ctx);
    throw ScenarioError(sc.task.where("type") + ": unknown task '" + task + "'");
  } catch (const ScenarioError&) {
    throw;
  } catch (const ResourceError& e) {
    throw ScenarioError(std::string(e.what()));
  } catch (const NoSupportableProfile& e) {
    throw ScenarioError(std::string(e.what()));
  } catch (const PreconditionError& e) {
    throw ScenarioError(std::string(e.what()));
  } catch (const SingularityError& e) {
    throw ScenarioError(std::string(e.what()));
  } catch (const DataError& e) {
    throw ScenarioError(std::string(e.what()));
  }
}

/// Loads, runs and writes artifacts. The report always goes to `out`.
inline int run_file(const std::string& path, const Overrides& ov, std::ostream& out, std::ostream& err) {
  try {
    const Scenario sc = load_scenario(path);
    const RunResult r = run(sc, ov);
    out << r.report;
    const std::string report_path = ov.report_path.value_or(sc.output.text("report", ""));
    const std::string csv_path = ov.csv_path.value_or(sc.output.text("csv", ""));
    if (!report_path.empty()) {
      std::ofstream f(report_path, std::ios::binary);
      if (!(f << r.report)) throw ScenarioError(report_path + ": cannot write report");
    }
    if (!csv_path.empty()) {
      std::ofstream f(csv_path, std::ios::binary);
      if (!(f << r.csv)) throw ScenarioError(csv_path + ": cannot write CSV");
    }
    return r.exit_code;
  } catch (const ScenarioError& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
}

} // namespace intervene::cli
