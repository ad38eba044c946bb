#pragma once

// Scenario files: sectioned key = value text ([model], [mechanism], [task],
// [output]); sequences are comma separated, lines starting with ';' are
// comments.

#include <cstdlib>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "intervene/intervene.hpp"

namespace intervene::cli {

/// Invalid scenario or flags; maps to exit status 2.
class ScenarioError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, sep)) out.push_back(trim(item));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

inline double parse_number(const std::string& text, const std::string& where) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || !std::isfinite(v))
    throw ScenarioError(where + ": '" + t + "' is not a finite decimal number");
  return v;
}

inline std::vector<double> parse_numbers(const std::string& text, const std::string& where) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) out.push_back(parse_number(item, where));
  return out;
}

/// Named block of a scenario with typed accessors whose errors name the field.
class Section {
public:
  Section() = default;
  Section(std::string name, boost::property_tree::ptree tree) : name_(std::move(name)), tree_(std::move(tree)) {}

  const std::string& name() const { return name_; }
  bool has(const std::string& key) const { return tree_.find(key) != tree_.not_found(); }

  std::string where(const std::string& key) const { return "[" + name_ + "] " + key; }

  std::string text(const std::string& key) const {
    auto it = tree_.find(key);
    if (it == tree_.not_found()) throw ScenarioError(where(key) + ": missing field");
    return trim(it->second.data());
  }
  std::string text(const std::string& key, const std::string& fallback) const { return has(key) ? text(key) : fallback; }

  double number(const std::string& key) const { return parse_number(text(key), where(key)); }
  double number(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

  std::size_t count(const std::string& key) const {
    const double v = number(key);
    if (v < 0 || v != static_cast<double>(static_cast<std::size_t>(v)))
      throw ScenarioError(where(key) + ": expected a nonnegative integer");
    return static_cast<std::size_t>(v);
  }
  std::size_t count(const std::string& key, std::size_t fallback) const { return has(key) ? count(key) : fallback; }

  std::vector<double> numbers(const std::string& key) const { return parse_numbers(text(key), where(key)); }

  /// List of length n; a single value is broadcast.
  std::vector<double> numbers(const std::string& key, std::size_t n) const {
    std::vector<double> v = numbers(key);
    if (v.size() == 1 && n > 1) v.assign(n, v[0]);
    if (v.size() != n)
      throw ScenarioError(where(key) + ": expected " + std::to_string(n) + " values, got " + std::to_string(v.size()));
    return v;
  }

  bool is_auto(const std::string& key) const { return has(key) && text(key) == "auto"; }

private:
  std::string name_;
  boost::property_tree::ptree tree_;
};

struct Scenario {
  std::string source;
  Section model;
  std::optional<Section> mechanism;
  Section task;
  Section output{"output", {}};
};

inline Scenario parse_scenario(std::istream& in, const std::string& source = "<scenario>") {
  boost::property_tree::ptree root;
  try {
    boost::property_tree::ini_parser::read_ini(in, root);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ScenarioError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Scenario s;
  s.source = source;
  bool has_model = false, has_task = false;
  for (const auto& [name, tree] : root) {
    if (tree.empty() && !tree.data().empty())
      throw ScenarioError(source + ": field '" + name + "' appears outside any section");
    if (name == "model") {
      s.model = Section(name, tree);
      has_model = true;
    } else if (name == "mechanism") {
      s.mechanism = Section(name, tree);
    } else if (name == "task") {
      s.task = Section(name, tree);
      has_task = true;
    } else if (name == "output") {
      s.output = Section(name, tree);
    } else {
      throw ScenarioError(source + ": unknown section [" + name + "]");
    }
  }
  if (!has_model) throw ScenarioError(source + ": missing [model] block");
  if (!has_task) throw ScenarioError(source + ": missing [task] block");
  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ScenarioError(path + ": cannot open scenario file");
  return parse_scenario(in, path);
}

// ---------------------------------------------------------------------------
// Model assembly
// ---------------------------------------------------------------------------

inline BenefitFunction parse_benefit(const std::string& text, const std::string& where) {
  const auto parts = split(text, ':');
  const std::string kind = parts.empty() ? std::string{} : parts[0];
  auto param = [&](double fallback) {
    return parts.size() > 1 ? parse_number(parts[1], where) : fallback;
  };
  try {
    if (kind == "identity") return BenefitFunction::identity();
    if (kind == "power") return BenefitFunction::power(param(1.0));
    if (kind == "sqrt") return BenefitFunction::power(0.5);
    if (kind == "cube") return BenefitFunction::power(3.0);
    if (kind == "log") return BenefitFunction::log_shifted(param(1e-3));
    if (kind == "satexp") return BenefitFunction::saturating_exp(param(1.0));
    if (kind == "tabulated") {
      // tabulated:x0/y0 x1/y1 ...
      std::vector<double> xs, ys;
      std::istringstream knots(parts.size() > 1 ? parts[1] : "");
      std::string knot;
      while (knots >> knot) {
        const auto xy = split(knot, '/');
        if (xy.size() != 2) throw ScenarioError(where + ": tabulated knots are written x/y");
        xs.push_back(parse_number(xy[0], where));
        ys.push_back(parse_number(xy[1], where));
      }
      return BenefitFunction::tabulated(xs, ys);
    }
  } catch (const PreconditionError& e) {
    throw ScenarioError(where + ": " + e.what());
  }
  throw ScenarioError(where + ": unknown benefit function '" + text + "'");
}

inline std::vector<BenefitFunction> parse_benefits(const Section& s, const std::string& key, std::size_t n) {
  std::vector<BenefitFunction> out;
  const auto items = split(s.text(key, "identity"), ',');
  for (const auto& item : items) out.push_back(parse_benefit(item, s.where(key)));
  if (out.size() == 1 && n > 1) out.assign(n, out[0]);
  if (out.size() != n) throw ScenarioError(s.where(key) + ": expected " + std::to_string(n) + " benefit functions");
  return out;
}

/// Everything derived from the [model] block.
struct Model {
  std::string type;
  InterventionGame game;
  std::optional<RandomAccessSpec> random_access;
  std::optional<PricingSpec> pricing;
};

inline std::size_t user_count(const Section& m) {
  const std::size_t n = m.count("users");
  if (n == 0) throw ScenarioError(m.where("users") + ": at least one user required");
  return n;
}

inline RandomAccessSpec random_access_spec(const Section& m) {
  const std::size_t n = user_count(m);
  RandomAccessSpec spec;
  spec.peak_rates = m.has("gamma") ? m.numbers("gamma", n) : std::vector<double>(n, 1.0);
  spec.benefits = parse_benefits(m, "benefit", n);
  if (m.has("weights")) spec.weights = m.numbers("weights", n);
  if (m.has("actions")) {
    const auto r = m.numbers("actions", 2);
    spec.action_range = {r[0], r[1]};
  }
  return spec;
}

inline PricingSpec pricing_spec(const Section& m) {
  const std::size_t n = user_count(m);
  PricingSpec spec;
  spec.peak_rates = m.has("gamma") ? m.numbers("gamma", n) : std::vector<double>(n, 1.0);
  spec.benefits = parse_benefits(m, "benefit", n);
  if (m.has("prices") && !m.is_auto("prices")) spec.prices = m.numbers("prices", n);
  if (m.has("cap")) spec.payment_cap = m.number("cap");
  return spec;
}

inline Model build_model(const Section& m) {
  Model model;
  model.type = m.text("type");
  try {
    if (model.type == "random_access") {
      model.random_access = random_access_spec(m);
      model.game = random_access_game(*model.random_access);
    } else if (model.type == "pricing") {
      model.pricing = pricing_spec(m);
      model.game = pricing_game(*model.pricing);
    } else if (model.type == "asymmetric") {
      const std::size_t n = user_count(m);
      AsymmetricSpec spec;
      const std::string form = m.text("form", "additive");
      if (form == "additive") spec.form = AsymmetricForm::additive;
      else if (form == "multiplicative") spec.form = AsymmetricForm::multiplicative;
      else throw ScenarioError(m.where("form") + ": expected additive or multiplicative");
      const std::string mgr = m.text("manager", "benevolent");
      if (mgr == "benevolent") spec.manager = ManagerType::benevolent;
      else if (mgr == "self_interested") spec.manager = ManagerType::self_interested;
      else if (mgr == "total_welfare") spec.manager = ManagerType::total_welfare;
      else throw ScenarioError(m.where("manager") + ": expected benevolent, self_interested or total_welfare");
      const std::string benefit = m.text("g", "own_action");
      const std::vector<double> gamma = m.has("gamma") ? m.numbers("gamma", n) : std::vector<double>(n, 1.0);
      for (std::size_t i = 0; i < n; ++i) {
        if (benefit == "own_action")
          spec.benefits.push_back([i](std::span<const double> a) { return a[i]; });
        else if (benefit == "access_rate")
          spec.benefits.push_back([i, g = gamma[i]](std::span<const double> a) { return access_rate(g, i, a); });
        else
          throw ScenarioError(m.where("g") + ": expected own_action or access_rate");
      }
      const double cost = m.number("cost", 0.0);
      if (cost < 0.0) throw ScenarioError(m.where("cost") + ": operating cost must be nonnegative");
      spec.operating_cost = [cost](std::span<const double>) { return cost; };
      if (m.has("cap")) spec.payment_cap = m.number("cap");
      model.game = asymmetric_game(spec).game;
    } else if (model.type == "finite") {
      const std::size_t n = user_count(m);
      FiniteGameSpec spec;
      std::size_t profiles = 1;
      for (std::size_t i = 0; i < n; ++i) {
        spec.user_actions.push_back(m.numbers("actions_" + std::to_string(i + 1)));
        profiles *= spec.user_actions.back().size();
      }
      spec.manager_actions = m.numbers("manager_actions");
      for (std::size_t k = 0; k < spec.manager_actions.size(); ++k) {
        const std::string key = "payoff_" + std::to_string(k);
        const auto flat = m.numbers(key);
        if (flat.size() != profiles * n)
          throw ScenarioError(m.where(key) + ": expected " + std::to_string(profiles * n) + " payoffs");
        std::vector<std::vector<double>> table(profiles, std::vector<double>(n));
        for (std::size_t p = 0; p < profiles; ++p)
          for (std::size_t i = 0; i < n; ++i) table[p][i] = flat[p * n + i];
        spec.payoffs.push_back(std::move(table));
      }
      model.game = finite_game(spec);
    } else {
      throw ScenarioError(m.where("type") + ": unknown model '" + model.type + "'");
    }
  } catch (const PreconditionError& e) {
    throw ScenarioError("[model]: " + std::string(e.what()));
  }
  return model;
}

} // namespace intervene::cli
