// Scenario definitions: systems, constants, initial conditions, input and
// simulation window, loaded from flat sectioned key=value files. Runs the
// check + simulate pipeline and assembles the artifacts.
//
// Config format (sections in any order, '#' starts a comment):
//
//   [scenario]
//   name = example2
//   notes = free text carried into reports
//
//   [system_a]                # second-order system, coefficients by power
//   a2 = 1                    # expression in t, or switched form:
//   a1 = base:-1 gain:1       #   value(t) = base + gain*sigma(t)
//   a0 = base:-2 gain:2
//   domain_start = 0          # optional validity-domain start
//
//   [switching]               # the shared level table for sigma(t)
//   level = 0 1 0             # t_start t_end value ('inf' allowed)
//   level = 1 3 10
//
//   [constants]               # either this ...
//   k2 = 1
//   k1 = -2                   # values are expression strings: sqrt(2) works
//   k0 = 4
//
//   [system_b]                # ... or an explicit partner (b2/b1/b0 keys,
//   b1 = t                    # order inferred from the highest key present)
//   b0 = (t+1)/t
//
//   [initial]
//   mode = nonrelaxed         # relaxed = zero initial conditions
//   t0 = 0
//   y0 = 0.6
//   dy0 = auto                # number, or auto = admissible-ray slope * y0
//
//   [input]
//   kind = sine               # zero | sine
//   amplitude = -10
//   frequency = 0.5           # Hz
//   phase = 0
//
//   [simulation]
//   t_end = 6
//   h = 1e-3
//
//   [tolerances]              # all optional
//   gamma = 1e-8
//   delta = 1e-9
//   residual = 1e-9
//   sim = auto                # equality threshold; auto = 1e-5*(1+max|y|)
//   onset = auto              # onset-detection threshold; auto = sim/100

#pragma once

#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commutant/conditions.hpp"
#include "commutant/expr.hpp"
#include "commutant/ltv.hpp"
#include "commutant/metrics.hpp"
#include "commutant/simulate.hpp"
#include "commutant/synthesis.hpp"

namespace commutant {

enum class CoeffForm { expression, switched };

struct CoeffSpec {
  CoeffForm form = CoeffForm::expression;
  std::string expr_text = "0";
  double base = 0.0;
  double gain = 0.0;
};

struct SystemSpec {
  int order = 2;
  // indexed by power, [0..order]
  std::array<CoeffSpec, 3> coeff{};
  std::optional<double> domain_start;
};

struct Scenario {
  std::string name = "scenario";
  std::string notes;
  SystemSpec system_a;
  std::optional<SystemSpec> system_b;
  std::optional<CommutativityConstants> constants;
  std::vector<SwitchingSignal::Level> switching;

  IcMode ic_mode = IcMode::nonrelaxed;
  double t0 = 0.0;
  double y0 = 0.0;
  std::optional<double> dy0;  // unset = auto (admissible-ray slope * y0)

  InputSignal input;
  double t_end = 1.0;
  double h = 1e-3;

  Tolerances tols;
  std::optional<double> tol_sim;    // absolute equality threshold; unset = auto
  std::optional<double> tol_onset;  // absolute onset threshold; unset = sim/100
};

namespace detail {

struct ConfigEntry {
  std::string key;
  std::string value;
  int line;
};

using ConfigSections = std::map<std::string, std::vector<ConfigEntry>>;

inline std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline ConfigSections parse_config(std::istream& in, const std::string& source) {
  ConfigSections out;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ValidationError(source + ":" + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];  // register even if empty
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ValidationError(source + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (section.empty())
      throw ValidationError(source + ":" + std::to_string(lineno) + ": entry outside any [section]");
    if (key.empty())
      throw ValidationError(source + ":" + std::to_string(lineno) + ": empty key");
    out[section].push_back({key, value, lineno});
  }
  return out;
}

inline double parse_scalar(const std::string& value, const std::string& where) {
  if (value == "inf") return kInf;
  if (value == "-inf") return -kInf;
  try {
    Expr e = parse_expression(value);
    if (e.depends_on_time()) throw ValidationError(where + ": value must be a constant, got '" + value + "'");
    return e.evaluate(0.0);
  } catch (const ParseError& pe) {
    throw ValidationError(where + ": " + pe.what());
  } catch (const DomainError& de) {
    throw ValidationError(where + ": " + de.what());
  }
}

inline CoeffSpec parse_coeff(const std::string& value, const std::string& where) {
  CoeffSpec c;
  if (value.rfind("base:", 0) == 0) {
    std::istringstream is(value);
    std::string base_tok, gain_tok;
    is >> base_tok >> gain_tok;
    if (base_tok.rfind("base:", 0) != 0 || gain_tok.rfind("gain:", 0) != 0 || !is.eof())
      throw ValidationError(where + ": switched coefficient must look like 'base:<num> gain:<num>'");
    c.form = CoeffForm::switched;
    c.base = parse_scalar(base_tok.substr(5), where);
    c.gain = parse_scalar(gain_tok.substr(5), where);
    return c;
  }
  try {
    (void)parse_expression(value);  // validate now, build later
  } catch (const ParseError& pe) {
    throw ValidationError(where + ": " + pe.what());
  }
  c.form = CoeffForm::expression;
  c.expr_text = value;
  return c;
}

// Entries are looked up once each so unknown keys can be reported.
class SectionReader {
 public:
  SectionReader(const ConfigSections& all, const std::string& section, const std::string& source)
      : source_(source), section_(section) {
    auto it = all.find(section);
    if (it != all.end()) {
      entries_ = &it->second;
      used_.assign(entries_->size(), false);
    }
  }

  bool present() const { return entries_ != nullptr; }

  std::optional<std::string> take(const std::string& key) {
    if (!entries_) return std::nullopt;
    for (std::size_t i = 0; i < entries_->size(); ++i)
      if (!used_[i] && (*entries_)[i].key == key) {
        used_[i] = true;
        return (*entries_)[i].value;
      }
    return std::nullopt;
  }

  std::vector<std::string> take_all(const std::string& key) {
    std::vector<std::string> out;
    if (!entries_) return out;
    for (std::size_t i = 0; i < entries_->size(); ++i)
      if (!used_[i] && (*entries_)[i].key == key) {
        used_[i] = true;
        out.push_back((*entries_)[i].value);
      }
    return out;
  }

  void reject_unknown() const {
    if (!entries_) return;
    for (std::size_t i = 0; i < entries_->size(); ++i)
      if (!used_[i])
        throw ValidationError(source_ + ":" + std::to_string((*entries_)[i].line) + ": unknown key '" +
                              (*entries_)[i].key + "' in [" + section_ + "]");
  }

  std::string where(const std::string& key) const { return source_ + ": [" + section_ + "] " + key; }

 private:
  const std::vector<ConfigEntry>* entries_ = nullptr;
  std::vector<bool> used_;
  std::string source_;
  std::string section_;
};

}  // namespace detail

/// Parses a scenario from config text. Throws ValidationError with
/// source:line positions on malformed input.
inline Scenario parse_scenario_text(const std::string& text, const std::string& source = "<config>") {
  std::istringstream in(text);
  auto sections = detail::parse_config(in, source);

  for (const auto& [name, entries] : sections) {
    static const char* known[] = {"scenario", "system_a", "system_b", "constants",
                                  "switching", "initial",  "input",    "simulation",
                                  "tolerances"};
    bool ok = false;
    for (const char* k : known) ok = ok || name == k;
    if (!ok)
      throw ValidationError(source + ": unknown section [" + name + "]" +
                            (entries.empty() ? "" : " (line " + std::to_string(entries.front().line) + ")"));
  }

  Scenario s;

  detail::SectionReader meta(sections, "scenario", source);
  if (auto v = meta.take("name")) s.name = *v;
  if (auto v = meta.take("notes")) s.notes = *v;
  meta.reject_unknown();

  detail::SectionReader sysa(sections, "system_a", source);
  if (!sysa.present()) throw ValidationError(source + ": missing [system_a] section");
  {
    auto a2 = sysa.take("a2"), a1 = sysa.take("a1"), a0 = sysa.take("a0");
    if (!a2 || !a1 || !a0)
      throw ValidationError(source + ": [system_a] needs a2, a1 and a0 (system A is second order)");
    s.system_a.order = 2;
    s.system_a.coeff[2] = detail::parse_coeff(*a2, sysa.where("a2"));
    s.system_a.coeff[1] = detail::parse_coeff(*a1, sysa.where("a1"));
    s.system_a.coeff[0] = detail::parse_coeff(*a0, sysa.where("a0"));
    if (auto v = sysa.take("domain_start"))
      s.system_a.domain_start = detail::parse_scalar(*v, sysa.where("domain_start"));
    sysa.reject_unknown();
  }

  detail::SectionReader sw(sections, "switching", source);
  for (const auto& lv : sw.take_all("level")) {
    std::istringstream is(lv);
    std::string t0s, t1s, vs;
    if (!(is >> t0s >> t1s >> vs) || !(is >> std::ws).eof())
      throw ValidationError(sw.where("level") + ": expected 't_start t_end value', got '" + lv + "'");
    s.switching.push_back({detail::parse_scalar(t0s, sw.where("level")),
                           detail::parse_scalar(t1s, sw.where("level")),
                           detail::parse_scalar(vs, sw.where("level"))});
  }
  sw.reject_unknown();

  detail::SectionReader kc(sections, "constants", source);
  detail::SectionReader sysb(sections, "system_b", source);
  if (kc.present() && sysb.present())
    throw ValidationError(source + ": give either [constants] or [system_b], not both");
  if (!kc.present() && !sysb.present())
    throw ValidationError(source + ": missing [constants] (or an explicit [system_b])");
  if (kc.present()) {
    CommutativityConstants k;
    auto k2 = kc.take("k2"), k1 = kc.take("k1"), k0 = kc.take("k0");
    if (!k2 || !k1 || !k0) throw ValidationError(source + ": [constants] needs k2, k1 and k0");
    k.k2 = detail::parse_scalar(*k2, kc.where("k2"));
    k.k1 = detail::parse_scalar(*k1, kc.where("k1"));
    k.k0 = detail::parse_scalar(*k0, kc.where("k0"));
    kc.reject_unknown();
    s.constants = k;
  } else {
    SystemSpec b;
    auto b2 = sysb.take("b2"), b1 = sysb.take("b1"), b0 = sysb.take("b0");
    if (!b0) throw ValidationError(source + ": [system_b] needs at least b0");
    if (b2 && !b1) throw ValidationError(source + ": [system_b] has b2 but no b1");
    b.order = b2 ? 2 : (b1 ? 1 : 0);
    if (b2) b.coeff[2] = detail::parse_coeff(*b2, sysb.where("b2"));
    if (b1) b.coeff[1] = detail::parse_coeff(*b1, sysb.where("b1"));
    b.coeff[0] = detail::parse_coeff(*b0, sysb.where("b0"));
    if (auto v = sysb.take("domain_start"))
      b.domain_start = detail::parse_scalar(*v, sysb.where("domain_start"));
    sysb.reject_unknown();
    s.system_b = b;
  }

  detail::SectionReader ini(sections, "initial", source);
  if (auto v = ini.take("mode")) {
    if (*v == "relaxed")
      s.ic_mode = IcMode::relaxed;
    else if (*v == "nonrelaxed")
      s.ic_mode = IcMode::nonrelaxed;
    else
      throw ValidationError(ini.where("mode") + ": expected relaxed or nonrelaxed, got '" + *v + "'");
  }
  if (auto v = ini.take("t0")) s.t0 = detail::parse_scalar(*v, ini.where("t0"));
  if (auto v = ini.take("y0")) s.y0 = detail::parse_scalar(*v, ini.where("y0"));
  if (auto v = ini.take("dy0")) {
    if (*v != "auto") s.dy0 = detail::parse_scalar(*v, ini.where("dy0"));
  } else {
    s.dy0 = 0.0;
  }
  ini.reject_unknown();

  detail::SectionReader inp(sections, "input", source);
  if (auto v = inp.take("kind")) {
    if (*v == "zero")
      s.input.kind = InputSignal::Kind::zero;
    else if (*v == "sine")
      s.input.kind = InputSignal::Kind::sine;
    else
      throw ValidationError(inp.where("kind") + ": expected zero or sine, got '" + *v + "'");
  }
  if (auto v = inp.take("amplitude")) s.input.amplitude = detail::parse_scalar(*v, inp.where("amplitude"));
  if (auto v = inp.take("frequency")) s.input.frequency = detail::parse_scalar(*v, inp.where("frequency"));
  if (auto v = inp.take("phase")) s.input.phase = detail::parse_scalar(*v, inp.where("phase"));
  inp.reject_unknown();

  detail::SectionReader sim(sections, "simulation", source);
  if (!sim.present()) throw ValidationError(source + ": missing [simulation] section");
  if (auto v = sim.take("t_end"))
    s.t_end = detail::parse_scalar(*v, sim.where("t_end"));
  else
    throw ValidationError(source + ": [simulation] needs t_end");
  if (auto v = sim.take("h"))
    s.h = detail::parse_scalar(*v, sim.where("h"));
  else
    throw ValidationError(source + ": [simulation] needs h");
  sim.reject_unknown();

  detail::SectionReader tol(sections, "tolerances", source);
  if (auto v = tol.take("gamma")) s.tols.gamma = detail::parse_scalar(*v, tol.where("gamma"));
  if (auto v = tol.take("delta")) s.tols.delta = detail::parse_scalar(*v, tol.where("delta"));
  if (auto v = tol.take("residual")) s.tols.residual = detail::parse_scalar(*v, tol.where("residual"));
  if (auto v = tol.take("sim"); v && *v != "auto") s.tol_sim = detail::parse_scalar(*v, tol.where("sim"));
  if (auto v = tol.take("onset"); v && *v != "auto")
    s.tol_onset = detail::parse_scalar(*v, tol.where("onset"));
  tol.reject_unknown();

  return s;
}

inline Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open scenario file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario_text(ss.str(), path);
}

/// Serializes a scenario back to config text; reloading yields an
/// evaluation-equivalent scenario.
inline std::string save_scenario(const Scenario& s) {
  std::ostringstream os;
  auto num = [](double v) { return detail::fmt_double(v); };
  os << "[scenario]\nname = " << s.name << "\n";
  if (!s.notes.empty()) os << "notes = " << s.notes << "\n";
  auto coeff_value = [&](const CoeffSpec& c) {
    if (c.form == CoeffForm::switched) return "base:" + num(c.base) + " gain:" + num(c.gain);
    return c.expr_text;
  };
  os << "\n[system_a]\n";
  for (int p = s.system_a.order; p >= 0; --p)
    os << "a" << p << " = " << coeff_value(s.system_a.coeff[p]) << "\n";
  if (s.system_a.domain_start) os << "domain_start = " << num(*s.system_a.domain_start) << "\n";
  if (!s.switching.empty()) {
    os << "\n[switching]\n";
    for (const auto& lv : s.switching)
      os << "level = " << num(lv.t_start) << " " << (std::isinf(lv.t_end) ? "inf" : num(lv.t_end)) << " "
         << num(lv.value) << "\n";
  }
  if (s.constants) {
    os << "\n[constants]\nk2 = " << num(s.constants->k2) << "\nk1 = " << num(s.constants->k1)
       << "\nk0 = " << num(s.constants->k0) << "\n";
  }
  if (s.system_b) {
    os << "\n[system_b]\n";
    for (int p = s.system_b->order; p >= 0; --p)
      os << "b" << p << " = " << coeff_value(s.system_b->coeff[p]) << "\n";
    if (s.system_b->domain_start) os << "domain_start = " << num(*s.system_b->domain_start) << "\n";
  }
  os << "\n[initial]\nmode = " << (s.ic_mode == IcMode::relaxed ? "relaxed" : "nonrelaxed") << "\n";
  os << "t0 = " << num(s.t0) << "\ny0 = " << num(s.y0) << "\n";
  os << "dy0 = " << (s.dy0 ? num(*s.dy0) : std::string("auto")) << "\n";
  os << "\n[input]\nkind = " << (s.input.kind == InputSignal::Kind::zero ? "zero" : "sine") << "\n";
  if (s.input.kind != InputSignal::Kind::zero) {
    os << "amplitude = " << num(s.input.amplitude) << "\nfrequency = " << num(s.input.frequency) << "\n";
    if (s.input.phase != 0.0) os << "phase = " << num(s.input.phase) << "\n";
  }
  os << "\n[simulation]\nt_end = " << num(s.t_end) << "\nh = " << num(s.h) << "\n";
  os << "\n[tolerances]\ngamma = " << num(s.tols.gamma) << "\ndelta = " << num(s.tols.delta)
     << "\nresidual = " << num(s.tols.residual) << "\n";
  os << "sim = " << (s.tol_sim ? num(*s.tol_sim) : std::string("auto")) << "\n";
  os << "onset = " << (s.tol_onset ? num(*s.tol_onset) : std::string("auto")) << "\n";
  return os.str();
}

/// Systems built from a scenario, ready to check and simulate.
struct BuiltScenario {
  LtvSystem system_a;
  std::optional<LtvSystem> system_b;  // explicit partner only
  std::optional<SwitchingSignal> signal;
};

namespace detail {

inline PiecewiseCoefficient build_coeff(const CoeffSpec& c, const std::optional<SwitchingSignal>& sig,
                                        const std::string& where) {
  if (c.form == CoeffForm::expression) return PiecewiseCoefficient(parse_expression(c.expr_text));
  if (!sig)
    throw ValidationError(where + ": switched coefficient needs a [switching] level table");
  return apply_switching(c.base, c.gain, *sig);
}

inline LtvSystem build_system(const SystemSpec& spec, const std::optional<SwitchingSignal>& sig,
                              const std::string& where) {
  double ds = spec.domain_start.value_or(-kInf);
  if (spec.order == 2)
    return LtvSystem::second_order(build_coeff(spec.coeff[2], sig, where + ".a2"),
                                   build_coeff(spec.coeff[1], sig, where + ".a1"),
                                   build_coeff(spec.coeff[0], sig, where + ".a0"), ds);
  if (spec.order == 1)
    return LtvSystem::first_order(build_coeff(spec.coeff[1], sig, where + ".b1"),
                                  build_coeff(spec.coeff[0], sig, where + ".b0"), ds);
  return LtvSystem::scalar(build_coeff(spec.coeff[0], sig, where + ".b0"), ds);
}

}  // namespace detail

/// Builds and validates the scenario's systems: window inside the validity
/// domain and coefficient coverage, a2 > 0 for the synthesis square roots,
/// nonvanishing partner leading coefficient, auto initial conditions only
/// where an admissible ray exists.
inline BuiltScenario build_scenario(const Scenario& s) {
  BuiltScenario out{LtvSystem::scalar_gain(1.0), std::nullopt, std::nullopt};
  if (!(s.h > 0.0)) throw ValidationError("step size h must be positive");
  if (!(s.t0 < s.t_end)) throw ValidationError("empty window: t0 must be below t_end");
  if (!s.switching.empty()) out.signal = SwitchingSignal(s.switching);

  out.system_a = detail::build_system(s.system_a, out.signal, "system_a");
  if (s.t0 < out.system_a.domain_start())
    throw ValidationError("t0 = " + std::to_string(s.t0) + " is before system A's validity domain (starts at " +
                          std::to_string(out.system_a.domain_start()) + ")");
  for (int p = 0; p <= 2; ++p) {
    const auto& c = out.system_a.coeff(p);
    if (c.cover_start() > s.t0 || c.cover_end() < s.t_end)
      throw ValidationError("system A coefficients do not cover the window [" + std::to_string(s.t0) +
                            ", " + std::to_string(s.t_end) + "]");
  }
  out.system_a.require_leading_nonzero(s.t0, s.t_end, /*positive=*/true);

  if (s.system_b) {
    out.system_b = detail::build_system(*s.system_b, out.signal, "system_b");
    for (int p = 0; p <= out.system_b->order(); ++p) {
      const auto& c = out.system_b->coeff(p);
      if (c.cover_start() > s.t0 || c.cover_end() < s.t_end)
        throw ValidationError("system B coefficients do not cover the window");
    }
    out.system_b->require_leading_nonzero(s.t0, s.t_end);
  }

  if (!s.dy0 && s.ic_mode == IcMode::nonrelaxed) {
    double k1 = s.constants ? s.constants->k1 : 0.0;
    if (!s.constants)
      throw ValidationError("dy0 = auto needs [constants] (the admissible ray is defined by k1, k0)");
    if (k1 == 0.0)
      throw ValidationError("dy0 = auto needs k1 != 0; the feedback and scalar cases have no admissible ray");
  }
  return out;
}

struct RunOverrides {
  std::optional<double> t0, t_end, h, y0, tol_sim;
  std::optional<double> k2, k1, k0;
  std::optional<double> dy0;
  bool dy0_auto = false;
};

inline Scenario apply_overrides(Scenario s, const RunOverrides& ov) {
  if (ov.t0) s.t0 = *ov.t0;
  if (ov.t_end) s.t_end = *ov.t_end;
  if (ov.h) s.h = *ov.h;
  if (ov.y0) s.y0 = *ov.y0;
  if (ov.tol_sim) s.tol_sim = *ov.tol_sim;
  if (ov.dy0) s.dy0 = *ov.dy0;
  if (ov.dy0_auto) s.dy0.reset();
  if (ov.k2 || ov.k1 || ov.k0) {
    if (!s.constants)
      throw ValidationError("constants overrides apply to constants-based scenarios only");
    if (ov.k2) s.constants->k2 = *ov.k2;
    if (ov.k1) s.constants->k1 = *ov.k1;
    if (ov.k0) s.constants->k0 = *ov.k0;
  }
  return s;
}

struct RunResult {
  Scenario scenario;  // after overrides
  CommutativityConstants k{};
  bool constants_known = true;
  ConditionReport report;
  Vec2 ic{};
  Trajectory ab_forced, ba_forced, ab_ic, ba_ic;
  DeviationSummary dev_forced, dev_ic;
  ScenarioAssessment assessment;
};

namespace detail {

inline double pair_threshold(const Trajectory& a, const Trajectory& b, std::optional<double> absolute) {
  if (absolute) return *absolute;
  double maxy = 0.0;
  for (double v : a.output) maxy = std::max(maxy, std::abs(v));
  for (double v : b.output) maxy = std::max(maxy, std::abs(v));
  return 1e-5 * (1.0 + maxy);
}

inline InitialState stage_ic(const LtvSystem& sys, double t0, Vec2 y) {
  InitialState ic{t0, 0.0, 0.0};
  if (sys.order() >= 1) ic.y0 = y.x;
  if (sys.order() == 2) ic.dy0 = y.y;
  return ic;
}

}  // namespace detail

/// The full pipeline: build, classify, simulate both orderings (forced and
/// initial-condition responses separately), quantify deviations and confront
/// them with the algebraic verdict.
inline RunResult run_scenario(const Scenario& input_scenario, const RunOverrides& ov = {}) {
  RunResult r;
  r.scenario = apply_overrides(input_scenario, ov);
  const Scenario& s = r.scenario;
  BuiltScenario built = build_scenario(s);
  const LtvSystem& a = built.system_a;

  // Partner: synthesized from the constants, or explicit with recovered
  // constants (an explicit partner outside the synthesis map cannot commute;
  // the report then carries constants_known = false).
  std::optional<LtvSystem> b;
  if (s.constants) {
    r.k = *s.constants;
    r.constants_known = true;
    b = synth_partner(a, r.k);
  } else {
    auto rec = recover_constants(a, *built.system_b, s.t0, s.t_end);
    r.constants_known = rec.has_value();
    if (rec) r.k = *rec;
    b = built.system_b;
  }

  // Initial conditions for the non-relaxed runs (Y applies to both systems).
  Vec2 y{0.0, 0.0};
  if (s.ic_mode == IcMode::nonrelaxed) {
    y.x = s.y0;
    if (s.dy0) {
      y.y = *s.dy0;
    } else {
      if (!r.constants_known || r.k.k1 == 0.0)
        throw ValidationError("dy0 = auto needs constants with k1 != 0");
      y.y = required_ic_ray(a, r.k, s.t0, s.tols.delta).slope * s.y0;
    }
  }
  r.ic = y;

  if (r.constants_known) {
    r.report = classify_pair(a, r.k, s.ic_mode, y, s.t0, {s.t0, s.t_end}, s.tols);
  } else {
    r.report.theorem_case = built.system_b->order() == 2   ? TheoremCase::second_order_general
                            : built.system_b->order() == 1 ? TheoremCase::first_order_partner
                                                           : TheoremCase::scalar_partner;
    r.report.ic_mode = s.ic_mode;
    r.report.t0 = s.t0;
    r.report.constants_known = false;
    r.report.ic = y;
    r.report.notes = "explicit partner is not expressible through the synthesis map; pair cannot commute";
    r.report.commutative_until = s.t0;
  }
  if (!s.notes.empty()) r.report.notes = r.report.notes.empty() ? s.notes : r.report.notes + "; " + s.notes;

  InitialState za{s.t0, 0.0, 0.0};
  InitialState ya = detail::stage_ic(a, s.t0, y);
  InitialState yb = detail::stage_ic(*b, s.t0, y);
  InputSignal zero = InputSignal::zero();

  r.ab_forced = simulate_cascade(a, *b, s.input, za, za, s.t0, s.t_end, s.h);
  r.ba_forced = simulate_cascade(*b, a, s.input, za, za, s.t0, s.t_end, s.h);
  r.ab_ic = simulate_cascade(a, *b, zero, ya, yb, s.t0, s.t_end, s.h);
  r.ba_ic = simulate_cascade(*b, a, zero, yb, ya, s.t0, s.t_end, s.h);
  for (const Trajectory* tr : {&r.ab_forced, &r.ba_forced, &r.ab_ic, &r.ba_ic})
    if (tr->truncated)
      throw ValidationError("simulation diverged: " + tr->diagnostic +
                            "; shrink the window or the step size");
  r.ab_forced.ordering = "AB";
  r.ba_forced.ordering = "BA";
  r.ab_ic.ordering = "AB";
  r.ba_ic.ordering = "BA";
  r.ab_forced.scenario = r.ba_forced.scenario = r.ab_ic.scenario = r.ba_ic.scenario = s.name;

  double thr_forced = detail::pair_threshold(r.ab_forced, r.ba_forced, s.tol_sim);
  double thr_ic = detail::pair_threshold(r.ab_ic, r.ba_ic, s.tol_sim);
  r.dev_forced = deviation(r.ab_forced, r.ba_forced, thr_forced, s.tol_onset);
  r.dev_ic = deviation(r.ab_ic, r.ba_ic, thr_ic, s.tol_onset);

  r.assessment = assess_scenario(r.report, s.input, y, s.t_end, s.h, r.dev_forced, r.dev_ic);
  return r;
}

// ---------------------------------------------------------------------------
// Built-in scenarios

struct BuiltinScenario {
  const char* name;
  const char* description;
  const char* config;
};

inline const std::vector<BuiltinScenario>& builtin_scenarios() {
  static const std::vector<BuiltinScenario> table = {
      {"example1",
       "smooth second-order pair, commutative with tuned initial conditions at t0=1",
       R"(
[scenario]
name = example1
notes = admissible initial conditions depend on t0; rerun with --t0 1.5 to spoil them

[system_a]
a2 = 0.5*t^2
a1 = t+1
a0 = 1/(2*t^2)
domain_start = 0.1

[constants]
k2 = 2
k1 = sqrt(2)
k0 = 0.5

[initial]
mode = nonrelaxed
t0 = 1
y0 = 1
dy0 = auto

[input]
kind = sine
amplitude = 40
frequency = 2

[simulation]
t_end = 5
h = 1e-4
)"},
      {"example2",
       "switched pair (k1 = -2): forced responses part ways at the first switching instant",
       R"(
[scenario]
name = example2
notes = conditions hold on every dwell interval but a1 jumps at the switching instants

[system_a]
a2 = 1
a1 = base:-1 gain:1
a0 = base:-2 gain:2

[switching]
level = 0 1 0
level = 1 3 10
level = 3 4.5 0
level = 4.5 inf 10

[constants]
k2 = 1
k1 = -2
k0 = 4

[initial]
mode = nonrelaxed
t0 = 0
y0 = 0.6
dy0 = 1.5

[input]
kind = sine
amplitude = -10
frequency = 0.5

[simulation]
t_end = 6
h = 1e-3
)"},
      {"example2-feedback",
       "feedback conjugate (k1 = 0, k2+k0 = 5): forced responses equal, no nonzero admissible ICs",
       R"(
[scenario]
name = example2-feedback
notes = k2+k0 = 5 differs from 1, so no nonzero initial conditions commute

[system_a]
a2 = 1
a1 = base:-1 gain:1
a0 = base:-2 gain:2

[switching]
level = 0 1 0
level = 1 3 10
level = 3 4.5 0
level = 4.5 inf 10

[constants]
k2 = 1
k1 = 0
k0 = 4

[initial]
mode = nonrelaxed
t0 = 0
y0 = 0.6
dy0 = 1.5

[input]
kind = sine
amplitude = -10
frequency = 0.5

[simulation]
t_end = 6
h = 1e-3
)"},
      {"example2-feedback-unity",
       "feedback conjugate with k2+k0 = 1: commutes with arbitrary equal initial conditions",
       R"(
[scenario]
name = example2-feedback-unity

[system_a]
a2 = 1
a1 = base:-1 gain:1
a0 = base:-2 gain:2

[switching]
level = 0 1 0
level = 1 3 10
level = 3 4.5 0
level = 4.5 inf 10

[constants]
k2 = 0.5
k1 = 0
k0 = 0.5

[initial]
mode = nonrelaxed
t0 = 0
y0 = 1
dy0 = 1

[input]
kind = sine
amplitude = -10
frequency = 0.5

[simulation]
t_end = 6
h = 1e-3
)"},
      {"example2-scalar-identity",
       "scalar partner b0 = 1 (identity): commutes under nonzero initial conditions",
       R"(
[scenario]
name = example2-scalar-identity

[system_a]
a2 = 1
a1 = base:-1 gain:1
a0 = base:-2 gain:2

[switching]
level = 0 1 0
level = 1 3 10
level = 3 4.5 0
level = 4.5 inf 10

[constants]
k2 = 0
k1 = 0
k0 = 1

[initial]
mode = nonrelaxed
t0 = 0
y0 = 0.6
dy0 = 1.5

[input]
kind = sine
amplitude = -10
frequency = 0.5

[simulation]
t_end = 6
h = 1e-3
)"},
      {"example2-scalar-gain2",
       "scalar partner b0 = 2: commutes relaxed, fails with nonzero initial conditions",
       R"(
[scenario]
name = example2-scalar-gain2

[system_a]
a2 = 1
a1 = base:-1 gain:1
a0 = base:-2 gain:2

[switching]
level = 0 1 0
level = 1 3 10
level = 3 4.5 0
level = 4.5 inf 10

[constants]
k2 = 0
k1 = 0
k0 = 2

[initial]
mode = nonrelaxed
t0 = 0
y0 = 0.6
dy0 = 1.5

[input]
kind = sine
amplitude = -10
frequency = 0.5

[simulation]
t_end = 6
h = 1e-3
)"},
      {"example3",
       "switched pair (k1 = 2): commutative until the single switching instant at t = 1",
       R"(
[scenario]
name = example3
notes = partner b0 jumps to 1+9*sigma on the switched piece per the synthesis map (not 1+8*sigma as sometimes stated)

[system_a]
a2 = 1
a1 = base:-1 gain:3
a0 = base:-1 gain:6

[switching]
level = 0 1 0
level = 1 inf 3

[constants]
k2 = 1
k1 = 2
k0 = 3

[initial]
mode = nonrelaxed
t0 = 0
y0 = 1
dy0 = auto

[input]
kind = sine
amplitude = 15
frequency = 0.5

[simulation]
t_end = 6
h = 1e-3
)"},
  };
  return table;
}

inline std::optional<Scenario> load_builtin(const std::string& name) {
  for (const auto& b : builtin_scenarios())
    if (name == b.name) return parse_scenario_text(b.config, std::string("builtin:") + b.name);
  return std::nullopt;
}

}  // namespace commutant
