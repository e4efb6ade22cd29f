// commutant: synthesize, verify and simulate commutative partners of
// second-order linear time-varying systems.
//
//   commutant check <scenario>      algebraic conditions only
//   commutant simulate <scenario>   trajectories only (4 CSVs)
//   commutant run <scenario>        both, plus the agreement verdict
//   commutant list-builtins
//
// <scenario> is a config file path or a builtin name. Exit codes: 0 agreement
// (or success), 1 contradiction between algebra and simulation, 2 usage or
// scenario errors.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "commutant/commutant.hpp"

namespace {

commutant::Scenario resolve_scenario(const std::string& ref) {
  if (std::filesystem::exists(ref)) return commutant::load_scenario(ref);
  if (auto b = commutant::load_builtin(ref)) return *b;
  throw commutant::ValidationError("no scenario file or builtin named '" + ref + "' (see list-builtins)");
}

struct CommonFlags {
  std::string scenario_ref;
  std::string out_dir = ".";
  commutant::RunOverrides ov;
  std::string dy0_text;

  void attach(CLI::App* cmd, bool with_out_dir) {
    cmd->add_option("scenario", scenario_ref, "scenario file or builtin name")->required();
    cmd->add_option("--t0", ov.t0, "override the initial time");
    cmd->add_option("--t-end", ov.t_end, "override the horizon end");
    cmd->add_option("--h", ov.h, "override the integration step");
    cmd->add_option("--y0", ov.y0, "override y(t0)");
    cmd->add_option("--dy0", dy0_text, "override y'(t0): a number or 'auto'");
    cmd->add_option("--k2", ov.k2, "override k2");
    cmd->add_option("--k1", ov.k1, "override k1");
    cmd->add_option("--k0", ov.k0, "override k0");
    cmd->add_option("--tol-sim", ov.tol_sim, "absolute equality threshold (default 1e-5*(1+max|y|))");
    if (with_out_dir) cmd->add_option("--out-dir", out_dir, "directory for CSVs and reports");
  }

  void finalize() {
    if (dy0_text.empty()) return;
    if (dy0_text == "auto") {
      ov.dy0_auto = true;
    } else {
      ov.dy0 = std::stod(dy0_text);
    }
  }
};

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw commutant::ValidationError("cannot write '" + path.string() + "'");
  os << content;
}

void write_trajectory(const std::filesystem::path& path, const commutant::Trajectory& tr) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw commutant::ValidationError("cannot write '" + path.string() + "'");
  commutant::write_csv(tr, os);
}

std::vector<std::string> write_artifacts(const commutant::RunResult& r, const std::string& out_dir,
                                         bool with_reports) {
  namespace fs = std::filesystem;
  fs::path dir(out_dir);
  fs::create_directories(dir);
  const std::string& n = r.scenario.name;
  std::vector<std::string> written;
  auto put_csv = [&](const char* suffix, const commutant::Trajectory& tr) {
    fs::path p = dir / (n + suffix);
    write_trajectory(p, tr);
    written.push_back(p.string());
  };
  put_csv("_ab_forced.csv", r.ab_forced);
  put_csv("_ba_forced.csv", r.ba_forced);
  put_csv("_ab_ic.csv", r.ab_ic);
  put_csv("_ba_ic.csv", r.ba_ic);
  if (with_reports) {
    fs::path txt = dir / (n + "_report.txt");
    write_file(txt, commutant::to_text(r.report) + "\n" + commutant::to_text(r.assessment));
    written.push_back(txt.string());
    fs::path kv = dir / (n + "_report.kv");
    write_file(kv, commutant::to_key_values(r.report) + commutant::to_key_values(r.assessment, r.report));
    written.push_back(kv.string());
  }
  return written;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"commutative partners of second-order linear time-varying systems"};
  // --h is the integration-step flag, so help is long-form only
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);

  CommonFlags check_flags, sim_flags, run_flags;
  CLI::App* cmd_check = app.add_subcommand("check", "evaluate the commutativity conditions");
  check_flags.attach(cmd_check, true);
  bool check_write = false;
  cmd_check->add_flag("--write", check_write, "also write the report files to --out-dir");

  CLI::App* cmd_sim = app.add_subcommand("simulate", "integrate both cascade orderings");
  sim_flags.attach(cmd_sim, true);

  CLI::App* cmd_run = app.add_subcommand("run", "check + simulate + agreement verdict");
  run_flags.attach(cmd_run, true);

  CLI::App* cmd_list = app.add_subcommand("list-builtins", "list built-in scenarios");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (cmd_list->parsed()) {
      for (const auto& b : commutant::builtin_scenarios())
        std::cout << b.name << "\n    " << b.description << "\n";
      return 0;
    }

    if (cmd_check->parsed()) {
      check_flags.finalize();
      commutant::Scenario s = resolve_scenario(check_flags.scenario_ref);
      s = commutant::apply_overrides(s, check_flags.ov);
      commutant::BuiltScenario built = commutant::build_scenario(s);

      commutant::CommutativityConstants k{};
      bool known = true;
      if (s.constants) {
        k = *s.constants;
      } else {
        auto rec = commutant::recover_constants(built.system_a, *built.system_b, s.t0, s.t_end);
        known = rec.has_value();
        if (rec) k = *rec;
      }
      if (!known) {
        std::cout << "explicit partner is not expressible through the synthesis map; "
                     "the pair cannot commute\n";
        return 0;
      }
      commutant::Vec2 y{0.0, 0.0};
      if (s.ic_mode == commutant::IcMode::nonrelaxed) {
        y.x = s.y0;
        y.y = s.dy0 ? *s.dy0 : commutant::required_ic_ray(built.system_a, k, s.t0, s.tols.delta).slope * s.y0;
      }
      auto rep = commutant::classify_pair(built.system_a, k, s.ic_mode, y, s.t0, {s.t0, s.t_end}, s.tols);
      if (!s.notes.empty()) rep.notes = s.notes;
      std::cout << commutant::to_text(rep);
      if (check_write) {
        std::filesystem::path dir(check_flags.out_dir);
        std::filesystem::create_directories(dir);
        write_file(dir / (s.name + "_conditions.txt"), commutant::to_text(rep));
        write_file(dir / (s.name + "_conditions.kv"), commutant::to_key_values(rep));
      }
      return 0;
    }

    CommonFlags& flags = cmd_sim->parsed() ? sim_flags : run_flags;
    flags.finalize();
    commutant::Scenario s = resolve_scenario(flags.scenario_ref);
    commutant::RunResult r = commutant::run_scenario(s, flags.ov);

    if (cmd_sim->parsed()) {
      auto files = write_artifacts(r, flags.out_dir, /*with_reports=*/false);
      for (const auto& f : files) std::cout << "wrote " << f << "\n";
      return 0;
    }

    auto files = write_artifacts(r, flags.out_dir, /*with_reports=*/true);
    std::cout << commutant::to_text(r.report) << "\n" << commutant::to_text(r.assessment);
    for (const auto& f : files) std::cout << "wrote " << f << "\n";
    return r.assessment.agreement ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (...) {
    std::cerr << "error: unexpected failure\n";
    return 2;
  }
}
