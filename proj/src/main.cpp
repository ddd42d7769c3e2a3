// sobgeo: geodesics of fractional-order Sobolev metrics on immersed loops
// and on circle diffeomorphisms.  Batch front end: every command reads a JSON
// config (flags win over file values), writes its outputs into --out, and
// echoes the resolved configuration next to them for provenance.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sobgeo/curve.hpp"
#include "sobgeo/epdiff.hpp"
#include "sobgeo/errors.hpp"
#include "sobgeo/geodesic.hpp"
#include "sobgeo/grid.hpp"
#include "sobgeo/io.hpp"
#include "sobgeo/operator.hpp"
#include "sobgeo/suite.hpp"
#include "sobgeo/types.hpp"
#include "sobgeo/variation.hpp"

namespace {

using sobgeo::Index;
namespace fs = std::filesystem;
using json = nlohmann::json;

struct RunConfig {
  Index n = 33;
  Index d = 2;
  double p = 1.0;
  std::string family = "standard";
  double dt = 1e-3;
  double t_end = 1.0;
  long long seed = 12345;
  int threads = 1;
  Index record_every = 1;
  double immersion_floor = sobgeo::default_immersion_floor<double>;
  double fd_eps = -1.0;  // <= 0: scale-aware default
  double shooting_tol = 1e-10;
  double energy_drift_warn = 1e-6;
};

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "n", "d", "p", "family", "dt", "t_end", "seed", "threads", "record_every",
      "immersion_floor", "fd_eps", "shooting_tol", "energy_drift_warn"};
  return keys;
}

RunConfig load_config_file(const fs::path& path) {
  RunConfig cfg;
  const json j = sobgeo::io_detail::parse_json(path);
  if (!j.is_object()) throw sobgeo::ValidationError("config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(config_keys().begin(), config_keys().end(), key) ==
        config_keys().end()) {
      throw sobgeo::ValidationError("config: unknown key '" + key + "'");
    }
    (void)value;
  }
  auto get = [&](const char* key, auto& slot) {
    if (j.contains(key)) slot = j.at(key).get<std::decay_t<decltype(slot)>>();
  };
  get("n", cfg.n);
  get("d", cfg.d);
  get("p", cfg.p);
  get("family", cfg.family);
  get("dt", cfg.dt);
  get("t_end", cfg.t_end);
  get("seed", cfg.seed);
  get("threads", cfg.threads);
  get("record_every", cfg.record_every);
  get("immersion_floor", cfg.immersion_floor);
  get("fd_eps", cfg.fd_eps);
  get("shooting_tol", cfg.shooting_tol);
  get("energy_drift_warn", cfg.energy_drift_warn);
  return cfg;
}

sobgeo::OperatorFamily parse_family(const std::string& name) {
  if (name == "standard") return sobgeo::OperatorFamily::standard;
  if (name == "scale_invariant") return sobgeo::OperatorFamily::scale_invariant;
  throw sobgeo::ValidationError("family must be 'standard' or 'scale_invariant', got '" +
                                name + "'");
}

void validate_common(const RunConfig& cfg) {
  if (cfg.n < 9 || cfg.n % 2 == 0) {
    throw sobgeo::ValidationError("config: n must be odd and at least 9");
  }
  if (cfg.d < 1) throw sobgeo::ValidationError("config: d must be positive");
  if (!(cfg.dt > 0)) throw sobgeo::ValidationError("config: dt must be positive");
  if (!(cfg.t_end > 0)) throw sobgeo::ValidationError("config: t_end must be positive");
  if (cfg.record_every < 1) {
    throw sobgeo::ValidationError("config: record_every must be at least 1");
  }
  if (cfg.threads < 1) throw sobgeo::ValidationError("config: threads must be at least 1");
  parse_family(cfg.family);
}

Index steps_from(const RunConfig& cfg, double horizon) {
  const auto steps = static_cast<Index>(std::llround(horizon / cfg.dt));
  return std::max<Index>(steps, 1);
}

json config_to_json(const RunConfig& cfg) {
  json j;
  j["n"] = cfg.n;
  j["d"] = cfg.d;
  j["p"] = cfg.p;
  j["family"] = cfg.family;
  j["dt"] = cfg.dt;
  j["t_end"] = cfg.t_end;
  j["seed"] = cfg.seed;
  j["threads"] = cfg.threads;
  j["record_every"] = cfg.record_every;
  j["immersion_floor"] = cfg.immersion_floor;
  j["fd_eps"] = cfg.fd_eps;
  j["shooting_tol"] = cfg.shooting_tol;
  j["energy_drift_warn"] = cfg.energy_drift_warn;
  return j;
}

fs::path prepare_out_dir(const std::string& out) {
  const fs::path dir(out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw sobgeo::IoError("cannot create output directory " + dir.string() +
                                ": " + ec.message());
  return dir;
}

void echo_resolved_config(const fs::path& dir, const RunConfig& cfg,
                          const std::string& command) {
  json j = config_to_json(cfg);
  j["command"] = command;
  sobgeo::save_json(dir / "config_resolved.json", j);
}

sobgeo::ImmersedLoop<double> loop_from_document(const sobgeo::FieldDocument& doc,
                                                const sobgeo::PeriodicGrid<double>& grid,
                                                double floor) {
  if (doc.d < 2) {
    throw sobgeo::ValidationError("curve documents need ambient dimension d >= 2");
  }
  return sobgeo::ImmersedLoop<double>(grid, doc.points, floor);
}

// ---------------------------------------------------------------------------

int cmd_exp(const RunConfig& cfg, const std::string& curve_in,
            const std::string& velocity_in, const std::string& out) {
  const auto curve_doc = sobgeo::load_field_document(curve_in);
  const auto vel_doc = sobgeo::load_field_document(velocity_in);
  if (curve_doc.n != vel_doc.n || curve_doc.d != vel_doc.d) {
    throw sobgeo::ValidationError("curve and velocity documents disagree in shape");
  }
  const sobgeo::PeriodicGrid<double> grid(curve_doc.n);
  const auto loop = loop_from_document(curve_doc, grid, cfg.immersion_floor);
  const sobgeo::OperatorSpec<double> spec{cfg.p, parse_family(cfg.family)};
  spec.validate_for_immersion_geodesics();

  const fs::path dir = prepare_out_dir(out);
  echo_resolved_config(dir, cfg, "exp");

  sobgeo::ExpOptions<double> opt;
  opt.record_every = cfg.record_every;
  opt.warn_drift = cfg.energy_drift_warn;
  opt.immersion_floor = cfg.immersion_floor;
  const auto r = sobgeo::exp_map(loop, sobgeo::TangentField<double>(vel_doc.points),
                                 spec, cfg.t_end, steps_from(cfg, cfg.t_end), opt);

  sobgeo::TrajectoryWriter w;
  for (std::size_t i = 0; i < r.trajectory.times.size(); ++i) {
    w.add(r.trajectory.times[i], r.trajectory.states[i].points,
          r.trajectory.states[i].velocity, r.trajectory.energies[i],
          r.trajectory.tail_fractions[i]);
  }
  w.write(dir / "trajectory.jsonl", dir / "energy.csv");
  sobgeo::save_field_document(dir / "endpoint_curve.json", r.endpoint().points);
  sobgeo::save_field_document(dir / "endpoint_velocity.json", r.endpoint().velocity);

  json summary;
  summary["status"] = r.status == sobgeo::ExpStatus::ok ? "ok" : "immersion_lost";
  summary["failure_time"] = r.failure_time;
  summary["energy_initial"] = r.energy_initial;
  summary["energy_drift"] = r.energy_drift;
  summary["energy_warning"] = r.energy_warning;
  summary["steps"] = static_cast<long long>(r.step_times.empty() ? 0 : r.step_times.size() - 1);
  summary["path_energy"] = sobgeo::path_energy(r);
  sobgeo::save_json(dir / "exp_summary.json", summary);

  if (r.status != sobgeo::ExpStatus::ok) {
    std::cerr << "exp: immersion lost at t = " << r.failure_time
              << "; partial trajectory written to " << (dir / "trajectory.jsonl").string()
              << "\n";
    return sobgeo::exit_immersion;
  }
  if (r.energy_warning) {
    std::cerr << "exp: warning: relative energy drift " << r.energy_drift
              << " exceeds " << cfg.energy_drift_warn << "\n";
  }
  return sobgeo::exit_ok;
}

int cmd_log(const RunConfig& cfg, const std::string& source_in,
            const std::string& target_in, const std::string& out) {
  const auto src_doc = sobgeo::load_field_document(source_in);
  const auto tgt_doc = sobgeo::load_field_document(target_in);
  if (src_doc.n != tgt_doc.n || src_doc.d != tgt_doc.d) {
    throw sobgeo::ValidationError("source and target documents disagree in shape");
  }
  const sobgeo::PeriodicGrid<double> grid(src_doc.n);
  const auto f0 = loop_from_document(src_doc, grid, cfg.immersion_floor);
  const auto f1 = loop_from_document(tgt_doc, grid, cfg.immersion_floor);
  const sobgeo::OperatorSpec<double> spec{cfg.p, parse_family(cfg.family)};
  spec.validate_for_immersion_geodesics();

  const fs::path dir = prepare_out_dir(out);
  echo_resolved_config(dir, cfg, "log");

  sobgeo::LogOptions<double> opt;
  opt.tol = cfg.shooting_tol;
  opt.steps = steps_from(cfg, 1.0);  // the log map shoots over unit time
  opt.immersion_floor = cfg.immersion_floor;
  opt.throw_on_failure = false;
  const auto res = sobgeo::log_map(f0, f1, spec, opt);

  sobgeo::save_field_document(dir / "log_velocity.json", res.initial_velocity);
  json report;
  report["converged"] = res.converged;
  report["residual"] = res.residual;
  report["iterations"] = res.iterations;
  report["modes"] = res.modes;
  report["shooting_tol"] = cfg.shooting_tol;
  sobgeo::save_json(dir / "log_report.json", report);

  if (!res.converged) {
    std::cerr << "log: shooting stalled at relative residual " << res.residual
              << " (target " << cfg.shooting_tol << "); best iterate written to "
              << (dir / "log_velocity.json").string() << "\n";
    return sobgeo::exit_convergence;
  }
  return sobgeo::exit_ok;
}

int cmd_epdiff(const RunConfig& cfg, const std::string& u0_in, const std::string& out) {
  const auto u_doc = sobgeo::load_field_document(u0_in);
  if (u_doc.d != 1) {
    throw sobgeo::ValidationError("epdiff initial data must be a scalar field (d = 1)");
  }
  const sobgeo::PeriodicGrid<double> grid(u_doc.n);
  const sobgeo::ScalarField<double> u0 = u_doc.points.col(0);
  const sobgeo::OperatorSpec<double> spec{cfg.p, parse_family(cfg.family)};
  spec.validate_for_diffeo_geodesics();

  const fs::path dir = prepare_out_dir(out);
  echo_resolved_config(dir, cfg, "epdiff");

  const Index steps = steps_from(cfg, cfg.t_end);

  // The two formulations are independent sub-runs; with threads >= 2 the
  // Lagrangian one goes to a worker.  Outputs are deterministic either way.
  sobgeo::DiffeoExpResult<double> lag;
  std::optional<std::exception_ptr> lag_error;
  const sobgeo::ScalarField<double> psi0 =
      sobgeo::ScalarField<double>::Zero(grid.n());
  auto run_lagrangian = [&] {
    try {
      lag = sobgeo::diffeo_exp_map(grid, psi0, u0, spec, cfg.t_end, steps, steps);
    } catch (...) {
      lag_error = std::current_exception();
    }
  };

  sobgeo::EulerianOptions<double> eopt;
  eopt.record_every = cfg.record_every;
  sobgeo::EulerianResult<double> eul;
  if (cfg.threads >= 2) {
    std::thread worker(run_lagrangian);
    try {
      eul = sobgeo::epdiff_solve(grid, u0, spec, cfg.t_end, steps, eopt);
    } catch (...) {
      worker.join();
      throw;
    }
    worker.join();
  } else {
    run_lagrangian();
    eul = sobgeo::epdiff_solve(grid, u0, spec, cfg.t_end, steps, eopt);
  }
  if (lag_error) std::rethrow_exception(*lag_error);
  if (lag.status != sobgeo::ExpStatus::ok) {
    throw sobgeo::ImmersionError("epdiff: Lagrangian flow lost invertibility",
                                 lag.failure_time);
  }

  const auto op = sobgeo::make_eulerian_operator(grid, spec);
  sobgeo::TrajectoryWriter w;
  for (std::size_t i = 0; i < eul.times.size(); ++i) {
    const sobgeo::ScalarField<double>& u = eul.fields[i];
    w.add(eul.times[i], u, sobgeo::Matrix<double>(op.P * u), eul.energies[i],
          sobgeo::velocity_tail_fraction(grid, sobgeo::TangentField<double>(u)));
  }
  w.write(dir / "trajectory.jsonl", dir / "energy.csv");

  const sobgeo::CircleDiffeo<double> phi(grid, lag.endpoint().displacement);
  const sobgeo::ScalarField<double> u_lag = phi.inverse().act(lag.endpoint().velocity);
  const sobgeo::ScalarField<double> u_eul = eul.fields.back();
  const double sup_gap = (u_lag - u_eul).cwiseAbs().maxCoeff();
  const double e0 = std::max(lag.energy_initial, 1e-30);

  sobgeo::save_field_document(dir / "endpoint_velocity_eulerian.json", u_eul);
  sobgeo::save_field_document(dir / "endpoint_velocity_lagrangian.json", u_lag);

  json report;
  report["sup_gap"] = sup_gap;
  report["energy_gap"] = std::abs(lag.step_energies.back() - eul.energies.back()) / e0;
  report["lagrangian_energy_drift"] = lag.energy_drift;
  report["eulerian_energy_drift"] = eul.energy_drift;
  report["energy_initial"] = lag.energy_initial;
  sobgeo::save_json(dir / "epdiff_report.json", report);
  return sobgeo::exit_ok;
}

int cmd_spectrum(const RunConfig& cfg, const std::string& curve_in,
                 const std::string& out) {
  const sobgeo::OperatorSpec<double> spec{cfg.p, parse_family(cfg.family)};
  spec.validate();

  std::optional<sobgeo::ImmersedLoop<double>> loop;
  sobgeo::PeriodicGrid<double> grid(cfg.n);
  bool is_unit_circle = curve_in.empty();
  if (!curve_in.empty()) {
    const auto doc = sobgeo::load_field_document(curve_in);
    grid = sobgeo::PeriodicGrid<double>(doc.n);
    loop.emplace(loop_from_document(doc, grid, cfg.immersion_floor));
  } else {
    if (cfg.d < 2) throw sobgeo::ValidationError("spectrum: d must be >= 2");
    sobgeo::TangentField<double> circle = sobgeo::TangentField<double>::Zero(grid.n(), cfg.d);
    circle.col(0) = grid.theta().array().cos();
    circle.col(1) = grid.theta().array().sin();
    loop.emplace(grid, circle, cfg.immersion_floor);
  }
  const auto op = sobgeo::assemble(*loop, spec);

  const fs::path dir = prepare_out_dir(out);
  echo_resolved_config(dir, cfg, "spectrum");

  json j;
  j["n"] = grid.n();
  j["p"] = cfg.p;
  j["family"] = cfg.family;
  j["eigenvalues"] = std::vector<double>(op.eigenvalues().data(),
                                         op.eigenvalues().data() + op.eigenvalues().size());
  std::ostringstream csv;
  csv << "index,lambda,lambda_p\n";
  for (Index i = 0; i < op.eigenvalues().size(); ++i) {
    csv << i << "," << sobgeo::TrajectoryWriter::format_number(op.eigenvalues()(i)) << ","
        << sobgeo::TrajectoryWriter::format_number(std::pow(op.eigenvalues()(i), cfg.p))
        << "\n";
  }
  if (is_unit_circle) {
    const auto mult = sobgeo::sobolev_multipliers(grid, spec);
    j["circle_multipliers"] = std::vector<double>(mult.data(), mult.data() + mult.size());
  }
  sobgeo::save_json(dir / "spectrum.json", j);
  sobgeo::io_detail::atomic_write(dir / "spectrum.csv", csv.str());
  return sobgeo::exit_ok;
}

int cmd_suite(const RunConfig& cfg, const std::string& out) {
  sobgeo::SuiteConfig scfg;
  scfg.n = cfg.n;
  scfg.d = cfg.d;
  scfg.p = cfg.p;
  scfg.family = parse_family(cfg.family);
  scfg.seed = static_cast<std::uint64_t>(cfg.seed);
  scfg.immersion_floor = cfg.immersion_floor;
  const auto results = sobgeo::run_suite(scfg);  // throws on invalid config

  const fs::path dir = prepare_out_dir(out);
  echo_resolved_config(dir, cfg, "suite");

  json items = json::array();
  int pass = 0, fail = 0, skip = 0;
  for (const auto& r : results) {
    json item;
    item["name"] = r.name;
    item["status"] = sobgeo::check_status_name(r.status);
    item["measured"] = r.measured;
    item["threshold"] = r.threshold;
    item["note"] = r.note;
    items.push_back(std::move(item));
    if (r.status == sobgeo::CheckStatus::pass) ++pass;
    if (r.status == sobgeo::CheckStatus::fail) ++fail;
    if (r.status == sobgeo::CheckStatus::skip) ++skip;
    std::cout << sobgeo::check_status_name(r.status) << "  " << r.name;
    if (r.status != sobgeo::CheckStatus::skip) {
      std::cout << "  measured=" << r.measured << " threshold=" << r.threshold;
    }
    if (!r.note.empty()) std::cout << "  (" << r.note << ")";
    std::cout << "\n";
  }
  json report;
  report["results"] = std::move(items);
  report["summary"] = {{"pass", pass}, {"fail", fail}, {"skip", skip},
                       {"total", static_cast<int>(results.size())}};
  sobgeo::save_json(dir / "suite_report.json", report);

  std::cout << "suite: " << pass << " passed, " << fail << " failed, " << skip
            << " skipped\n";
  return fail == 0 ? sobgeo::exit_ok : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "sobgeo: geodesics of fractional-order Sobolev metrics on immersed loops\n"
      "and circle diffeomorphisms (exponential/log maps, EPDiff cross-checks,\n"
      "operator spectra, and an invariant self-test suite)."};
  app.fallthrough();
  app.footer(
      "Exit codes:\n"
      "  0  success\n"
      "  1  invariant-suite failure, or an unexpected internal error\n"
      "  2  validation error (bad config or flags, malformed input document)\n"
      "  3  immersion lost (input or evolving state hit the immersion floor;\n"
      "     for diffeomorphisms: particle crossing)\n"
      "  4  convergence failure (shooting stalled, Newton or time stepper blew up)\n"
      "  5  I/O error (unreadable input, unwritable output)\n"
      "\n"
      "Config: JSON file via --config; individual flags override file values.\n"
      "The resolved configuration is echoed to <out>/config_resolved.json.\n"
      "SOBGEO_THREADS is the fallback for --threads.");

  std::string config_path;
  std::string out_dir = "out";
  RunConfig flags;  // flag values land here, then override the file config
  app.add_option("--config", config_path, "JSON configuration file");
  app.add_option("--out", out_dir, "output directory (created if missing)");
  auto* o_seed = app.add_option("--seed", flags.seed, "seed for randomized fields");
  auto* o_threads = app.add_option("--threads", flags.threads,
                                   "worker threads for independent sub-runs");
  auto* o_n = app.add_option("--n", flags.n, "grid size (odd, >= 9)");
  auto* o_d = app.add_option("--d", flags.d, "ambient dimension");
  auto* o_p = app.add_option("--p", flags.p, "operator order");
  auto* o_family = app.add_option("--family", flags.family,
                                  "operator family: standard | scale_invariant");
  auto* o_dt = app.add_option("--dt", flags.dt, "time step");
  auto* o_tend = app.add_option("--t-end", flags.t_end, "integration horizon");
  auto* o_rec = app.add_option("--record-every", flags.record_every,
                               "trajectory sampling stride, in steps");
  auto* o_floor = app.add_option("--immersion-floor", flags.immersion_floor,
                                 "relative lower bound on |f_theta|");
  auto* o_fdeps = app.add_option("--fd-eps", flags.fd_eps,
                                 "finite-difference epsilon (<= 0: scale-aware default)");
  auto* o_shoot = app.add_option("--shooting-tol", flags.shooting_tol,
                                 "relative endpoint residual target for log");
  auto* o_warn = app.add_option("--energy-drift-warn", flags.energy_drift_warn,
                                "relative energy drift that triggers a warning");

  std::string curve_in, velocity_in, source_in, target_in, u0_in, spectrum_curve;
  CLI::App* sub_exp = app.add_subcommand("exp", "integrate the geodesic exponential map");
  sub_exp->add_option("--curve", curve_in, "initial loop (JSON field document)")
      ->required();
  sub_exp->add_option("--velocity", velocity_in, "initial velocity (JSON field document)")
      ->required();
  CLI::App* sub_log = app.add_subcommand(
      "log", "recover the initial velocity joining two loops (shooting)");
  sub_log->add_option("--source", source_in, "start loop")->required();
  sub_log->add_option("--target", target_in, "end loop")->required();
  CLI::App* sub_epdiff = app.add_subcommand(
      "epdiff", "run the Eulerian and Lagrangian forms on Diff(S^1) and compare");
  sub_epdiff->add_option("--u0", u0_in, "initial velocity (scalar field document)")
      ->required();
  CLI::App* sub_spectrum = app.add_subcommand(
      "spectrum", "eigenvalues of the assembled operator (unit circle by default)");
  sub_spectrum->add_option("--curve", spectrum_curve, "loop to assemble on (optional)");
  CLI::App* sub_suite =
      app.add_subcommand("suite", "run the invariant battery and write a report");
  app.require_subcommand(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sobgeo::exit_validation;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config_file(config_path);
    if (o_seed->count()) cfg.seed = flags.seed;
    if (o_n->count()) cfg.n = flags.n;
    if (o_d->count()) cfg.d = flags.d;
    if (o_p->count()) cfg.p = flags.p;
    if (o_family->count()) cfg.family = flags.family;
    if (o_dt->count()) cfg.dt = flags.dt;
    if (o_tend->count()) cfg.t_end = flags.t_end;
    if (o_rec->count()) cfg.record_every = flags.record_every;
    if (o_floor->count()) cfg.immersion_floor = flags.immersion_floor;
    if (o_fdeps->count()) cfg.fd_eps = flags.fd_eps;
    if (o_shoot->count()) cfg.shooting_tol = flags.shooting_tol;
    if (o_warn->count()) cfg.energy_drift_warn = flags.energy_drift_warn;
    if (o_threads->count()) {
      cfg.threads = flags.threads;
    } else if (const char* env = std::getenv("SOBGEO_THREADS")) {
      try {
        cfg.threads = std::stoi(env);
      } catch (const std::exception&) {
        throw sobgeo::ValidationError("SOBGEO_THREADS is not an integer");
      }
    }
    validate_common(cfg);

    if (sub_exp->parsed()) return cmd_exp(cfg, curve_in, velocity_in, out_dir);
    if (sub_log->parsed()) return cmd_log(cfg, source_in, target_in, out_dir);
    if (sub_epdiff->parsed()) return cmd_epdiff(cfg, u0_in, out_dir);
    if (sub_spectrum->parsed()) return cmd_spectrum(cfg, spectrum_curve, out_dir);
    if (sub_suite->parsed()) return cmd_suite(cfg, out_dir);
    throw sobgeo::ValidationError("no subcommand given");
  } catch (const sobgeo::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return sobgeo::exit_validation;
  } catch (const sobgeo::ImmersionError& e) {
    std::cerr << "immersion error: " << e.what() << "\n";
    return sobgeo::exit_immersion;
  } catch (const sobgeo::ConvergenceError& e) {
    std::cerr << "convergence error: " << e.what() << "\n";
    return sobgeo::exit_convergence;
  } catch (const sobgeo::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return sobgeo::exit_io;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
