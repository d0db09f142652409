#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <sstream>

#include "selftest/certify.hpp"
#include "selftest/extraction.hpp"
#include "selftest/io.hpp"
#include "selftest/random.hpp"
#include "selftest/robust.hpp"

#ifndef SELFTEST_VERSION
#define SELFTEST_VERSION "dev"
#endif

using namespace selftest;
using nlohmann::json;

namespace {

constexpr int kSolverFailure = 1;
constexpr int kUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Collects everything a subcommand emits, then writes the manifest.
struct Run {
  std::string command;
  std::filesystem::path out_dir;
  json params = json::object();
  json statuses = json::array();
  std::vector<std::string> files;
  bool failed = false;

  std::ofstream open(const std::string& name) {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / name;
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path.string());
    os << std::setprecision(12);
    files.push_back(path.string());
    return os;
  }

  void status(const std::string& what, const std::string& s) {
    statuses.push_back({{"item", what}, {"status", s}});
    if (s != "optimal" && s != "near-optimal" && s != "analytic" && s != "ok") failed = true;
  }

  void curve(const certify::BoundCurve& c) {
    for (const auto& p : c.points) {
      std::ostringstream x;
      x << std::setprecision(12) << certify::to_string(c.kind) << " x=" << p.x;
      status(x.str(), p.status);
    }
  }

  void manifest(double seconds) {
    std::filesystem::create_directories(out_dir);
    const auto path = out_dir / (command + ".manifest.json");
    json m{{"command", command}, {"version", SELFTEST_VERSION}, {"parameters", params},
           {"wall_time_s", seconds}, {"statuses", statuses}, {"files", files}, {"solver_failure", failed}};
    std::ofstream(path) << m.dump(2) << '\n';
  }
};

std::string grid_hash(const std::vector<double>& grid) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (double v : grid) {
    unsigned char bytes[sizeof(double)];
    std::memcpy(bytes, &v, sizeof v);
    for (unsigned char b : bytes) h = (h ^ b) * 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(8) << std::setfill('0') << (h & 0xffffffffu);
  return os.str();
}

std::vector<double> linspace(double a, double b, int n) {
  if (n < 1) throw UsageError("grid needs at least one point");
  if (n == 1) return {a};
  std::vector<double> v;
  for (int k = 0; k < n; ++k) v.push_back(a + (b - a) * k / (n - 1));
  return v;
}

// "a:b:n" or a comma-separated list.
std::vector<double> parse_grid(const std::string& s) {
  try {
    if (std::count(s.begin(), s.end(), ':') == 2) {
      const auto p1 = s.find(':'), p2 = s.rfind(':');
      return linspace(std::stod(s.substr(0, p1)), std::stod(s.substr(p1 + 1, p2 - p1 - 1)), std::stoi(s.substr(p2 + 1)));
    }
    std::vector<double> v;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) v.push_back(std::stod(item));
    if (v.empty()) throw UsageError("empty grid");
    return v;
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse grid '" + s + "' (use a:b:n or a comma-separated list)");
  }
}

std::string curve_file(const certify::BoundCurve& c, const std::vector<double>& grid, const std::string& tag = "") {
  return std::string(certify::to_string(c.kind)) + (tag.empty() ? "" : "_" + tag) + "_" + c.level + "_" +
         grid_hash(grid) + ".csv";
}

void print_correlators(std::ostream& os, const bell::CorrelatorTable& t) {
  bell::write_csv(os, t);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bell-inequality self-testing toolkit: exact checks, robustness bounds and moment relaxations"};
  app.set_version_flag("--version", SELFTEST_VERSION);
  app.require_subcommand(1);
  app.fallthrough();
  app.option_defaults()->always_capture_default();

  int jobs = 1;
  std::string out = "out";
  std::string field = "real";
  double tol = 1e-8;
  app.add_option("--jobs", jobs, "parallel solves")->check(CLI::Range(1, 1024));
  app.add_option("--out", out, "directory for CSV files and the manifest");
  app.add_option("--field", field, "moment matrix field")->check(CLI::IsMember({"real", "complex"}));
  app.add_option("--tol", tol, "solver tolerance")->check(CLI::PositiveNumber);

  double alpha = 1.0, u = 0.0, eta = 0.0, epsilon = 0.0;
  std::string input, save, beta_grid = "4:5:41", level = "1+AB";
  double t_min = 5.7, t_max = 6.0, eta_max = 0.3;
  int points = 31, setting = 0, trials = 200, r_points = 81, u_points = 17;
  std::uint64_t seed = 1;
  bool non_projective = false;

  auto* sos = app.add_subcommand("sos-check", "sum-of-squares residual on ideal and random realizations");
  sos->add_option("--alpha", alpha)->required();
  sos->add_option("--trials", trials)->check(CLI::Range(1, 1000000));
  sos->add_option("--seed", seed);

  auto* ideal = app.add_subcommand("ideal", "Bell value and correlators of the ideal two-qubit realization");
  ideal->add_option("--alpha", alpha)->required();
  ideal->add_option("--u", u, "angle in radians")->required();
  ideal->add_option("--save", save, "write the realization to this file");

  auto* chr = app.add_subcommand("characterize", "optimality conditions, block structure and epsilon bounds");
  chr->add_option("--input", input, "realization file")->required()->check(CLI::ExistingFile);
  chr->add_option("--alpha", alpha, "functional parameter (default sqrt2)");

  auto* ext = app.add_subcommand("extract", "extracted fidelity under isotropic noise (a = sqrt2)");
  ext->add_option("--eta", eta)->required()->check(CLI::Range(0.0, 1.0));
  ext->add_option("--u", u, "angle of the ideal realization");

  auto* bnd = app.add_subcommand("bounds", "analytic robustness bounds at a given epsilon");
  bnd->add_option("--epsilon", epsilon)->required()->check(CLI::NonNegativeNumber);

  auto* fid = app.add_subcommand("fidelity-curve", "swap-method fidelity lower bound against beta (a = sqrt2)");
  fid->add_option("--t-min", t_min);
  fid->add_option("--t-max", t_max);
  fid->add_option("--points", points)->check(CLI::Range(1, 100000));

  auto* rnd = app.add_subcommand("randomness", "certified marginal bound and feasible points (a = 1)");
  rnd->add_option("--setting", setting)->check(CLI::Range(0, 2));
  rnd->add_option("--beta-grid", beta_grid, "a:b:n or comma list");
  rnd->add_option("--r-points", r_points, "tilt values on [0, 8] for feasible points")->check(CLI::Range(1, 100000));
  rnd->add_option("--u-points", u_points, "angles on [0, pi] for feasible points")->check(CLI::Range(1, 100000));

  auto* noise = app.add_subcommand("noise-compare", "guessing probability against isotropic noise, with CHSH");
  noise->add_option("--eta-max", eta_max)->check(CLI::Range(0.0, 1.0));
  noise->add_option("--points", points)->check(CLI::Range(1, 100000));

  auto* comm = app.add_subcommand("commutation", "maximal violation under commutation constraints (a = 1)");
  comm->add_option("--level", level)->check(CLI::IsMember({"1+AB", "swap"}));

  auto* val = app.add_subcommand("validate", "randomized soundness sweep of every bound");
  val->add_option("--seed", seed);
  val->add_option("--trials", trials)->check(CLI::Range(1, 1000000));
  val->add_flag("--non-projective", non_projective);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  Run run;
  run.command = app.get_subcommands().front()->get_name();
  run.out_dir = out;
  for (const auto* opt : app.get_subcommands().front()->get_options()) {
    if (opt->get_name() == "--help") continue;
    run.params[opt->get_name()] = opt->count() > 0 ? opt->as<std::string>() : opt->get_default_str();
  }
  run.params["--out"] = out;
  run.params["--jobs"] = jobs;
  run.params["--field"] = field;
  run.params["--tol"] = tol;

  certify::StudyOptions study;
  study.jobs = jobs;
  study.field = field == "complex" ? npa::Field::complex : npa::Field::real;
  study.solver.tol = tol;

  const auto start = std::chrono::steady_clock::now();
  std::cout << std::setprecision(10);
  try {
    if (*sos) {
      const bell::BellFunctional f(alpha);
      const double ideal_res = bell::sos_residual(f, bell::ideal_realization(f, 0.3));
      random::Rng rng(seed);
      double worst = ideal_res;
      for (int n = 0; n < trials; ++n) {
        const int da = 2 + n % 3, db = 2 + (n / 3) % 3;
        std::array<linalg::Matrix, 3> A, B;
        for (int k = 0; k < 3; ++k) {
          A[k] = random::contraction(rng, da);
          B[k] = random::contraction(rng, db);
        }
        worst = std::max(worst, bell::sos_residual(f, bell::make_realization(A, B, random::density(rng, da * db))));
      }
      auto os = run.open("sos-check.csv");
      os << "alpha,trials,ideal_residual,max_residual\n" << alpha << ',' << trials << ',' << ideal_res << ',' << worst << '\n';
      std::cout << "max residual " << worst << " over " << trials << " random realizations (ideal " << ideal_res << ")\n";
      run.status("residual <= 1e-9", worst <= 1e-9 ? "ok" : "violated");
    } else if (*ideal) {
      const bell::BellFunctional f(alpha);
      const auto r = bell::ideal_realization(f, u);
      const auto table = bell::measure_correlators(r);
      std::cout << "beta = " << bell::bell_value(f, r) << " (quantum value " << f.quantum_value() << ")\n";
      print_correlators(std::cout, table);
      auto os = run.open("ideal_correlators.csv");
      bell::write_csv(os, table);
      if (!save.empty()) {
        io::save_realization(save, r);
        run.files.push_back(save);
      }
    } else if (*chr) {
      const auto r = io::load_realization(input);
      const bell::BellFunctional f(chr->count("--alpha") ? alpha : std::numbers::sqrt2);
      const double beta = bell::bell_value(f, r);
      std::cout << "beta = " << beta << " (quantum value " << f.quantum_value() << ")\n";
      const auto opt = bell::optimality_conditions(f, r);
      auto os = run.open("characterize.csv");
      os << "quantity,value\nbeta," << beta << "\nquantum_value," << f.quantum_value() << '\n';
      for (int k = 0; k < 3; ++k)
        os << "alice_second_moment_" << k << ',' << opt.alice_second_moment[k] << "\nbob_second_moment_" << k << ','
           << opt.bob_second_moment[k] << "\nsos_norm_" << k << ',' << opt.sos_norm[k] << '\n';
      os << "anticomm01_deviation," << opt.anticomm01_deviation << "\nanticomm2_deviation," << opt.anticomm2_deviation
         << "\nbob_anticomm01_deviation," << opt.bob_anticomm01_deviation << "\nbob_anticomm2_deviation,"
         << opt.bob_anticomm2_deviation << '\n';
      try {
        const auto c = bell::characterize(f, r);
        os << "mismatched_weight," << c.mismatched_weight << "\nqubit_fidelity," << c.qubit_fidelity
           << "\nreconstruction_error," << c.reconstruction_error << '\n';
        std::cout << "blocks: " << c.alice_angles.size() << " x " << c.bob_angles.size() << ", qubit fidelity "
                  << c.qubit_fidelity << '\n';
      } catch (const std::exception& e) {
        std::cout << "block characterization unavailable: " << e.what() << '\n';
      }
      if (f.alpha() == std::numbers::sqrt2 || !chr->count("--alpha")) {
        try {
          const auto rep = robust::validate_all(r);
          auto bs = run.open("characterize_bounds.csv");
          robust::write_csv(bs, rep);
          std::cout << "epsilon = " << rep.epsilon << ", " << rep.entries.size() << " bounds, "
                    << (rep.all_satisfied() ? "all satisfied" : "VIOLATED") << '\n';
          run.status("bounds", rep.all_satisfied() ? "ok" : "violated");
        } catch (const robust::BellValueError& e) {
          std::cout << "bounds skipped: " << e.what() << '\n';
        }
      }
    } else if (*ext) {
      const bell::BellFunctional f(std::numbers::sqrt2);
      const auto r = bell::with_state(bell::ideal_realization(f, u), bell::isotropic_state(eta));
      const double beta = bell::bell_value(f, r);
      const double eps = 6.0 - beta;
      const double fidelity = extraction::extraction_fidelity(r);
      const auto tw = extraction::pauli_twirl_bounds(extraction::combined_extraction(r));
      auto os = run.open("extract.csv");
      os << "quantity,value\neta," << eta << "\nbeta," << beta << "\nepsilon," << eps << "\nfidelity," << fidelity
         << "\nfidelity_bound," << robust::fidelity_bound(std::max(eps, 0.0)) << "\nxx," << tw.xx << "\nyy," << tw.yy
         << "\nzz," << tw.zz << '\n';
      std::cout << "beta = " << beta << ", epsilon = " << eps << ", extracted fidelity = " << fidelity
                << ", analytic bound = " << robust::fidelity_bound(std::max(eps, 0.0)) << '\n';
    } else if (*bnd) {
      const auto t1 = robust::observable_bounds(epsilon);
      const auto lc = robust::bound_chain(epsilon);
      auto os = run.open("bounds.csv");
      os << "quantity,value\nepsilon," << epsilon << "\nprojectivity," << t1.projectivity << "\nanticomm01,"
         << t1.anticomm01 << "\nanticomm2," << t1.anticomm2 << "\nsos_frobenius," << lc.sos_frobenius
         << "\nanticomm01_frobenius," << lc.anticomm01_frobenius << "\ncombined_frobenius," << lc.combined_frobenius
         << "\nanticomm2_frobenius," << lc.anticomm2_frobenius << "\ncorr_diff," << lc.corr_diff << "\ncorr_sum,"
         << lc.corr_sum << "\nc_x," << lc.cx << "\nc_z," << lc.cz << "\nfidelity," << robust::fidelity_bound(epsilon)
         << "\nfidelity_raw," << robust::fidelity_bound_raw(epsilon) << '\n';
      std::cout << "fidelity bound " << robust::fidelity_bound(epsilon) << " (nontrivial for epsilon <= "
                << robust::nontrivial_threshold() << ")\n";
    } else if (*fid) {
      if (t_min > t_max) throw UsageError("--t-min exceeds --t-max");
      const auto grid = linspace(t_min, t_max, points);
      const auto c = certify::fidelity_curve(grid, study);
      auto os = run.open(curve_file(c, grid));
      certify::write_csv(os, c);
      run.curve(c);
      for (const auto& p : c.points) std::cout << "t = " << p.x << "  F >= " << p.y << "  " << p.status << '\n';
    } else if (*rnd) {
      const auto grid = parse_grid(beta_grid);
      const auto c = certify::marginal_curve(grid, setting, 1.0, study);
      {
        auto os = run.open(curve_file(c, grid, "A" + std::to_string(setting)));
        certify::write_csv(os, c);
      }
      run.curve(c);
      const auto hull = certify::feasible_points(setting, linspace(0.0, 8.0, r_points),
                                                 linspace(0.0, std::numbers::pi, u_points));
      {
        auto os = run.open("feasible_A" + std::to_string(setting) + ".csv");
        os << "beta,marginal,r,u,degenerate\n";
        for (const auto& p : hull) os << p.beta << ',' << p.marginal << ',' << p.r << ',' << p.u << ',' << p.degenerate << '\n';
      }
      for (const auto& p : c.points)
        std::cout << "beta = " << p.x << "  max<A" << setting << "> <= " << p.y << "  feasible "
                  << certify::hull_value(hull, p.x) << "  " << p.status << '\n';
    } else if (*noise) {
      const auto grid = linspace(0.0, eta_max, points);
      const auto nc = certify::guessing_vs_noise(grid, study);
      for (const auto* c : {&nc.ours, &nc.chsh, &nc.chsh_numeric}) {
        const std::string tag = c == &nc.ours ? "ours" : "chsh";
        auto os = run.open(curve_file(*c, grid, tag));
        certify::write_csv(os, *c);
        run.curve(*c);
      }
      for (std::size_t k = 0; k < grid.size(); ++k)
        std::cout << "eta = " << nc.ours.points[k].x << "  P_ours <= " << nc.ours.points[k].y << "  P_chsh <= "
                  << nc.chsh.points[k].y << " (NPA " << nc.chsh_numeric.points[k].y << ")\n";
    } else if (*comm) {
      const auto rows = certify::commutation_maxima(level == "swap" ? npa::Level::swap : npa::Level::one_plus_ab, study);
      {
        auto os = run.open("commutation_" + std::string(level == "swap" ? "swap" : "1+AB") + ".csv");
        os << "constraint,reference,value,certified,status\n";
        for (const auto& r : rows) {
          os << r.label << ',' << r.reference << ',' << r.value << ',' << r.certified << ',' << sdp::to_string(r.status) << '\n';
          run.status(r.label, sdp::to_string(r.status));
          std::cout << std::left << std::setw(20) << r.label << " beta <= " << r.certified << "  (reference " << r.reference
                    << ")  " << sdp::to_string(r.status) << '\n';
        }
      }
      auto os = run.open("commutation_witnesses.csv");
      os << "witness,beta,expected_beta,max_commutator\n";
      for (const auto& w : certify::commutation_witnesses()) {
        double mc = 0.0;
        for (const auto& c : w.commutators) mc = std::max(mc, c.second);
        os << w.label << ',' << w.beta << ',' << w.expected_beta << ',' << mc << '\n';
        std::cout << "witness " << w.label << ": beta = " << w.beta << ", max commutator " << mc << '\n';
      }
    } else if (*val) {
      robust::SweepOptions opt;
      opt.seed = seed;
      opt.trials = trials;
      opt.jobs = jobs;
      opt.projective = !non_projective;
      const auto s = robust::soundness_sweep(opt);
      auto os = run.open("validate.csv");
      os << "seed,trials,projective,violations,worst_margin,worst_entry,min_beta,max_beta\n"
         << seed << ',' << s.trials << ',' << opt.projective << ',' << s.violations << ',' << s.worst_margin << ','
         << s.worst_entry << ',' << s.min_beta << ',' << s.max_beta << '\n';
      std::cout << s.trials << " trials, " << s.violations << " violations, worst margin " << s.worst_margin << " ("
                << s.worst_entry << ")\n";
      run.status("bounds", s.violations == 0 ? "ok" : "violated");
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << input << ": " << e.what() << '\n';
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    run.failed = true;
    run.status("run", "error");
  }
  run.manifest(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  return run.failed ? kSolverFailure : 0;
}
