// fatrack: Monte Carlo experiments and standalone spectral denoising.
//
//   fatrack run configs/paper_scenario.json --runs 200 --jobs 4 --out-dir out
//   fatrack denoise samples.csv omega.txt --n 64 --gamma 0.8 --lambda 0.1 --out-dir out
//
// Exit codes: 0 ok, 1 runtime failure, 2 invalid input.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fatrack/atomic_admm.hpp"
#include "fatrack/dual_spectral.hpp"
#include "fatrack/errors.hpp"
#include "fatrack/experiment.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace fatrack;

namespace {

struct InputError : std::runtime_error {
  InputError(const std::string& file, int line, const std::string& msg)
      : std::runtime_error(file + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + msg) {}
};

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot write " + p.string());
  return os;
}

std::string now_utc() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

json scenario_json(const ScenarioConfig& c) {
  json targets = json::array();
  for (const auto& t : c.targets) {
    targets.push_back({{"r0", t.r0}, {"v0", t.v0}, {"rho_vib", t.rho_vib}, {"f_vib", t.f_vib}, {"b", t.b},
                       {"phi", t.phi}, {"phi0", t.phi0}, {"xi", t.xi}});
  }
  return {{"targets", targets},
          {"steps", c.steps},
          {"dt", c.dt},
          {"pd", c.pd},
          {"mu", c.mu},
          {"region", {c.region_lo, c.region_hi}},
          {"R", c.R},
          {"clutter_amp", {c.clutter_amp_lo, c.clutter_amp_hi}},
          {"p0", {c.p0_range, c.p0_rate}},
          {"random_target_phase", c.random_target_phase}};
}

json batch_json(const BatchConfig& b) {
  return {{"N", b.N},
          {"A", b.A},
          {"gamma_scale", b.gamma_scale},
          {"lambda_scale", b.lambda_scale},
          {"zeta", b.zeta},
          {"rho", b.admm.rho},
          {"max_iter", b.admm.max_iter},
          {"tol", b.admm.tol},
          {"sigma_tilde_factor", b.sigma_tilde_factor},
          {"B", b.assoc.B},
          {"eta", b.assoc.eta},
          {"recompute_beta", b.assoc.recompute},
          {"grid_size", b.locate.grid_size},
          {"feature_likelihood", b.feature_mode == FeatureLikelihoodMode::kGaussian ? "gaussian" : "constant"}};
}

int cmd_run(const std::string& spec_path, std::optional<std::uint64_t> seed, std::optional<int> runs,
            const std::string& out_dir, int jobs) {
  ExperimentSpec spec = load_experiment(spec_path);
  if (seed) spec.seed = *seed;
  if (runs) {
    if (*runs < 1) throw InputError("--runs", 0, "must be >= 1");
    spec.runs = *runs;
  }
  if (jobs < 1) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));

  fs::create_directories(out_dir);
  const std::string started = now_utc();
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = run_experiment(spec, jobs);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    auto os = open_out(fs::path(out_dir) / spec.metrics_csv);
    write_metrics_csv(os, results);
  }
  {
    auto os = open_out(fs::path(out_dir) / spec.summary_csv);
    write_summary_csv(os, results, spec.runs);
  }

  json algs = json::array();
  for (auto a : spec.algorithms) algs.push_back(to_string(a));
  json sweep = json::array();
  for (const auto& r : results) {
    json per = json::array();
    for (const auto& m : r.metrics) {
      per.push_back({{"algorithm", to_string(m.algorithm)},
                     {"final_continuity_pct", m.final_continuity_pct},
                     {"rmse", m.rmse},
                     {"feat_rmse", std::isnan(m.feat_rmse) ? json(nullptr) : json(m.feat_rmse)},
                     {"fvib_rmse", std::isnan(m.fvib_rmse) ? json(nullptr) : json(m.fvib_rmse)},
                     {"tracks", m.track_count}});
    }
    sweep.push_back({{"snr_db", r.snr_db}, {"sigma2", snr_to_sigma2(r.snr_db)}, {"summary", per}});
  }
  json manifest = {
      {"tool", "fatrack"},
      {"version", FATRACK_VERSION},
      {"command", "run"},
      {"spec_file", spec_path},
      {"started_utc", started},
      {"wall_time_s", wall},
      {"seed", spec.seed},
      {"run_seed", "splitmix64(splitmix64(seed) ^ run)"},
      {"runs", spec.runs},
      {"jobs", jobs},
      {"algorithms", algs},
      {"scenario", scenario_json(spec.scenario)},
      {"batch", batch_json(spec.batch)},
      {"sweep", sweep},
      {"outputs", {{"metrics_csv", spec.metrics_csv}, {"summary_csv", spec.summary_csv}}},
      {"notes",
       {"snr_db = 10 log10(b^2 / sigma^2) with b = 1; clutter and detection noise share sigma^2",
        "results are independent of jobs; runs are merged in run order",
        "missing values (no feature estimate, no vibration frequency) are written as nan"}}};
  auto os = open_out(fs::path(out_dir) / spec.manifest);
  os << manifest.dump(2) << '\n';

  std::cout << "wrote " << (fs::path(out_dir) / spec.metrics_csv).string() << " (" << spec.runs << " runs, "
            << results.size() << " snr points, " << wall << " s)\n";
  for (const auto& r : results) {
    for (const auto& m : r.metrics) {
      std::cout << "  " << to_string(m.algorithm) << " snr=" << r.snr_db
                << " continuity=" << format_number(m.final_continuity_pct) << "% rmse=" << format_number(m.rmse)
                << " feat_rmse=" << format_number(m.feat_rmse) << " fvib_rmse=" << format_number(m.fvib_rmse)
                << '\n';
    }
  }
  return 0;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) {
    const auto b = f.find_first_not_of(" \t\r");
    const auto e = f.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : f.substr(b, e - b + 1));
  }
  return out;
}

double parse_double(const std::string& s, const std::string& file, int line, const std::string& field) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError(file, line, "field '" + field + "': not a finite number: '" + s + "'");
  }
}

// CSV with header "re,im", one row per observed sample in omega order.
Eigen::VectorXcd read_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  std::string line;
  int lineno = 0;
  int re_col = -1, im_col = -1;
  std::vector<cplx> vals;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto fields = split_fields(line);
    if (re_col < 0) {
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (fields[i] == "re") re_col = static_cast<int>(i);
        if (fields[i] == "im") im_col = static_cast<int>(i);
      }
      if (re_col < 0) throw InputError(path, lineno, "header is missing field 're'");
      if (im_col < 0) throw InputError(path, lineno, "header is missing field 'im'");
      continue;
    }
    const std::size_t need = static_cast<std::size_t>(std::max(re_col, im_col)) + 1;
    if (fields.size() < need) {
      throw InputError(path, lineno, "expected " + std::to_string(need) + " fields, got " +
                                         std::to_string(fields.size()));
    }
    vals.emplace_back(parse_double(fields[re_col], path, lineno, "re"),
                      parse_double(fields[im_col], path, lineno, "im"));
  }
  if (re_col < 0) throw InputError(path, lineno, "missing header 're,im'");
  if (vals.empty()) throw InputError(path, lineno, "no samples");
  Eigen::VectorXcd z(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) z(static_cast<Eigen::Index>(i)) = vals[i];
  return z;
}

// Integer indices separated by whitespace or commas; '#' starts a comment.
std::vector<int> read_omega(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw InputError(path, 0, "cannot open file");
  std::vector<int> omega;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = line.substr(0, line.find('#'));
    for (char& c : line) {
      if (c == ',') c = ' ';
    }
    std::stringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      std::size_t used = 0;
      long v = 0;
      try {
        v = std::stol(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw InputError(path, lineno, "not an integer index: '" + tok + "'");
      if (v < 0 || v >= n) {
        throw InputError(path, lineno, "index " + tok + " outside [0, " + std::to_string(n) + ")");
      }
      if (!omega.empty() && v <= omega.back()) {
        throw InputError(path, lineno, "indices must be strictly increasing (" + tok + " after " +
                                           std::to_string(omega.back()) + ")");
      }
      omega.push_back(static_cast<int>(v));
    }
  }
  if (omega.empty()) throw InputError(path, lineno, "no indices");
  return omega;
}

void write_complex_csv(const fs::path& p, const std::string& index, const std::vector<int>& idx,
                       const Eigen::VectorXcd& v) {
  auto os = open_out(p);
  os << index << ",re,im\n";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    os << idx[static_cast<std::size_t>(i)] << ',' << format_number(v(i).real()) << ','
       << format_number(v(i).imag()) << '\n';
  }
}

struct DenoiseArgs {
  std::string samples, omega;
  int n = 0;
  std::optional<double> gamma, lambda, sigma;
  double rho = 0.1;
  int max_iter = 500;
  double tol = 1e-6;
  int grid_size = 4096;
};

int cmd_denoise(const DenoiseArgs& a, const std::string& out_dir) {
  if (a.n < 2) throw InputError("--n", 0, "must be >= 2");
  const Eigen::VectorXcd z = read_samples(a.samples);
  DenoiseProblem prob;
  prob.pattern.n = a.n;
  prob.pattern.omega = read_omega(a.omega, a.n);
  if (static_cast<std::size_t>(z.size()) != prob.pattern.alpha()) {
    throw InputError(a.samples, 0, std::to_string(z.size()) + " samples but " + a.omega + " lists " +
                                       std::to_string(prob.pattern.alpha()) + " indices");
  }
  prob.z_tilde = z;
  if (a.gamma) {
    prob.gamma = *a.gamma;
  } else if (a.sigma) {
    prob.gamma = *a.sigma * std::sqrt(a.n * std::log(static_cast<double>(a.n)));
  } else {
    throw InputError("--gamma", 0, "missing; give --gamma or --sigma");
  }
  prob.lambda = a.lambda ? *a.lambda : prob.gamma / std::sqrt(static_cast<double>(prob.pattern.alpha()));

  AdmmOptions opts;
  opts.rho = a.rho;
  opts.max_iter = a.max_iter;
  opts.tol = a.tol;
  LocateOptions loc;
  loc.grid_size = a.grid_size;
  try {
    prob.validate();
    opts.validate();
    loc.validate();
  } catch (const ConfigError& e) {
    throw InputError("denoise", 0, e.what());
  }

  const DenoiseSolution sol = solve(prob, opts);
  const DualCertificate cert{sol.certificate(), prob.gamma, prob.lambda};
  RecoveredSpectrum spec = locate_frequencies(cert, loc);
  fit_amplitudes(spec, sol.x_hat);
  const auto flagged = detect_misassociations(cert, prob.pattern);

  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  std::vector<int> all(static_cast<std::size_t>(a.n));
  for (int t = 0; t < a.n; ++t) all[static_cast<std::size_t>(t)] = t;
  write_complex_csv(out / "x_hat.csv", "t", all, sol.x_hat);
  write_complex_csv(out / "e_hat.csv", "t", prob.pattern.omega, sol.e_hat);
  write_complex_csv(out / "q_hat.csv", "t", all, sol.q_hat);
  {
    auto os = open_out(out / "spectrum.csv");
    os << "f,amplitude,phase,re,im\n";
    for (const auto& l : spec.lines) {
      os << format_number(l.f) << ',' << format_number(l.amplitude) << ',' << format_number(l.phase) << ','
         << format_number(l.coefficient.real()) << ',' << format_number(l.coefficient.imag()) << '\n';
    }
  }
  {
    const Eigen::VectorXcd grid = dual_polynomial_grid(cert.q, loc.grid_size);
    auto os = open_out(out / "dual_poly.csv");
    os << "f,re,im,abs\n";
    for (int k = 0; k < loc.grid_size; ++k) {
      const cplx y = grid(k);
      os << format_number(static_cast<double>(k) / loc.grid_size) << ',' << format_number(y.real()) << ','
         << format_number(y.imag()) << ',' << format_number(std::abs(y)) << '\n';
    }
  }
  {
    auto os = open_out(out / "misassociations.csv");
    os << "slot,t\n";
    for (int j : flagged) os << j << ',' << prob.pattern.omega[static_cast<std::size_t>(j)] << '\n';
  }
  json manifest = {{"tool", "fatrack"},
                   {"version", FATRACK_VERSION},
                   {"command", "denoise"},
                   {"samples", a.samples},
                   {"omega_file", a.omega},
                   {"n", a.n},
                   {"alpha", prob.pattern.alpha()},
                   {"gamma", prob.gamma},
                   {"lambda", prob.lambda},
                   {"rho", opts.rho},
                   {"max_iter", opts.max_iter},
                   {"tol", opts.tol},
                   {"iterations", sol.iters},
                   {"converged", sol.converged},
                   {"objective", sol.objective},
                   {"lines", spec.lines.size()},
                   {"misassociations", flagged}};
  open_out(out / "manifest.json") << manifest.dump(2) << '\n';

  std::cout << "denoised n=" << a.n << " alpha=" << prob.pattern.alpha() << " in " << sol.iters << " iterations"
            << (sol.converged ? "" : " (not converged)") << ", " << spec.lines.size() << " lines, "
            << flagged.size() << " flagged samples\n";
  for (const auto& l : spec.lines) {
    std::cout << "  f=" << format_number(l.f) << " amplitude=" << format_number(l.amplitude) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feature-aided tracking experiments and atomic-norm denoising"};
  app.require_subcommand(1);
  app.set_version_flag("--version", FATRACK_VERSION);

  std::string out_dir = "out";
  int jobs = 1;
  std::optional<std::uint64_t> seed;
  std::optional<int> runs;

  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment from a JSON spec");
  std::string spec_path;
  run->add_option("spec", spec_path, "Experiment spec (JSON)")->required();
  run->add_option("--seed", seed, "Override the spec seed");
  run->add_option("--runs", runs, "Override the number of Monte Carlo runs");
  run->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();
  run->add_option("--jobs", jobs, "Worker threads; 0 uses every core")->capture_default_str();

  auto* den = app.add_subcommand("denoise", "Denoise one batch of feature samples");
  DenoiseArgs da;
  den->add_option("samples", da.samples, "CSV with columns re,im in omega order")->required();
  den->add_option("omega", da.omega, "Observed indices, increasing")->required();
  den->add_option("--n", da.n, "Batch length N")->required();
  den->add_option("--gamma", da.gamma, "Atomic-norm weight");
  den->add_option("--lambda", da.lambda, "Outlier weight; default gamma/sqrt(alpha)");
  den->add_option("--sigma", da.sigma, "Noise std; sets gamma = sigma sqrt(N ln N)");
  den->add_option("--rho", da.rho, "ADMM penalty")->capture_default_str();
  den->add_option("--max-iter", da.max_iter, "ADMM iteration cap")->capture_default_str();
  den->add_option("--tol", da.tol, "ADMM tolerance")->capture_default_str();
  den->add_option("--grid-size", da.grid_size, "Dual polynomial grid")->capture_default_str();
  den->add_option("--out-dir", out_dir, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (*run) return cmd_run(spec_path, seed, runs, out_dir, jobs);
    return cmd_denoise(da, out_dir);
  } catch (const SpecError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
