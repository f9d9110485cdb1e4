#include "fatrack/experiment.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fatrack/errors.hpp"

namespace fatrack {
namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  int line = 1;
  for (std::size_t i = 0; i < offset; ++i) line += text[i] == '\n';
  return line;
}

// Line of the first occurrence of "key" at or after `from`; 0 if absent.
int line_of_key(const std::string& text, const std::string& key, std::size_t from = 0) {
  const std::size_t pos = text.find("\"" + key + "\"", from);
  return pos == std::string::npos ? 0 : line_of_offset(text, pos);
}

class Reader {
 public:
  Reader(const std::string& text, const std::string& source) : text_(text), source_(source) {}

  [[noreturn]] void fail(const std::string& path, const std::string& key, const std::string& msg) const {
    throw SpecError(source_, line_of_key(text_, key), path + ": " + msg);
  }

  const json& require(const json& obj, const std::string& path, const std::string& key) const {
    if (!obj.contains(key)) {
      throw SpecError(source_, 0, "missing required field '" + join(path, key) + "'");
    }
    return obj.at(key);
  }

  double number(const json& obj, const std::string& path, const std::string& key, double fallback,
                bool required = false) const {
    if (!obj.contains(key)) {
      if (required) require(obj, path, key);
      return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) fail(join(path, key), key, "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(join(path, key), key, "must be finite");
    return d;
  }

  int integer(const json& obj, const std::string& path, const std::string& key, int fallback,
              bool required = false) const {
    if (!obj.contains(key)) {
      if (required) require(obj, path, key);
      return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_integer()) fail(join(path, key), key, "expected an integer");
    return v.get<int>();
  }

  bool boolean(const json& obj, const std::string& path, const std::string& key, bool fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_boolean()) fail(join(path, key), key, "expected true or false");
    return v.get<bool>();
  }

  std::pair<double, double> interval(const json& obj, const std::string& path, const std::string& key,
                                     std::pair<double, double> fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
      fail(join(path, key), key, "expected [low, high]");
    }
    return {v[0].get<double>(), v[1].get<double>()};
  }

  std::string string(const json& obj, const std::string& path, const std::string& key,
                     const std::string& fallback) const {
    if (!obj.contains(key)) return fallback;
    const json& v = obj.at(key);
    if (!v.is_string()) fail(join(path, key), key, "expected a string");
    return v.get<std::string>();
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  const std::string& text() const { return text_; }
  const std::string& source() const { return source_; }

 private:
  const std::string& text_;
  const std::string& source_;
};

TruthTarget parse_target(const Reader& rd, const json& j, const std::string& path) {
  if (!j.is_object()) rd.fail(path, "targets", "expected an object");
  TruthTarget t;
  t.r0 = rd.number(j, path, "r0", 0.0, true);
  t.v0 = rd.number(j, path, "v0", 0.0, true);
  t.rho_vib = rd.number(j, path, "rho_vib", 0.0, true);
  t.f_vib = rd.number(j, path, "f_vib", 0.0, true);
  t.b = rd.number(j, path, "b", 1.0);
  t.phi = rd.number(j, path, "phi", 0.0);
  t.phi0 = rd.number(j, path, "phi0", 0.0);
  t.xi = rd.number(j, path, "xi", 0.3);
  if (t.rho_vib < 0.0) rd.fail(path + ".rho_vib", "rho_vib", "must be >= 0");
  if (t.f_vib < 0.0) rd.fail(path + ".f_vib", "f_vib", "must be >= 0");
  if (t.b <= 0.0) rd.fail(path + ".b", "b", "must be positive");
  if (t.xi <= 0.0) rd.fail(path + ".xi", "xi", "must be positive");
  return t;
}

ScenarioConfig parse_scenario(const Reader& rd, const json& j) {
  const std::string path = "scenario";
  if (!j.is_object()) rd.fail(path, path, "expected an object");
  ScenarioConfig c;
  const json& targets = rd.require(j, path, "targets");
  if (!targets.is_array() || targets.empty()) rd.fail("scenario.targets", "targets", "expected a nonempty array");
  for (std::size_t i = 0; i < targets.size(); ++i) {
    c.targets.push_back(parse_target(rd, targets[i], "scenario.targets[" + std::to_string(i) + "]"));
  }
  c.steps = rd.integer(j, path, "steps", c.steps);
  c.dt = rd.number(j, path, "dt", c.dt);
  c.pd = rd.number(j, path, "pd", c.pd);
  c.mu = rd.number(j, path, "mu", c.mu);
  std::tie(c.region_lo, c.region_hi) = rd.interval(j, path, "region", {c.region_lo, c.region_hi});
  c.R = rd.number(j, path, "R", c.R);
  std::tie(c.clutter_amp_lo, c.clutter_amp_hi) =
      rd.interval(j, path, "clutter_amp", {c.clutter_amp_lo, c.clutter_amp_hi});
  std::tie(c.p0_range, c.p0_rate) = rd.interval(j, path, "p0", {c.p0_range, c.p0_rate});
  c.random_target_phase = rd.boolean(j, path, "random_target_phase", c.random_target_phase);

  if (c.steps < 2) rd.fail("scenario.steps", "steps", "must be >= 2");
  if (c.dt <= 0.0) rd.fail("scenario.dt", "dt", "must be positive");
  if (!(c.pd > 0.0 && c.pd <= 1.0)) rd.fail("scenario.pd", "pd", "must lie in (0,1]");
  if (c.mu < 0.0) rd.fail("scenario.mu", "mu", "must be >= 0");
  if (!(c.region_hi > c.region_lo)) rd.fail("scenario.region", "region", "must be nonempty");
  if (c.R <= 0.0) rd.fail("scenario.R", "R", "must be positive");
  if (!(c.clutter_amp_lo >= 0.0 && c.clutter_amp_hi >= c.clutter_amp_lo)) {
    rd.fail("scenario.clutter_amp", "clutter_amp", "must satisfy 0 <= low <= high");
  }
  if (c.p0_range < 0.0 || c.p0_rate < 0.0) rd.fail("scenario.p0", "p0", "must be >= 0");
  return c;
}

BatchConfig parse_batch(const Reader& rd, const json& j) {
  const std::string path = "batch";
  if (!j.is_object()) rd.fail(path, path, "expected an object");
  BatchConfig b;
  b.N = rd.integer(j, path, "N", b.N);
  b.A = rd.integer(j, path, "A", b.A);
  b.gamma_scale = rd.number(j, path, "gamma_scale", b.gamma_scale);
  b.lambda_scale = rd.number(j, path, "lambda_scale", b.lambda_scale);
  b.zeta = rd.number(j, path, "zeta", b.zeta);
  b.admm.rho = rd.number(j, path, "rho", b.admm.rho);
  b.admm.max_iter = rd.integer(j, path, "max_iter", b.admm.max_iter);
  b.admm.tol = rd.number(j, path, "tol", b.admm.tol);
  b.sigma_tilde_factor = rd.number(j, path, "sigma_tilde_factor", b.sigma_tilde_factor);
  b.assoc.B = rd.number(j, path, "B", b.assoc.B);
  b.assoc.eta = rd.number(j, path, "eta", b.assoc.eta);
  b.assoc.recompute = rd.boolean(j, path, "recompute_beta", b.assoc.recompute);
  b.locate.grid_size = rd.integer(j, path, "grid_size", b.locate.grid_size);
  const std::string mode = rd.string(j, path, "feature_likelihood", "gaussian");
  if (mode == "gaussian") {
    b.feature_mode = FeatureLikelihoodMode::kGaussian;
  } else if (mode == "constant") {
    b.feature_mode = FeatureLikelihoodMode::kConstant;
  } else {
    rd.fail("batch.feature_likelihood", "feature_likelihood", "expected \"gaussian\" or \"constant\"");
  }
  try {
    b.validate();
  } catch (const ConfigError& e) {
    throw SpecError(rd.source(), line_of_key(rd.text(), "batch"), std::string("batch: ") + e.what());
  }
  return b;
}

}  // namespace

SpecError::SpecError(const std::string& source, int line, const std::string& message)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) + ": " + message),
      line_(line) {}

ExperimentSpec parse_experiment(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    std::string what = e.what();
    throw SpecError(source, line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0), "parse error: " + what);
  }
  Reader rd(text, source);
  if (!root.is_object()) throw SpecError(source, 1, "top level must be a JSON object");

  ExperimentSpec spec;
  spec.runs = rd.integer(root, "", "runs", 0, true);
  if (spec.runs < 1) rd.fail("runs", "runs", "must be >= 1");
  const json& seed = rd.require(root, "", "seed");
  if (!seed.is_number_unsigned() && !(seed.is_number_integer() && seed.get<long long>() >= 0)) {
    rd.fail("seed", "seed", "expected a nonnegative integer");
  }
  spec.seed = seed.get<std::uint64_t>();

  const json& algs = rd.require(root, "", "algorithms");
  if (!algs.is_array() || algs.empty()) rd.fail("algorithms", "algorithms", "expected a nonempty array");
  for (const auto& a : algs) {
    if (!a.is_string()) rd.fail("algorithms", "algorithms", "expected strings");
    try {
      spec.algorithms.push_back(parse_algorithm(a.get<std::string>()));
    } catch (const ConfigError& e) {
      rd.fail("algorithms", "algorithms", e.what());
    }
  }

  const json& sweep = rd.require(root, "", "sweep_snr_db");
  if (!sweep.is_array() || sweep.empty()) rd.fail("sweep_snr_db", "sweep_snr_db", "expected a nonempty array");
  for (const auto& v : sweep) {
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      rd.fail("sweep_snr_db", "sweep_snr_db", "values must be finite numbers");
    }
    spec.sweep_snr_db.push_back(v.get<double>());
  }

  spec.scenario = parse_scenario(rd, rd.require(root, "", "scenario"));
  spec.batch = root.contains("batch") ? parse_batch(rd, root.at("batch")) : BatchConfig{};

  if (root.contains("output")) {
    const json& out = root.at("output");
    if (!out.is_object()) rd.fail("output", "output", "expected an object");
    spec.metrics_csv = rd.string(out, "output", "metrics_csv", spec.metrics_csv);
    spec.summary_csv = rd.string(out, "output", "summary_csv", spec.summary_csv);
    spec.manifest = rd.string(out, "output", "manifest", spec.manifest);
  }
  return spec;
}

ExperimentSpec load_experiment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError(path, 0, "cannot open file");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_experiment(ss.str(), path);
}

std::vector<SweepResult> run_experiment(const ExperimentSpec& spec, int jobs) {
  std::vector<SweepResult> out;
  for (double snr : spec.sweep_snr_db) {
    ScenarioConfig sc = spec.scenario;
    sc.sigma2 = snr_to_sigma2(snr);
    SweepResult r;
    r.snr_db = snr;
    r.metrics = monte_carlo(sc, spec.batch, spec.runs, spec.algorithms, spec.seed, jobs);
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

void write_metrics_csv(std::ostream& os, const std::vector<SweepResult>& results) {
  os << "algorithm,snr_db,time_step,rmse,nees_mean,continuity_pct,feat_rmse,fvib_rmse\n";
  for (const auto& r : results) {
    for (const auto& m : r.metrics) {
      for (std::size_t t = 0; t < m.steps.size(); ++t) {
        const StepMetrics& s = m.steps[t];
        os << to_string(m.algorithm) << ',' << format_number(r.snr_db) << ',' << t << ',' << format_number(s.rmse)
           << ',' << format_number(s.nees_mean) << ',' << format_number(s.continuity_pct) << ','
           << format_number(s.feat_rmse) << ',' << format_number(s.fvib_rmse) << '\n';
      }
    }
  }
}

void write_summary_csv(std::ostream& os, const std::vector<SweepResult>& results, int runs) {
  os << "algorithm,snr_db,runs,tracks,final_continuity_pct,rmse,feat_rmse,fvib_rmse\n";
  for (const auto& r : results) {
    for (const auto& m : r.metrics) {
      os << to_string(m.algorithm) << ',' << format_number(r.snr_db) << ',' << runs << ',' << m.track_count << ','
         << format_number(m.final_continuity_pct) << ',' << format_number(m.rmse) << ','
         << format_number(m.feat_rmse) << ',' << format_number(m.fvib_rmse) << '\n';
    }
  }
}

}  // namespace fatrack
