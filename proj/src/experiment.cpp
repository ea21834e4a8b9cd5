#include "lmoamp/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <ostream>
#include <set>
#include <thread>

#include "lmoamp/errors.hpp"
#include "lmoamp/matrix_io.hpp"

namespace lmoamp {

namespace fs = std::filesystem;

namespace {

const char* ensemble_name(Ensemble e) { return e == Ensemble::Iid ? "iid" : "cond"; }

class ObjectReader {
public:
  ObjectReader(const Json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(label() + " must be an object");
  }

  const Json* get(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    if (it->is_array()) {
      throw ConfigError(path(key) + ": list values are only allowed with the sweep command");
    }
    return &*it;
  }

  const Json& require(const std::string& key) {
    const Json* v = get(key);
    if (!v) throw ConfigError(path(key) + " is required");
    return *v;
  }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError("unknown key '" + path(k) + "'");
  }

  std::string path(const std::string& key) const { return where_.empty() ? key : where_ + "." + key; }

private:
  std::string label() const { return where_.empty() ? "config" : where_; }

  const Json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

double as_number(const Json& v, const std::string& name) {
  if (!v.is_number()) throw ConfigError(name + " must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(name + " must be finite");
  return x;
}

std::int64_t as_integer(const Json& v, const std::string& name) {
  if (!v.is_number_integer()) throw ConfigError(name + " must be an integer");
  return v.get<std::int64_t>();
}

std::string as_string(const Json& v, const std::string& name) {
  if (!v.is_string()) throw ConfigError(name + " must be a string");
  return v.get<std::string>();
}

bool as_bool(const Json& v, const std::string& name) {
  if (!v.is_boolean()) throw ConfigError(name + " must be a boolean");
  return v.get<bool>();
}

fs::path resolve_path(const fs::path& p, const fs::path& base) {
  return p.is_absolute() || base.empty() ? p : base / p;
}

Vector load_spectrum_file(const fs::path& path) {
  if (path.extension() == ".csv") {
    const Matrix m = read_matrix_csv(path);
    if (m.rows() != 1 && m.cols() != 1) throw ConfigError("spectrum file must hold a single row or column");
    return Eigen::Map<const Vector>(m.data(), m.size());
  }
  return read_vector_binary(path);
}

/// Eigenvalues of A^T A from the configured spectrum file, zero-padded to N.
Vector loaded_eigenvalues(const ExperimentConfig& cfg) {
  Vector raw = load_spectrum_file(*cfg.spectrum_path);
  const Index N = cfg.N;
  const Index r = std::min(cfg.M(), N);
  if (raw.size() != r && raw.size() != N) {
    throw ConfigError("spectrum file has " + std::to_string(raw.size()) + " entries, expected min(M, N) = " +
                      std::to_string(r) + " or N = " + std::to_string(N));
  }
  std::sort(raw.data(), raw.data() + raw.size(), std::greater<>());
  if (raw.size() > r && (raw.tail(raw.size() - r).array() != 0.0).any()) {
    throw ConfigError("spectrum file has more than min(M, N) nonzero eigenvalues");
  }
  Vector eig = Vector::Zero(N);
  eig.head(r) = raw.head(r);
  return eig;
}

std::string trial_name(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "trial_%03d", k);
  return buf;
}

void log_line(const CommandOptions& opts, const std::string& msg) {
  if (opts.verbose && opts.log) *opts.log << msg << std::endl;
}

Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

Json summary_json(const McSummary& s) {
  Json j;
  j["trials"] = s.trials;
  j["mc_mean_mse"] = s.mean;
  Json se = Json::array(), pred = Json::array(), z = Json::array();
  for (std::size_t t = 0; t < s.size(); ++t) {
    se.push_back(optional_json(s.std_error[t]));
    pred.push_back(optional_json(s.se_pred[t]));
    z.push_back(optional_json(s.z[t]));
  }
  j["mc_stderr"] = std::move(se);
  j["se_pred"] = std::move(pred);
  j["z"] = std::move(z);
  j["fraction_within_3se"] = optional_json(s.fraction_within(3.0));
  return j;
}

Json run_metadata(const std::vector<RunTrajectory>& runs) {
  Json j;
  int partial = 0, diverged = 0;
  Json events = Json::array();
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const auto& r = runs[k];
    if (r.partial) ++partial;
    if (r.diverged) ++diverged;
    if (!r.error.empty() || !r.warnings.empty()) {
      Json e{{"trial", k}};
      if (!r.error.empty()) {
        e["error"] = r.error;
        e["iteration"] = r.error_iteration;
      }
      if (!r.warnings.empty()) e["warnings"] = r.warnings;
      events.push_back(std::move(e));
    }
  }
  j["partial_trials"] = partial;
  j["diverged_trials"] = diverged;
  j["events"] = std::move(events);
  return j;
}

bool any_partial(const std::vector<RunTrajectory>& runs) {
  return std::any_of(runs.begin(), runs.end(), [](const RunTrajectory& r) { return r.partial; });
}

std::vector<double> se_prediction(const SEPair& se, Algorithm a) {
  if (a == Algorithm::LmOamp && se.lm) return se.lm->post_b;
  if (a == Algorithm::Oamp && se.oamp) return se.oamp->post_b;
  return {};
}

void write_trial(const fs::path& dir, const std::string& stem, const RunTrajectory& traj,
                 const std::vector<double>& se_pred, const ExperimentConfig& cfg) {
  const Json config = cfg.resolved();
  if (cfg.write_csv) write_text(dir / (stem + ".csv"), run_table(traj, se_pred).render(config));
  if (cfg.write_json) write_json(dir / (stem + ".json"), run_json(traj, se_pred), config);
}

std::vector<std::string> summary_cells(const McSummary& s, std::size_t t) {
  if (t >= s.size()) return {"", "", "", ""};
  return {format_double(s.mean[t]), format_optional(s.std_error[t]), format_optional(s.se_pred[t]),
          format_optional(s.z[t])};
}

int write_se_outputs(const ExperimentConfig& cfg, const fs::path& dir, const SEPair& se) {
  const Json config = cfg.resolved();
  if (se.lm) {
    if (cfg.write_csv) write_text(dir / "se_lm.csv", se_table(*se.lm).render(config));
    if (cfg.write_json) write_json(dir / "se_lm.json", se_json(*se.lm), config);
  }
  if (se.oamp) {
    if (cfg.write_csv) write_text(dir / "se_oamp.csv", se_table(*se.oamp).render(config));
    if (cfg.write_json) write_json(dir / "se_oamp.json", se_json(*se.oamp), config);
  }
  Json eq;
  if (se.report) {
    eq = equivalence_json(*se.report);
  } else {
    eq["result"] = "FAIL";
    eq["tolerance"] = kEquivalenceTol;
  }
  if (!se.error.empty()) eq["error"] = se.error;
  write_json(dir / "equivalence.json", std::move(eq), config);
  return se.exit_code;
}

}  // namespace

Index ExperimentConfig::M() const { return Index(std::llround(delta * double(N))); }

double ExperimentConfig::noise_variance() const {
  if (sigma2) return *sigma2;
  return sigma2_from_snr_db(*snr_db, double(M()) / double(N));
}

Json ExperimentConfig::resolved() const {
  Json j;
  j["N"] = N;
  j["delta"] = delta;
  Json p;
  p["kind"] = prior.kind() == PriorKind::PureGaussian ? "gaussian" : "bernoulli_gaussian";
  if (prior.kind() == PriorKind::BernoulliGaussian) p["rho"] = prior.rho();
  j["prior"] = std::move(p);
  j["noise"] = sigma2 ? Json{{"sigma2", *sigma2}} : Json{{"snr_db", *snr_db}};
  Json m;
  m["ensemble"] = ensemble_name(ensemble);
  if (spectrum_path) {
    m["spectrum_path"] = spectrum_path->generic_string();
  } else if (ensemble == Ensemble::Cond) {
    m["kappa"] = kappa;
  }
  j["matrix"] = std::move(m);
  Json s;
  s["algorithm"] = to_string(solver.algorithm);
  s["max_iters"] = solver.max_iters;
  s["stop_tol"] = solver.stop_tol;
  s["window"] = solver.window ? Json(*solver.window) : Json(nullptr);
  s["nonlinearity_guard"] = solver.nonlinearity_guard;
  j["solver"] = std::move(s);
  j["trials"] = trials;
  j["seed"] = seed;
  Json o;
  if (out_dir) o["dir"] = out_dir->generic_string();
  Json formats = Json::array();
  if (write_csv) formats.push_back("csv");
  if (write_json) formats.push_back("json");
  o["formats"] = std::move(formats);
  j["outputs"] = std::move(o);
  j["sweep"] = Json{{"command", sweep_command}};
  return j;
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  ObjectReader root(j, "");

  const std::int64_t n = as_integer(root.require("N"), "N");
  if (n < 1) throw ConfigError("N must be >= 1");
  cfg.N = Index(n);
  cfg.delta = as_number(root.require("delta"), "delta");
  if (!(cfg.delta > 0.0)) throw ConfigError("delta must be > 0");
  const double m_exact = cfg.delta * double(cfg.N);
  if (cfg.M() < 1 || std::abs(m_exact - double(cfg.M())) > 1e-9 * double(cfg.N)) {
    throw ConfigError("delta * N must be a positive integer (got " + format_double(m_exact) + ")");
  }

  {
    ObjectReader pr(root.require("prior"), "prior");
    const std::string kind = as_string(pr.require("kind"), "prior.kind");
    if (kind == "bernoulli_gaussian") {
      const double rho = as_number(pr.require("rho"), "prior.rho");
      if (!(rho > 0.0 && rho <= 1.0)) throw ConfigError("prior.rho must lie in (0, 1]");
      cfg.prior = PriorModel::bernoulli_gaussian(rho);
    } else if (kind == "gaussian") {
      if (pr.get("rho")) throw ConfigError("prior.rho is not used by the gaussian prior");
      cfg.prior = PriorModel::gaussian();
    } else {
      throw ConfigError("prior.kind must be 'bernoulli_gaussian' or 'gaussian'");
    }
    pr.finish();
  }

  {
    ObjectReader no(root.require("noise"), "noise");
    const Json* s2 = no.get("sigma2");
    const Json* snr = no.get("snr_db");
    if (bool(s2) == bool(snr)) throw ConfigError("noise needs exactly one of sigma2 and snr_db");
    if (s2) {
      cfg.sigma2 = as_number(*s2, "noise.sigma2");
      if (!(*cfg.sigma2 >= 0.0)) throw ConfigError("noise.sigma2 must be >= 0");
    } else {
      cfg.snr_db = as_number(*snr, "noise.snr_db");
    }
    no.finish();
  }

  {
    ObjectReader ma(root.require("matrix"), "matrix");
    const std::string ens = as_string(ma.require("ensemble"), "matrix.ensemble");
    if (ens == "iid") {
      cfg.ensemble = Ensemble::Iid;
    } else if (ens == "cond") {
      cfg.ensemble = Ensemble::Cond;
    } else {
      throw ConfigError("matrix.ensemble must be 'iid' or 'cond'");
    }
    const Json* kappa = ma.get("kappa");
    const Json* spec = ma.get("spectrum_path");
    if (cfg.ensemble == Ensemble::Iid) {
      if (kappa) throw ConfigError("matrix.kappa applies to the cond ensemble only");
      if (spec) throw ConfigError("matrix.spectrum_path applies to the cond ensemble only");
    } else {
      if (bool(kappa) == bool(spec)) throw ConfigError("the cond ensemble needs exactly one of kappa and spectrum_path");
      if (kappa) {
        cfg.kappa = as_number(*kappa, "matrix.kappa");
        if (!(cfg.kappa >= 1.0)) throw ConfigError("matrix.kappa must be >= 1");
      } else {
        cfg.spectrum_path = fs::path(as_string(*spec, "matrix.spectrum_path"));
      }
    }
    ma.finish();
  }

  if (const Json* sv = root.get("solver")) {
    ObjectReader so(*sv, "solver");
    if (const Json* v = so.get("algorithm")) cfg.solver.algorithm = algorithm_from_string(as_string(*v, "solver.algorithm"));
    if (const Json* v = so.get("max_iters")) {
      const auto it = as_integer(*v, "solver.max_iters");
      if (it < 1 || it > 100000) throw ConfigError("solver.max_iters must lie in [1, 100000]");
      cfg.solver.max_iters = int(it);
    }
    if (const Json* v = so.get("stop_tol")) cfg.solver.stop_tol = as_number(*v, "solver.stop_tol");
    if (const Json* v = so.get("window"); v && !v->is_null()) cfg.solver.window = Index(as_integer(*v, "solver.window"));
    if (const Json* v = so.get("nonlinearity_guard")) {
      cfg.solver.nonlinearity_guard = as_bool(*v, "solver.nonlinearity_guard");
    }
    so.finish();
  }
  cfg.solver.validate();

  if (const Json* v = root.get("trials")) {
    const auto t = as_integer(*v, "trials");
    if (t < 1 || t > 1000000) throw ConfigError("trials must lie in [1, 1000000]");
    cfg.trials = int(t);
  }
  if (const Json* v = root.get("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
      throw ConfigError("seed must be a non-negative integer");
    }
    cfg.seed = v->get<std::uint64_t>();
  }
  cfg.solver.seed = cfg.seed;

  if (const Json* ov = root.get("outputs")) {
    ObjectReader ou(*ov, "outputs");
    if (const Json* v = ou.get("dir")) cfg.out_dir = fs::path(as_string(*v, "outputs.dir"));
    // formats is a list by nature; read it directly.
    if (ov->contains("formats")) {
      const Json& f = (*ov)["formats"];
      if (!f.is_array() || f.empty()) throw ConfigError("outputs.formats must be a non-empty list");
      cfg.write_csv = cfg.write_json = false;
      for (const auto& e : f) {
        const std::string name = as_string(e, "outputs.formats[]");
        if (name == "csv") {
          cfg.write_csv = true;
        } else if (name == "json") {
          cfg.write_json = true;
        } else {
          throw ConfigError("outputs.formats entries must be 'csv' or 'json'");
        }
      }
    }
    for (const auto& [k, v] : ov->items()) {
      if (k != "dir" && k != "formats") throw ConfigError("unknown key 'outputs." + k + "'");
    }
  }

  if (const Json* sw = root.get("sweep")) {
    ObjectReader sr(*sw, "sweep");
    if (const Json* v = sr.get("command")) {
      cfg.sweep_command = as_string(*v, "sweep.command");
      if (cfg.sweep_command != "run" && cfg.sweep_command != "se" && cfg.sweep_command != "compare") {
        throw ConfigError("sweep.command must be 'run', 'se' or 'compare'");
      }
    }
    sr.finish();
  }

  root.finish();
  return cfg;
}

Json load_json_file(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

ExperimentConfig load_config(const fs::path& path) { return parse_config(load_json_file(path), path.parent_path()); }

SpectrumInput config_spectrum(const ExperimentConfig& cfg) {
  const Index M = cfg.M();
  const Index N = cfg.N;
  SpectrumInput spec;
  spec.delta = double(M) / double(N);
  if (cfg.spectrum_path) {
    ExperimentConfig local = cfg;
    local.spectrum_path = resolve_path(*cfg.spectrum_path, cfg.base_dir);
    spec.eigenvalues = loaded_eigenvalues(local);
  } else if (cfg.ensemble == Ensemble::Cond) {
    spec.eigenvalues = cond_controlled_eigenvalues(M, N, cfg.kappa);
  } else {
    const Matrix A = gen_iid_gaussian(M, N, cfg.seed);
    const bool wide = M <= N;
    const Matrix gram = wide ? Matrix(A * A.transpose()) : Matrix(A.transpose() * A);
    Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
    Vector lam = es.eigenvalues().cwiseMax(0.0).reverse();
    spec.eigenvalues = Vector::Zero(N);
    spec.eigenvalues.head(lam.size()) = lam;
  }
  try {
    spec.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("spectrum: ") + e.what());
  }
  return spec;
}

TrialInstance generate_trial(const ExperimentConfig& cfg, int k, bool need_spectrum) {
  const std::uint64_t seed = cfg.seed + std::uint64_t(k);
  const Index M = cfg.M();
  const Index N = cfg.N;
  const double sigma2 = cfg.noise_variance();
  TrialInstance out;
  if (cfg.ensemble == Ensemble::Cond) {
    if (cfg.spectrum_path) {
      const Vector eig = config_spectrum(cfg).eigenvalues;
      out.spectrum = gen_right_invariant_factored(M, N, eig.head(std::min(M, N)).cwiseSqrt(), seed);
    } else {
      out.spectrum = gen_cond_controlled_factored(M, N, cfg.kappa, seed);
    }
    out.instance = make_instance(out.spectrum.dense(), cfg.prior, sigma2, seed);
  } else {
    out.instance = make_instance(gen_iid_gaussian(M, N, seed), cfg.prior, sigma2, seed);
    if (need_spectrum) out.spectrum = spectral_view(out.instance.A);
  }
  return out;
}

std::optional<double> McSummary::fraction_within(double bound) const {
  int counted = 0, inside = 0;
  for (std::size_t t = 0; t < size(); ++t) {
    if (!z[t]) continue;
    ++counted;
    if (std::abs(*z[t]) <= bound) ++inside;
  }
  if (counted == 0) return std::nullopt;
  return double(inside) / double(counted);
}

McSummary summarize(const std::vector<RunTrajectory>& runs, const std::vector<double>& se_pred) {
  McSummary s;
  std::size_t T = 0;
  for (const auto& r : runs) T = std::max(T, r.records.size());
  for (std::size_t t = 0; t < T; ++t) {
    std::vector<double> vals;
    for (const auto& r : runs)
      if (t < r.records.size()) vals.push_back(r.records[t].mse);
    const double n = double(vals.size());
    double mean = 0.0;
    for (double v : vals) mean += v;
    mean /= n;
    std::optional<double> se;
    if (vals.size() >= 2) {
      double ss = 0.0;
      for (double v : vals) ss += (v - mean) * (v - mean);
      se = std::sqrt(ss / (n - 1.0) / n);
    }
    std::optional<double> pred;
    if (t < se_pred.size()) pred = se_pred[t];
    std::optional<double> z;
    if (se && pred && *se > 0.0) z = (mean - *pred) / *se;
    s.trials.push_back(int(vals.size()));
    s.mean.push_back(mean);
    s.std_error.push_back(se);
    s.se_pred.push_back(pred);
    s.z.push_back(z);
  }
  return s;
}

SEPair run_se_pair(const ExperimentConfig& cfg) {
  SEPair out;
  const SpectrumInput spectrum = config_spectrum(cfg);
  const double sigma2 = cfg.noise_variance();
  const int T = cfg.solver.max_iters;
  auto guarded = [&](auto&& fn) {
    try {
      fn();
    } catch (const DegenerateError& e) {
      out.error = e.what();
    } catch (const SingularCovarianceError& e) {
      out.error = e.what();
    } catch (const InvariantError& e) {
      out.error = e.what();
    } catch (const DomainError& e) {
      out.error = e.what();
    }
    if (!out.error.empty()) out.exit_code = kExitDegenerate;
  };
  guarded([&] { out.oamp = se_oamp(spectrum, cfg.prior, sigma2, T); });
  guarded([&] {
    if (cfg.solver.nonlinearity_guard && cfg.prior.is_linear()) {
      throw DegenerateError("long-memory state evolution skipped: " + cfg.prior.describe() +
                            " has an affine denoiser and singular message covariances");
    }
    out.lm = se_lm_oamp(spectrum, cfg.prior, sigma2, T);
  });
  if (out.lm && out.oamp) out.report = equivalence_report(*out.lm, *out.oamp);
  return out;
}

fs::path resolve_out_dir(const std::optional<fs::path>& cli_out, const ExperimentConfig& cfg) {
  if (cli_out && !cli_out->empty()) return *cli_out;
  if (cfg.out_dir) return resolve_path(*cfg.out_dir, cfg.base_dir);
  if (const char* env = std::getenv("LMOAMP_OUT_DIR"); env && *env) return fs::path(env);
  return fs::path("lmoamp_out");
}

void parallel_for(int count, int workers, const std::function<void(int)>& fn) {
  std::vector<std::exception_ptr> errors(std::size_t(std::max(count, 0)));
  std::atomic<int> next{0};
  auto body = [&] {
    for (int k = next++; k < count; k = next++) {
      try {
        fn(k);
      } catch (...) {
        errors[std::size_t(k)] = std::current_exception();
      }
    }
  };
  const int n = std::clamp(workers, 1, std::max(count, 1));
  if (n == 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < n; ++i) pool.emplace_back(body);
    for (auto& th : pool) th.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

CompareResult compare_experiment(const ExperimentConfig& cfg, int workers) {
  CompareResult res;
  res.se = run_se_pair(cfg);
  const auto n = std::size_t(cfg.trials);
  res.lm.resize(n);
  res.oamp.resize(n);
  const bool with_amp = cfg.solver.algorithm == Algorithm::Amp;
  if (with_amp) res.amp.resize(n);

  SolverConfig lm_cfg = cfg.solver;
  lm_cfg.algorithm = Algorithm::LmOamp;
  SolverConfig oamp_cfg = cfg.solver;
  oamp_cfg.algorithm = Algorithm::Oamp;

  parallel_for(cfg.trials, workers, [&](int k) {
    const TrialInstance trial = generate_trial(cfg, k, true);
    res.lm[std::size_t(k)] = run_lm_oamp(trial.instance, trial.spectrum, cfg.prior, lm_cfg);
    res.oamp[std::size_t(k)] = run_oamp(trial.instance, trial.spectrum, cfg.prior, oamp_cfg);
    if (with_amp) res.amp[std::size_t(k)] = run_amp(trial.instance, cfg.prior, cfg.solver);
  });

  res.lm_summary = summarize(res.lm, se_prediction(res.se, Algorithm::LmOamp));
  res.oamp_summary = summarize(res.oamp, se_prediction(res.se, Algorithm::Oamp));
  const std::size_t T = std::min(res.lm_summary.size(), res.oamp_summary.size());
  for (std::size_t t = 0; t < T; ++t) {
    res.rel_gap.push_back(std::abs(res.lm_summary.mean[t] - res.oamp_summary.mean[t]) / res.oamp_summary.mean[t]);
  }
  if (with_amp) {
    res.amp_summary = summarize(res.amp, {});
    for (const auto& r : res.amp) {
      const bool big = std::any_of(r.records.begin(), r.records.end(),
                                   [](const IterationRecord& rec) { return !(rec.mse <= 1.0); });
      if (r.diverged || big) res.amp_divergence_event = true;
    }
  }
  return res;
}

int cmd_run(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const fs::path dir = opts.out_dir;
  fs::create_directories(dir / "trials");
  const Json config = cfg.resolved();

  SEPair se;
  if (cfg.solver.algorithm != Algorithm::Amp) se = run_se_pair(cfg);
  const std::vector<double> pred = se_prediction(se, cfg.solver.algorithm);

  std::vector<RunTrajectory> runs(std::size_t(cfg.trials));
  std::mutex log_mutex;
  parallel_for(cfg.trials, opts.workers, [&](int k) {
    const TrialInstance trial = generate_trial(cfg, k, cfg.solver.algorithm != Algorithm::Amp);
    runs[std::size_t(k)] = run_solver(trial.instance, trial.spectrum, cfg.prior, cfg.solver);
    write_trial(dir / "trials", trial_name(k), runs[std::size_t(k)], pred, cfg);
    std::lock_guard lock(log_mutex);
    log_line(opts, "trial " + std::to_string(k) + " done (" + std::to_string(runs[std::size_t(k)].records.size()) +
                       " iterations)");
  });

  const McSummary s = summarize(runs, pred);
  if (cfg.write_csv) {
    CsvTable table(kAggregateColumns);
    for (std::size_t t = 0; t < s.size(); ++t) {
      auto cells = summary_cells(s, t);
      table.add_row({std::to_string(t), std::to_string(s.trials[t]), cells[0], cells[1], cells[2], cells[3]});
    }
    write_text(dir / "aggregate.csv", table.render(config));
  }
  Json agg;
  agg["algorithm"] = to_string(cfg.solver.algorithm);
  agg["summary"] = summary_json(s);
  agg["runs"] = run_metadata(runs);
  if (se.report) agg["equivalence"] = equivalence_json(*se.report);
  if (!se.error.empty()) agg["se_error"] = se.error;
  if (cfg.solver.algorithm == Algorithm::Amp) agg["se_note"] = "no state evolution prediction for the AMP baseline";
  write_json(dir / "aggregate.json", std::move(agg), config);

  return any_partial(runs) || se.exit_code ? kExitDegenerate : kExitOk;
}

int cmd_se(const ExperimentConfig& cfg, const CommandOptions& opts) {
  fs::create_directories(opts.out_dir);
  const SEPair se = run_se_pair(cfg);
  if (se.report) {
    log_line(opts, std::string("equivalence: ") + (se.report->pass ? "PASS" : "FAIL") +
                       " (max gap " + format_double(se.report->max_gap) + ")");
  }
  return write_se_outputs(cfg, opts.out_dir, se);
}

int cmd_compare(const ExperimentConfig& cfg, const CommandOptions& opts) {
  const fs::path dir = opts.out_dir;
  fs::create_directories(dir / "trials");
  const Json config = cfg.resolved();
  const CompareResult res = compare_experiment(cfg, opts.workers);
  int code = write_se_outputs(cfg, dir, res.se);

  const auto lm_pred = se_prediction(res.se, Algorithm::LmOamp);
  const auto oamp_pred = se_prediction(res.se, Algorithm::Oamp);
  for (int k = 0; k < cfg.trials; ++k) {
    write_trial(dir / "trials", trial_name(k) + "_lm_oamp", res.lm[std::size_t(k)], lm_pred, cfg);
    write_trial(dir / "trials", trial_name(k) + "_oamp", res.oamp[std::size_t(k)], oamp_pred, cfg);
    if (!res.amp.empty()) write_trial(dir / "trials", trial_name(k) + "_amp", res.amp[std::size_t(k)], {}, cfg);
  }

  if (cfg.write_csv) {
    CsvTable mc({"iteration", "trials", "lm_mc_mean", "lm_mc_stderr", "lm_se_pred", "lm_z", "oamp_mc_mean",
                 "oamp_mc_stderr", "oamp_se_pred", "oamp_z"});
    const std::size_t T = std::max(res.lm_summary.size(), res.oamp_summary.size());
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<std::string> row{std::to_string(t),
                                   std::to_string(t < res.lm_summary.size() ? res.lm_summary.trials[t] : 0)};
      for (auto& c : summary_cells(res.lm_summary, t)) row.push_back(std::move(c));
      for (auto& c : summary_cells(res.oamp_summary, t)) row.push_back(std::move(c));
      mc.add_row(std::move(row));
    }
    write_text(dir / "mc_vs_se.csv", mc.render(config));

    CsvTable gap({"iteration", "lm_mc_mean", "oamp_mc_mean", "rel_gap"});
    for (std::size_t t = 0; t < res.rel_gap.size(); ++t) {
      gap.add_row({std::to_string(t), format_double(res.lm_summary.mean[t]), format_double(res.oamp_summary.mean[t]),
                   format_double(res.rel_gap[t])});
    }
    write_text(dir / "lm_vs_oamp_gap.csv", gap.render(config));

    if (!res.amp.empty()) {
      CsvTable amp({"iteration", "trials", "mc_mean_mse", "mc_stderr"});
      for (std::size_t t = 0; t < res.amp_summary.size(); ++t) {
        amp.add_row({std::to_string(t), std::to_string(res.amp_summary.trials[t]),
                     format_double(res.amp_summary.mean[t]), format_optional(res.amp_summary.std_error[t])});
      }
      write_text(dir / "amp.csv", amp.render(config));
    }
  }

  Json report;
  report["lm_oamp"] = summary_json(res.lm_summary);
  report["lm_oamp"]["runs"] = run_metadata(res.lm);
  report["oamp"] = summary_json(res.oamp_summary);
  report["oamp"]["runs"] = run_metadata(res.oamp);
  report["rel_gap"] = res.rel_gap;
  report["max_rel_gap"] = res.rel_gap.empty() ? Json(nullptr)
                                              : Json(*std::max_element(res.rel_gap.begin(), res.rel_gap.end()));
  if (!res.amp.empty()) {
    Json amp = summary_json(res.amp_summary);
    amp["runs"] = run_metadata(res.amp);
    amp["divergence_event"] = res.amp_divergence_event;
    report["amp"] = std::move(amp);
  }
  if (res.se.report) report["equivalence"] = res.se.report->pass ? "PASS" : "FAIL";
  if (cfg.trials < 2) report["note"] = "single trial: standard errors absent and z-scores suppressed";
  write_json(dir / "compare.json", std::move(report), config);

  if (any_partial(res.lm) || any_partial(res.oamp)) code = kExitDegenerate;
  log_line(opts, "compare finished");
  return code;
}

namespace {

struct SweepField {
  Json::json_pointer pointer;
  std::string name;
  Json values;
};

void collect_sweeps(const Json& j, const Json::json_pointer& at, std::vector<SweepField>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) collect_sweeps(v, at / k, out);
  } else if (j.is_array()) {
    if (at.to_string() == "/outputs/formats") return;
    std::string name = at.to_string().substr(1);
    std::replace(name.begin(), name.end(), '/', '.');
    out.push_back({at, name, j});
  }
}

std::string cell_of(const Json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_float()) return format_double(v.get<double>());
  return v.dump();
}

}  // namespace

int cmd_sweep(const Json& raw, const fs::path& base_dir, const CommandOptions& opts) {
  std::vector<SweepField> fields;
  collect_sweeps(raw, Json::json_pointer(), fields);
  if (fields.size() > 2) throw ConfigError("at most two fields may be swept (found " + std::to_string(fields.size()) + ")");
  for (const auto& f : fields) {
    if (f.values.empty()) throw ConfigError("sweep list for '" + f.name + "' is empty");
  }

  std::vector<std::vector<std::size_t>> points{{}};
  for (const auto& f : fields) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& p : points)
      for (std::size_t i = 0; i < f.values.size(); ++i) {
        auto q = p;
        q.push_back(i);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }

  // Validate every point before running any of them.
  std::vector<ExperimentConfig> configs;
  for (const auto& p : points) {
    Json point = raw;
    for (std::size_t f = 0; f < fields.size(); ++f) point[fields[f].pointer] = fields[f].values[p[f]];
    configs.push_back(parse_config(point, base_dir));
  }

  std::vector<std::string> columns{"point", "dir"};
  for (const auto& f : fields) columns.push_back(f.name);
  for (const char* c : {"command", "exit_code", "se_lm_final", "se_lm_fixed_point", "se_lm_fixed_point_iteration",
                        "equivalence"})
    columns.emplace_back(c);
  CsvTable index(columns);

  int worst = kExitOk;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ExperimentConfig& cfg = configs[i];
    char name[32];
    std::snprintf(name, sizeof name, "point_%03zu", i);
    CommandOptions sub = opts;
    sub.out_dir = opts.out_dir / name;
    log_line(opts, std::string("sweep ") + name);

    int code = kExitOk;
    if (cfg.sweep_command == "run") {
      code = cmd_run(cfg, sub);
    } else if (cfg.sweep_command == "compare") {
      code = cmd_compare(cfg, sub);
    } else {
      code = cmd_se(cfg, sub);
    }
    worst = std::max(worst, code);

    std::vector<std::string> row{std::to_string(i), name};
    for (std::size_t f = 0; f < fields.size(); ++f) row.push_back(cell_of(fields[f].values[points[i][f]]));
    row.push_back(cfg.sweep_command);
    row.push_back(std::to_string(code));
    std::string final_v, fp_v, fp_it, eq;
    if (cfg.sweep_command != "run") {
      const Json se = load_json_file(sub.out_dir / "equivalence.json");
      eq = se.value("result", "");
      if (se.contains("lm_fixed_point") && !se["lm_fixed_point"].is_null()) {
        fp_v = format_double(se["lm_fixed_point"]["value"].get<double>());
        fp_it = std::to_string(se["lm_fixed_point"]["iteration"].get<int>());
      }
      const auto pair = fs::exists(sub.out_dir / "se_lm.csv") ? read_csv(sub.out_dir / "se_lm.csv") : CsvData{};
      if (!pair.rows.empty()) final_v = pair.rows.back()[pair.column("v_post_b")];
    }
    row.push_back(final_v);
    row.push_back(fp_v);
    row.push_back(fp_it);
    row.push_back(eq);
    index.add_row(std::move(row));
  }

  Json index_config;
  index_config["sweep"] = raw;
  write_text(opts.out_dir / "index.csv", index.render(index_config));
  return worst;
}

}  // namespace lmoamp
