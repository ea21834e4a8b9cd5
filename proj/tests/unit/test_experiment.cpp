#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <stdexcept>

#include "lmoamp/errors.hpp"
#include "lmoamp/experiment.hpp"

using namespace lmoamp;

namespace {

Json base_config() {
  return Json::parse(R"({"N": 100, "delta": 0.5, "prior": {"kind": "bernoulli_gaussian", "rho": 0.1},
    "noise": {"snr_db": 30}, "matrix": {"ensemble": "cond", "kappa": 10},
    "solver": {"algorithm": "lm_oamp", "max_iters": 8, "stop_tol": 0}, "trials": 4, "seed": 3})");
}

}  // namespace

TEST_CASE("config parsing") {
  const ExperimentConfig cfg = parse_config(base_config());
  CHECK(cfg.N == 100);
  CHECK(cfg.M() == 50);
  CHECK(cfg.noise_variance() == doctest::Approx(2e-3).epsilon(1e-14));
  CHECK(cfg.solver.max_iters == 8);
  CHECK(cfg.trials == 4);
  const Json r = cfg.resolved();
  CHECK(r["solver"]["window"].is_null());
  CHECK(r["solver"]["nonlinearity_guard"] == true);
  CHECK(parse_config(r).resolved() == r);

  auto rejects = [](const std::function<void(Json&)>& edit) {
    Json j = base_config();
    edit(j);
    CHECK_THROWS_AS(parse_config(j), ConfigError);
  };
  rejects([](Json& j) { j["bogus"] = 1; });
  rejects([](Json& j) { j["solver"]["bogus"] = 1; });
  rejects([](Json& j) { j.erase("delta"); });
  rejects([](Json& j) { j["N"] = "100"; });
  rejects([](Json& j) { j["delta"] = 0.333; });
  rejects([](Json& j) { j["noise"]["sigma2"] = 0.1; });
  rejects([](Json& j) { j["noise"] = Json::object(); });
  rejects([](Json& j) { j["noise"]["snr_db"] = Json::array({10, 20}); });
  rejects([](Json& j) { j["prior"]["rho"] = 0.0; });
  rejects([](Json& j) { j["prior"]["kind"] = "laplace"; });
  rejects([](Json& j) { j["matrix"]["kappa"] = 0.5; });
  rejects([](Json& j) { j["matrix"]["ensemble"] = "dct"; });
  rejects([](Json& j) { j["matrix"] = {{"ensemble", "iid"}, {"kappa", 2}}; });
  rejects([](Json& j) { j["solver"]["algorithm"] = "vamp"; });
  rejects([](Json& j) { j["solver"]["max_iters"] = 0; });
  rejects([](Json& j) { j["trials"] = 0; });
  rejects([](Json& j) { j["seed"] = -1; });
  rejects([](Json& j) { j["outputs"] = {{"formats", Json::array({"xml"})}}; });
}

TEST_CASE("trials are reproducible and distinct") {
  const ExperimentConfig cfg = parse_config(base_config());
  const auto a = generate_trial(cfg, 1);
  const auto b = generate_trial(cfg, 1);
  const auto c = generate_trial(cfg, 2);
  CHECK(a.instance.y == b.instance.y);
  CHECK(a.instance.A == b.instance.A);
  CHECK(a.instance.y != c.instance.y);
  CHECK((a.spectrum.eigenvalues - config_spectrum(cfg).eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("summary statistics") {
  std::vector<RunTrajectory> runs(3);
  const double mse[3][2] = {{0.3, 0.1}, {0.5, 0.2}, {0.4, 0.3}};
  for (int k = 0; k < 3; ++k)
    for (int t = 0; t < (k == 2 ? 1 : 2); ++t) {
      IterationRecord r;
      r.iteration = t;
      r.mse = mse[k][t];
      runs[std::size_t(k)].records.push_back(r);
    }
  const McSummary s = summarize(runs, {0.4});
  REQUIRE(s.size() == 2);
  CHECK(s.trials == std::vector<int>{3, 2});
  CHECK(s.mean[0] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(*s.std_error[0] == doctest::Approx(0.1 / std::sqrt(3.0)).epsilon(1e-14));
  CHECK(*s.z[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_FALSE(s.se_pred[1]);
  CHECK_FALSE(s.z[1]);
  CHECK(*s.fraction_within(3.0) == 1.0);

  const McSummary single = summarize({runs[0]}, {0.4, 0.1});
  CHECK_FALSE(single.std_error[0]);
  CHECK_FALSE(single.fraction_within(3.0));
}

TEST_CASE("Monte Carlo mean equals the per-trial mean") {
  const ExperimentConfig cfg = parse_config(base_config());
  const CompareResult res = compare_experiment(cfg, 2);
  REQUIRE(res.lm.size() == 4);
  for (std::size_t t = 0; t < res.lm_summary.size(); ++t) {
    double m = 0.0;
    for (const auto& r : res.lm) m += r.records[t].mse / 4.0;
    CHECK(std::abs(res.lm_summary.mean[t] - m) <= 1e-12 * m);
    CHECK(res.rel_gap[t] <= 1e-9);
  }
  CHECK(res.se.report->pass);
}

TEST_CASE("output directory precedence") {
  ExperimentConfig cfg = parse_config(base_config());
  ::setenv("LMOAMP_OUT_DIR", "/tmp/from_env", 1);
  CHECK(resolve_out_dir(std::nullopt, cfg) == "/tmp/from_env");
  cfg.out_dir = "rel";
  cfg.base_dir = "/cfg";
  CHECK(resolve_out_dir(std::nullopt, cfg) == "/cfg/rel");
  CHECK(resolve_out_dir(std::filesystem::path("cli"), cfg) == "cli");
  ::unsetenv("LMOAMP_OUT_DIR");
  cfg.out_dir.reset();
  CHECK(resolve_out_dir(std::nullopt, cfg) == "lmoamp_out");
}

TEST_CASE("parallel loop") {
  std::atomic<int> sum{0};
  parallel_for(100, 4, [&](int k) { sum += k; });
  CHECK(sum == 4950);
  CHECK_THROWS_WITH(parallel_for(10, 3,
                                 [](int k) {
                                   if (k == 7) throw std::runtime_error("seven");
                                   if (k == 4) throw std::runtime_error("four");
                                 }),
                    "four");
}
