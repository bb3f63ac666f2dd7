#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

#include "sfflab/ensemble.hpp"
#include "sfflab/errors.hpp"

using namespace sfflab;

namespace {

EnsembleSpec small_goe_spec() {
  EnsembleSpec spec;
  spec.model = GoeModel{GoeParams{12, 0, 1.0}};
  spec.n_realizations = 6;
  spec.master_seed = 99;
  spec.evaluator = BglEvaluator{};
  spec.beta = 0.5;
  spec.gamma = 1e-3;
  spec.grid = TimeGrid{0.1, 100.0, 8, false};
  return spec;
}

std::string meta(const SffCurve& c, const std::string& key) {
  for (const auto& [k, v] : c.metadata)
    if (k == key) return v;
  return "";
}

}  // namespace

TEST_CASE("time grid spans its endpoints at the requested density") {
  const TimeGrid grid{0.1, 1000.0, 4, false};
  const std::vector<double> t = grid.times();
  REQUIRE(!t.empty());
  CHECK(t.front() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(t.back() == doctest::Approx(1000.0).epsilon(1e-15));
  // 4 decades at 4 points per decade: 16 intervals, 17 points.
  CHECK(t.size() == 17);
  for (std::size_t i = 1; i < t.size(); ++i) {
    CHECK(t[i] > t[i - 1]);
    // log-uniform spacing: constant ratio 10^(1/4)
    if (i + 1 < t.size())
      CHECK(t[i + 1] / t[i] == doctest::Approx(std::pow(10.0, 0.25)).epsilon(1e-12));
  }
}

TEST_CASE("time grid can prepend t = 0") {
  const TimeGrid grid{1.0, 10.0, 2, true};
  const std::vector<double> t = grid.times();
  CHECK(t.front() == 0.0);
  CHECK(t[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(t.back() == doctest::Approx(10.0).epsilon(1e-15));
}

TEST_CASE("time grid validation") {
  CHECK_THROWS_AS((TimeGrid{0.0, 10.0, 4, false}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((TimeGrid{1.0, 1.0, 4, false}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((TimeGrid{1.0, 10.0, 0, false}.validate()), std::invalid_argument);
  CHECK_NOTHROW((TimeGrid{1.0, 10.0, 1, true}.validate()));
}

TEST_CASE("reduction computes mean and sample standard error by column") {
  const std::vector<std::vector<double>> rows{{1.0, 0.0}, {2.0, 0.0}, {3.0, 0.0}};
  const auto [mean, se] = reduce_curves(rows);
  CHECK(mean[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(mean[1] == 0.0);
  // sample variance 1.0, stderr = sqrt(1/3)
  CHECK(se[0] == doctest::Approx(std::sqrt(1.0 / 3.0)).epsilon(1e-14));
  CHECK(se[1] == 0.0);

  const auto [m1, s1] = reduce_curves({{0.7, 0.3}});
  CHECK(m1[0] == 0.7);
  CHECK(s1[0] == 0.0);
}

TEST_CASE("ensemble curves are byte-identical for any worker count") {
  const EnsembleSpec spec = small_goe_spec();
  const SffCurve base = run_ensemble(spec, 1);
  for (int workers : {4, 8}) {
    const SffCurve c = run_ensemble(spec, workers);
    REQUIRE(c.mean.size() == base.mean.size());
    for (std::size_t i = 0; i < base.mean.size(); ++i) {
      CHECK(c.mean[i] == base.mean[i]);
      CHECK(c.stderr_[i] == base.stderr_[i]);
    }
    CHECK(c.metadata == base.metadata);
  }
}

TEST_CASE("ensemble output satisfies the fidelity-curve invariants") {
  const SffCurve c = run_ensemble(small_goe_spec(), 2);
  CHECK(c.n_realizations == 6);
  CHECK(c.n_failed == 0);
  REQUIRE(c.t.size() == c.mean.size());
  REQUIRE(c.t.size() == c.stderr_.size());
  for (std::size_t i = 0; i < c.mean.size(); ++i) {
    CHECK(c.mean[i] >= 0.0);
    CHECK(c.mean[i] <= 1.0);
    CHECK(c.stderr_[i] >= 0.0);
    CHECK(c.stderr_[i] <= 0.5);
  }
  CHECK(meta(c, "model") == "goe");
  CHECK(meta(c, "realizations") == "6");
  CHECK(meta(c, "seed") == "99");
  CHECK(meta(c, "evaluator") == "bgl");
  CHECK(meta(c, "failed-realizations") == "0");
}

TEST_CASE("gain/loss ensemble equals the delta = 2 power filter ensemble") {
  EnsembleSpec bgl = small_goe_spec();
  EnsembleSpec filt = bgl;
  filt.evaluator = FilteredEvaluator{PowerFilter{bgl.gamma, 2.0}};
  const SffCurve a = run_ensemble(bgl, 2);
  const SffCurve b = run_ensemble(filt, 2);
  for (std::size_t i = 0; i < a.mean.size(); ++i)
    CHECK(a.mean[i] == doctest::Approx(b.mean[i]).epsilon(1e-14));
}

TEST_CASE("gamma = 0 gain/loss ensemble is bitwise the unitary ensemble") {
  EnsembleSpec bgl = small_goe_spec();
  bgl.gamma = 0.0;
  EnsembleSpec uni = bgl;
  uni.evaluator = UnitaryEvaluator{};
  const SffCurve a = run_ensemble(bgl, 2);
  const SffCurve b = run_ensemble(uni, 2);
  for (std::size_t i = 0; i < a.mean.size(); ++i) {
    CHECK(a.mean[i] == b.mean[i]);
    CHECK(a.stderr_[i] == b.stderr_[i]);
  }
}

TEST_CASE("nonlinear integrator ensemble reproduces the closed form when X = H0") {
  EnsembleSpec closed;
  closed.model = GoeModel{GoeParams{8, 0, 1.0}};
  closed.n_realizations = 3;
  closed.master_seed = 7;
  closed.evaluator = BglEvaluator{};
  closed.beta = 1.0;
  closed.gamma = 0.05;
  closed.grid = TimeGrid{0.1, 10.0, 8, false};

  EnsembleSpec ode = closed;
  OdeEvaluator ev;
  ev.x_source = XSource::H0;
  ev.cfg.dt = 0.01;
  ode.evaluator = ev;

  const SffCurve a = run_ensemble(closed, 1);
  const SffCurve b = run_ensemble(ode, 1);
  for (std::size_t i = 0; i < a.mean.size(); ++i)
    CHECK(std::abs(a.mean[i] - b.mean[i]) <= 1e-6);
}

TEST_CASE("independent-X ensembles run and differ from the commuting case") {
  EnsembleSpec spec;
  spec.model = GoeWithXModel{GoeParams{8, 0, 1.0}};
  spec.n_realizations = 3;
  spec.master_seed = 7;
  OdeEvaluator ev;
  ev.x_source = XSource::Goe;
  ev.cfg.dt = 0.02;
  spec.evaluator = ev;
  spec.beta = 1.0;
  spec.gamma = 0.1;
  spec.grid = TimeGrid{0.1, 10.0, 4, false};
  const SffCurve indep = run_ensemble(spec, 1);

  EnsembleSpec comm = spec;
  OdeEvaluator ev2 = ev;
  ev2.x_source = XSource::H0;
  comm.evaluator = ev2;
  const SffCurve h0 = run_ensemble(comm, 1);

  double max_diff = 0.0;
  for (std::size_t i = 0; i < indep.mean.size(); ++i) {
    CHECK(indep.mean[i] >= 0.0);
    CHECK(indep.mean[i] <= 1.0);
    max_diff = std::max(max_diff, std::abs(indep.mean[i] - h0.mean[i]));
  }
  CHECK(max_diff > 1e-4);
}

TEST_CASE("requested saturation reference is measured and recorded") {
  EnsembleSpec spec = small_goe_spec();
  spec.beta = 0.0;
  spec.plateau_ref = PlateauRefRequest{PlateauMode::Unitary, 1e-10};
  const SffCurve c = run_ensemble(spec, 2);
  // GOE spectra carry no degeneracies, so at beta = 0 the reference is 1/d.
  CHECK(c.plateau_ref == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
  CHECK(meta(c, "plateau-mode") == "unitary");
  CHECK(meta(c, "plateau-ref") != "");
}

TEST_CASE("spec validation rejects inconsistent ensembles") {
  EnsembleSpec spec = small_goe_spec();

  spec.n_realizations = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_goe_spec();

  spec.gamma = -1.0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_goe_spec();

  // Table filters cannot align across realizations with distinct spectra.
  spec.evaluator = FilteredEvaluator{TableFilter{{1.0, 1.0}}};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_goe_spec();

  // A power filter must carry the ensemble's own rate.
  spec.evaluator = FilteredEvaluator{PowerFilter{spec.gamma * 2.0, 2.0}};
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_goe_spec();

  // Independent X draws need the model that reserves a sub-stream for them.
  OdeEvaluator ev;
  ev.x_source = XSource::Goe;
  spec.evaluator = ev;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
}

TEST_CASE("a fully failing ensemble propagates the underlying error type") {
  EnsembleSpec spec = small_goe_spec();
  spec.evaluator = DephasingJumpsEvaluator{10};  // cap below dim = 12
  CHECK_THROWS_AS(run_ensemble(spec, 2), ResourceError);
}

TEST_CASE("worker autodetection honors the environment override") {
  setenv("SFFLAB_WORKERS", "3", 1);
  CHECK(default_worker_count() == 3);
  unsetenv("SFFLAB_WORKERS");
  CHECK(default_worker_count() >= 1);
}
