#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "rootkgd/error.hpp"
#include "rootkgd/fault_features.hpp"

using namespace rootkgd;
using features::PcaModel;

namespace {

DataMatrix as_data(const Eigen::MatrixXd& x) {
  DataMatrix d;
  d.values = x;
  for (Eigen::Index j = 0; j < x.cols(); ++j) d.columns.push_back("c" + std::to_string(j));
  return d;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

Eigen::Index argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return i;
}

}  // namespace

TEST_CASE("two independent variables keep one component at r_pc 0.5") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(5000, 2);
  for (Eigen::Index i = 0; i < x.rows(); ++i) x.row(i) << z(rng), 3.0 + 5.0 * z(rng);
  const auto model = features::fit_pca(as_data(x), 0.5);
  CHECK(model.n_pc() == 1);
  CHECK(max_abs(model.proj_pc() + model.proj_res() - Eigen::MatrixXd::Identity(2, 2)) <= 1e-8);
}

TEST_CASE("loadings and eigenvalues match the Jacobi oracle") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::MatrixXd x = oracle::factor_data(rng, 300, 5, 2, 0.5);
    const auto model = features::fit_pca(as_data(x), 0.7);
    const oracle::ReferencePca ref(x, 0.7);
    CHECK(model.n_pc() == ref.k);
    CHECK(max_abs(model.mean() - ref.mean) <= 1e-10);
    CHECK(max_abs(model.stddev() - ref.sd) <= 1e-10);
    CHECK(max_abs(model.eigenvalues() - ref.values) <= 1e-9);
    for (Eigen::Index c = 0; c < 5; ++c) {
      const Eigen::VectorXd a = model.loadings().col(c);
      const Eigen::VectorXd b = ref.vectors.col(c);
      const double err = std::min((a - b).cwiseAbs().maxCoeff(), (a + b).cwiseAbs().maxCoeff());
      CHECK(err <= 1e-7);
    }
  }
}

TEST_CASE("sign convention: largest-magnitude loading entry is positive") {
  std::mt19937_64 rng(3);
  const auto model = features::fit_pca(as_data(oracle::factor_data(rng, 200, 8, 3, 0.3)), 0.9);
  for (Eigen::Index c = 0; c < model.n_vars(); ++c) {
    Eigen::Index r = 0;
    model.loadings().col(c).cwiseAbs().maxCoeff(&r);
    CHECK(model.loadings()(r, c) > 0.0);
  }
}

TEST_CASE("projection identities on random fits") {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> dim(3, 14);
  std::uniform_real_distribution<double> ratio(0.3, 0.99);
  for (int trial = 0; trial < 25; ++trial) {
    const int n = dim(rng);
    const Eigen::MatrixXd x = oracle::factor_data(rng, 150, n, 1 + n / 3, 0.4);
    const auto model = features::fit_pca(as_data(x), ratio(rng));
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
    const Eigen::MatrixXd& c = model.proj_pc();
    const Eigen::MatrixXd& ct = model.proj_res();
    CHECK(max_abs(c + ct - I) <= 1e-8);
    CHECK(max_abs(c * c - c) <= 1e-8);
    CHECK(max_abs(ct * ct - ct) <= 1e-8);
    const Eigen::MatrixXd p = model.loadings_principal();
    const Eigen::MatrixXd pt = model.loadings_residual();
    CHECK(max_abs(p.transpose() * p - Eigen::MatrixXd::Identity(p.cols(), p.cols())) <= 1e-8);
    CHECK(max_abs(pt.transpose() * pt - Eigen::MatrixXd::Identity(pt.cols(), pt.cols())) <= 1e-8);
    for (Eigen::Index i = 1; i < n; ++i) CHECK(model.eigenvalues()(i - 1) >= model.eigenvalues()(i));
    CHECK(model.eigenvalues().minCoeff() >= -1e-10);
    const Eigen::VectorXd v = Eigen::VectorXd::Random(n);
    CHECK(max_abs(c * v + ct * v - v) <= 1e-10);
  }
}

TEST_CASE("retained variance meets r_pc with the fewest components") {
  std::mt19937_64 rng(5);
  const Eigen::MatrixXd x = oracle::factor_data(rng, 400, 9, 3, 0.6);
  for (double r : {0.2, 0.5, 0.8, 0.95, 1.0}) {
    const auto model = features::fit_pca(as_data(x), r);
    const auto& ev = model.eigenvalues();
    CHECK(ev.head(model.n_pc()).sum() >= r * ev.sum() * (1 - 1e-12));
    if (model.n_pc() > 1) CHECK(ev.head(model.n_pc() - 1).sum() < r * ev.sum());
  }
}

TEST_CASE("SPE and T2 agree with the componentwise oracles") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd x = oracle::factor_data(rng, 250, 7, 2, 0.5);
    const auto model = features::fit_pca(as_data(x), 0.6);
    const oracle::ReferencePca ref(x, 0.6);
    Eigen::VectorXd sample(7);
    for (Eigen::Index j = 0; j < 7; ++j) sample(j) = ref.mean(j) + 2.0 * ref.sd(j) * z(rng);
    const auto zv = ref.z(sample);
    CHECK(std::abs(features::spe(model, sample) - ref.spe_z(zv)) <= 1e-10 * std::max(1.0, ref.spe_z(zv)));
    CHECK(std::abs(features::t2(model, sample) - ref.t2_z(zv)) <= 1e-10 * std::max(1.0, ref.t2_z(zv)));
  }
}

TEST_CASE("SPE and T2 special points") {
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd x = oracle::factor_data(rng, 300, 6, 2, 0.4);
  const auto model = features::fit_pca(as_data(x), 0.5);
  CHECK(features::spe(model, model.mean()) <= 1e-12);
  CHECK(features::t2(model, model.mean()) <= 1e-12);

  // A sample whose standardized form lies in the principal subspace.
  const Eigen::VectorXd in_span = model.loadings_principal() * Eigen::VectorXd::Ones(model.n_pc());
  const Eigen::VectorXd raw = model.mean() + model.stddev().cwiseProduct(in_span);
  CHECK(features::spe(model, raw) <= 1e-9);

  const Eigen::VectorXd p1 = model.loadings().col(0) * std::sqrt(model.eigenvalues()(0));
  CHECK(features::t2(model, model.mean() + model.stddev().cwiseProduct(p1)) == doctest::Approx(1.0).epsilon(1e-9));

  CHECK_THROWS_AS(features::spe(model, Eigen::VectorXd::Zero(5)), ValidationError);
  Eigen::VectorXd bad = model.mean();
  bad(2) = std::nan("");
  CHECK_THROWS_AS(features::spe(model, bad), ValidationError);
}

TEST_CASE("RBC equals the best single-coordinate reconstruction gain") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<int> dim(4, 12);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim(rng);
    const Eigen::MatrixXd x = oracle::factor_data(rng, 200, n, 1 + n / 3, 0.5);
    const auto model = features::fit_pca(as_data(x), 0.75);
    const oracle::ReferencePca ref(x, 0.75);
    REQUIRE(model.n_pc() == ref.k);
    Eigen::VectorXd sample(n);
    for (Eigen::Index j = 0; j < n; ++j) sample(j) = ref.mean(j) + 3.0 * ref.sd(j) * z(rng);
    const auto zv = ref.z(sample);
    const auto spe_rbc = features::rbc_spe(model, sample);
    const auto t2_rbc = features::rbc_t2(model, sample);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (model.proj_res()(i, i) >= 1e-6) {
        const double want = ref.reconstruction_gain(zv, i, false);
        CHECK(std::abs(spe_rbc.scores(i) - want) <= 1e-8 * std::abs(want));
      }
      if (model.d_matrix()(i, i) >= 1e-6) {
        const double want = ref.reconstruction_gain(zv, i, true);
        CHECK(std::abs(t2_rbc.scores(i) - want) <= 1e-8 * std::abs(want));
      }
    }
  }
}

TEST_CASE("RBC of the mean sample is zero") {
  std::mt19937_64 rng(9);
  const Eigen::MatrixXd x = oracle::factor_data(rng, 100, 5, 2, 0.5);
  const auto model = features::fit_pca(as_data(x), 0.5);
  CHECK(features::rbc_spe(model, model.mean()).scores.cwiseAbs().maxCoeff() <= 1e-20);
  CHECK(features::rbc_t2(model, model.mean()).scores.cwiseAbs().maxCoeff() <= 1e-20);
}

TEST_CASE("a 10-sigma bias on one variable tops the SPE contributions") {
  std::mt19937_64 rng(10);
  int trials = 0, hits = 0;
  while (trials < 60) {
    oracle::FactorModel gen(rng, 8, 3, 0.4);
    const Eigen::MatrixXd x = gen.sample(rng, 1000);
    const auto model = features::fit_pca(as_data(x), 0.8);
    const Eigen::Index j = std::uniform_int_distribution<Eigen::Index>(0, 7)(rng);
    if (model.proj_res()(j, j) < 0.05) continue;
    ++trials;
    Eigen::VectorXd sample = gen.sample(rng, 1).row(0).transpose();
    sample(j) += 10.0 * model.stddev()(j);
    hits += argmax(features::rbc_spe(model, sample).scores) == j;
  }
  CHECK(hits >= 57);
}

TEST_CASE("contribution rate examples") {
  std::mt19937_64 rng(11);
  const Eigen::MatrixXd x = oracle::factor_data(rng, 400, 6, 2, 0.4);
  const auto model = features::fit_pca(as_data(x), 0.5);

  SUBCASE("rates sum to one and are nonnegative, for every option") {
    const DataMatrix window = as_data(oracle::factor_data(rng, 30, 6, 2, 0.4));
    for (auto stat : {features::RbcStatistic::Spe, features::RbcStatistic::T2}) {
      for (auto order : {features::NormalizationOrder::PerSample, features::NormalizationOrder::PostAverage}) {
        const auto rate = features::contribution_rate(model, window, {stat, order});
        CHECK(rate.scores.sum() == doctest::Approx(1.0).epsilon(1e-9));
        CHECK(rate.scores.minCoeff() >= 0.0);
      }
    }
  }

  SUBCASE("proportional rows give that row's normalized vector") {
    Eigen::VectorXd dz = Eigen::VectorXd::Zero(6);
    dz(0) = 1.0;
    dz(3) = -0.5;
    DataMatrix window = as_data(Eigen::MatrixXd(2, 6));
    window.values.row(0) = (model.mean() + model.stddev().cwiseProduct(dz)).transpose();
    window.values.row(1) = (model.mean() + model.stddev().cwiseProduct(4.0 * dz)).transpose();
    const auto rate = features::contribution_rate(model, window);
    const auto raw = features::rbc_spe(model, window.values.row(0).transpose());
    const Eigen::VectorXd expect = raw.scores / raw.scores.sum();
    CHECK(max_abs(rate.scores - expect) <= 1e-12);
  }

  SUBCASE("a one-row window whose raw RBC is one-hot yields that one-hot rate") {
    // Identity loadings make the residual subspace axis-aligned, so a
    // deviation on a residual axis has a one-hot RBC.
    Eigen::MatrixXd loads = Eigen::MatrixXd::Identity(4, 4);
    auto diag = PcaModel::from_parts({"a", "b", "c", "d"}, Eigen::VectorXd::Zero(4), Eigen::VectorXd::Ones(4),
                                     Eigen::Vector4d(4, 3, 2, 1), loads, 2, 0.7);
    DataMatrix window;
    window.columns = {"a", "b", "c", "d"};
    window.values = Eigen::MatrixXd::Zero(1, 4);
    window.values(0, 2) = 5.0;
    const auto rate = features::contribution_rate(diag, window);
    CHECK(rate.scores == Eigen::Vector4d(0, 0, 1, 0));
  }

  SUBCASE("errors") {
    DataMatrix empty = as_data(Eigen::MatrixXd(0, 6));
    CHECK_THROWS_AS(features::contribution_rate(model, empty), ValidationError);
    DataMatrix at_mean = as_data(model.mean().transpose());
    CHECK_THROWS_AS(features::contribution_rate(model, at_mean), ValidationError);
    DataMatrix renamed = as_data(oracle::factor_data(rng, 3, 6, 2, 0.4));
    renamed.columns[0] = "other";
    CHECK_THROWS_AS(features::contribution_rate(model, renamed), ValidationError);
  }
}

TEST_CASE("contribution rate is permutation-equivariant") {
  std::mt19937_64 rng(12);
  const Eigen::MatrixXd x = oracle::factor_data(rng, 500, 7, 2, 0.4);
  const Eigen::MatrixXd w = oracle::factor_data(rng, 40, 7, 2, 0.4);
  std::vector<int> perm(7);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Eigen::MatrixXd xp(x.rows(), 7), wp(w.rows(), 7);
  for (int j = 0; j < 7; ++j) {
    xp.col(j) = x.col(perm[j]);
    wp.col(j) = w.col(perm[j]);
  }
  const auto base = features::contribution_rate(features::fit_pca(as_data(x), 0.6), as_data(w));
  const auto permuted = features::contribution_rate(features::fit_pca(as_data(xp), 0.6), as_data(wp));
  for (int j = 0; j < 7; ++j) CHECK(permuted.scores(j) == doctest::Approx(base.scores(perm[j])).epsilon(1e-9));
}

TEST_CASE("fit is deterministic") {
  std::mt19937_64 rng(13);
  const auto d = as_data(oracle::factor_data(rng, 200, 6, 2, 0.4));
  const auto a = features::fit_pca(d, 0.5);
  const auto b = features::fit_pca(d, 0.5);
  CHECK(a.loadings() == b.loadings());
  CHECK(a.eigenvalues() == b.eigenvalues());
}

TEST_CASE("fit rejects degenerate data") {
  CHECK_THROWS_AS(features::fit_pca(as_data(Eigen::MatrixXd::Ones(10, 3)), 0.5), ValidationError);
  CHECK_THROWS_AS(features::fit_pca(as_data(Eigen::MatrixXd::Random(1, 3)), 0.5), ValidationError);
  CHECK_THROWS_AS(features::fit_pca(as_data(Eigen::MatrixXd::Random(10, 1)), 0.5), ValidationError);
  CHECK_THROWS_AS(features::fit_pca(as_data(Eigen::MatrixXd::Random(10, 3)), 0.0), ValidationError);
  CHECK_THROWS_AS(features::fit_pca(as_data(Eigen::MatrixXd::Random(10, 3)), 1.5), ValidationError);
}
