#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"
#include "tsne/datagen.hpp"
#include "tsne/diagnostics.hpp"
#include "tsne/theory.hpp"

using namespace tsne;

namespace {

AffinityP<double> random_p(Index n, std::uint64_t seed, double tau2 = 2.0) {
  const DataMatrix<double> x(testing_support::normal_matrix(n, 4, seed));
  return affinity_from_data(x, Eigen::VectorXd::Constant(n, tau2).eval());
}

AffinityP<double> block_p(const std::vector<Index>& sizes, std::uint64_t seed) {
  Eigen::MatrixXd m = testing_support::block_adjacency(sizes, seed).matrix();
  m /= m.sum();
  return AffinityP<double>(SquareSym<double>(m));
}

Eigen::MatrixXd surrogate_operator(const AffinityP<double>& p, double alpha) {
  const Index n = p.size();
  Eigen::MatrixXd a = alpha * p.matrix();
  a.array() -= 1.0 / (n * (n - 1.0));
  a.diagonal().setZero();
  Eigen::MatrixXd l = -a;
  l.diagonal() = a.colwise().sum();
  return l;
}

// exp(-t G) y0 by the Taylor series, no eigendecomposition.
Coords<double> series_flow(const Eigen::MatrixXd& g, const Coords<double>& y0, double t, int terms = 60) {
  Coords<double> term = y0, sum = y0;
  for (int k = 1; k <= terms; ++k) {
    term = (-t / k) * (g * term);
    sum += term;
  }
  return sum;
}

Coords<double> constant_coords(Index n) { return Coords<double>::Constant(n, 2, 1.0 / std::sqrt(double(n))); }

}  // namespace

TEST_CASE("theory schedule") {
  CHECK(theory_tuning(1600, 0.5).K0 == 54);
  CHECK(theory_tuning(1500, 0.5).K0 == 53);
  const TuningParams t = theory_tuning(1600, 2.0 / 3.0);
  CHECK(t.alpha * t.h == doctest::Approx(1600.0).epsilon(1e-13));
  CHECK(t.alpha == doctest::Approx(std::pow(1600.0, 1.0 / 3.0)));
  CHECK(t.h == t.h_prime);
  CHECK(t.sigma_n == doctest::Approx(std::pow(std::log(1600.0), -2)));
  CHECK(t.K1 == 1000 - 54);
  CHECK(theory_tuning(1600, 0.5, 30.0, 0.25).alpha == doctest::Approx(10.0));
  CHECK_THROWS_AS(theory_tuning(9, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(theory_tuning(100, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(theory_tuning(100, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(theory_tuning(100, 0.5, 30.0, 0.0), std::invalid_argument);
}

TEST_CASE("early-stop budgets") {
  CHECK(early_stop_budgets(1600) == std::array<long, 3>{54, 137, 253});
  CHECK(early_stop_budgets(600) == std::array<long, 3>{40, 71, 121});
}

TEST_CASE("stable gamma caps h lambda_n under the schedule") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Index n = 60;
    const AffinityP<double> p = random_p(n, seed, 0.5);
    const double g = stable_gamma(p, 0.9);
    const TuningParams t = theory_tuning(n, 0.5, 30.0, g);
    const double top = t.h * eigenvalues_sym(laplacian(SquareSym<double>(t.alpha * p.matrix())))(n - 1);
    CHECK(g <= 1.0);
    CHECK(top <= 0.9 + 1e-12);
    if (g < 1.0) CHECK(top == doctest::Approx(0.9));
  }
  CHECK(stable_gamma(random_p(20, 1), 1e9) == 1.0);
  CHECK_THROWS_AS(stable_gamma(random_p(20, 1), 0.0), std::invalid_argument);
}

TEST_CASE("power surrogate") {
  const AffinityP<double> p = random_p(12, 3);
  const Coords<double> y0 = testing_support::normal_matrix(12, 2, 4);
  CHECK(power_surrogate(p.sym(), 5.0, 2.0, y0, 0) == y0);

  const Coords<double> c = constant_coords(12);
  CHECK((power_surrogate(p.sym(), 5.0, 2.0, c, 25) - c).cwiseAbs().maxCoeff() <= 1e-14);

  const Eigen::MatrixXd g = Eigen::MatrixXd::Identity(12, 12) - 2.0 * surrogate_operator(p, 5.0);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(12, 12);
  for (int i = 0; i < 7; ++i) power = power * g;
  CHECK((power_surrogate(p.sym(), 5.0, 2.0, y0, 7) - power * y0).cwiseAbs().maxCoeff() <= 1e-10);

  const auto path = power_surrogate_path(p.sym(), 5.0, 2.0, y0, 7);
  CHECK(path.size() == 8);
  CHECK(path.back() == power_surrogate(p.sym(), 5.0, 2.0, y0, 7));
  CHECK_THROWS_AS(power_surrogate(p.sym(), 5.0, 2.0, y0, -1), std::invalid_argument);
}

TEST_CASE("surrogate laplacian matches its definition") {
  const AffinityP<double> p = random_p(9, 2);
  CHECK((surrogate_laplacian(p.sym(), 3.0).matrix() - surrogate_operator(p, 3.0)).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("gradient flow") {
  const AffinityP<double> p = random_p(10, 5);
  const Coords<double> y0 = testing_support::normal_matrix(10, 2, 6);
  CHECK((gradient_flow(p.sym(), 4.0, y0, 0.0) - y0).cwiseAbs().maxCoeff() <= 1e-12);
  const Coords<double> c = constant_coords(10);
  CHECK((gradient_flow(p.sym(), 4.0, c, 3.0) - c).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((gradient_flow(p.sym(), 4.0, y0, 0.5) - series_flow(surrogate_operator(p, 4.0), y0, 0.5)).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(gradient_flow(p.sym(), 4.0, y0, -1.0), std::invalid_argument);
}

TEST_CASE("gradient flow matches the series on random small instances") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Index n = 3 + static_cast<Index>(seed % 13);
    const AffinityP<double> p = random_p(n, seed);
    const double alpha = 1.0 + static_cast<double>(seed % 7);
    const double t = 0.1 * static_cast<double>(1 + seed % 9);
    const Coords<double> y0 = testing_support::normal_matrix(n, 2, seed + 30);
    CHECK((gradient_flow(p.sym(), alpha, y0, t) - series_flow(surrogate_operator(p, alpha), y0, t)).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("gradient flow on a degenerate null space") {
  const AffinityP<double> p = block_p({4, 5, 3}, 2);
  const Coords<double> y0 = testing_support::normal_matrix(12, 2, 3);
  CHECK((gradient_flow(p.sym(), 6.0, y0, 1.5) - series_flow(surrogate_operator(p, 6.0), y0, 1.5)).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("regularization profile") {
  const AffinityP<double> p = random_p(14, 8);
  const Coords<double> y0 = testing_support::normal_matrix(14, 2, 9);
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0, 4.0};
  const double alpha = 3.0;
  const RegularizationProfile<double> prof = regularization_profile(p.sym(), alpha, y0, grid);
  const FlowBasis<double> basis = flow_basis(p.sym());
  const Coords<double> proj = basis.u.transpose() * y0;

  for (int l = 0; l < 2; ++l)
    for (std::size_t ti = 0; ti < grid.size(); ++ti) {
      CHECK(prof.coefficients[l](static_cast<Index>(ti), 0) == doctest::Approx(proj(0, l)).epsilon(1e-14));
      for (Index i = 0; i < 14; ++i) {
        const double rate = i == 0 ? 0.0 : alpha * basis.lambda(i) - 1.0 / 13.0;
        CHECK(std::abs(prof.coefficients[l](static_cast<Index>(ti), i) - std::exp(-grid[ti] * rate) * proj(i, l)) <= 1e-10);
      }
    }
  for (Index i = 1; i < 14; ++i)
    for (int l = 0; l < 2; ++l)
      for (std::size_t ti = 1; ti < grid.size(); ++ti) {
        const double prev = std::abs(prof.coefficients[l](static_cast<Index>(ti - 1), i));
        const double cur = std::abs(prof.coefficients[l](static_cast<Index>(ti), i));
        if (prof.rates(i) > 0) CHECK(cur <= prev);
        if (prof.rates(i) < 0) CHECK(cur >= prev);
      }

  // Tune alpha so that mode 3 sits exactly at the neutral rate.
  const double neutral = 1.0 / (13.0 * basis.lambda(3));
  const RegularizationProfile<double> flat = regularization_profile(p.sym(), neutral, y0, grid);
  for (std::size_t ti = 0; ti < grid.size(); ++ti)
    CHECK(flat.coefficients[0](static_cast<Index>(ti), 3) == doctest::Approx(proj(3, 0)).epsilon(1e-12));

  CHECK_THROWS_AS(regularization_profile(p.sym(), alpha, y0, {1.0, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(regularization_profile(p.sym(), alpha, y0, {-1.0}), std::invalid_argument);
}

TEST_CASE("null space limit") {
  const AffinityP<double> p = block_p({2, 3}, 1);
  const ComponentLabels lab = ComponentLabels::from_tags({0, 0, 1, 1, 1});
  Coords<double> y0(5, 2);
  y0 << 1, 5, 2, 4, 3, 3, 4, 2, 5, 1;
  const NullSpaceLimit<double> lim = null_space_limit(p.sym(), lab, y0);
  CHECK(lim.centers.centers(0, 0) == doctest::Approx(1.5));
  CHECK(lim.centers.centers(1, 0) == doctest::Approx(4.0));
  const Eigen::VectorXd expect = (Eigen::VectorXd(5) << 1.5, 1.5, 4, 4, 4).finished();
  CHECK((lim.projected.col(0) - expect).cwiseAbs().maxCoeff() <= 1e-14);

  // Blockwise constant input is its own projection.
  CHECK((null_space_limit(p.sym(), lab, lim.projected).projected - lim.projected).cwiseAbs().maxCoeff() <= 1e-14);

  // One component projects onto the mean.
  const AffinityP<double> one = random_p(6, 2);
  const Coords<double> y = testing_support::normal_matrix(6, 2, 5);
  const NullSpaceLimit<double> m = null_space_limit(one.sym(), ComponentLabels::from_tags(std::vector<int>(6, 3)), y);
  for (Index i = 0; i < 6; ++i) CHECK(m.projected(i, 1) == doctest::Approx(y.col(1).mean()));

  CHECK_THROWS_AS(null_space_limit(p.sym(), ComponentLabels::from_tags({0, 1, 1, 1, 1}), y0), std::invalid_argument);
}

TEST_CASE("limit centers agree with the indicator projection formula") {
  const std::vector<Index> sizes{7, 3, 11};
  const ComponentLabels lab = ComponentLabels::from_tags(testing_support::block_tags(sizes));
  const Coords<double> y0 = testing_support::normal_matrix(21, 2, 12);
  const LimitCenters<double> c = limit_centers(lab, y0);
  const Eigen::MatrixXd theta = indicator_basis<double>(lab);
  for (int r = 0; r < 3; ++r)
    for (int l = 0; l < 2; ++l) {
      const double z = theta.col(r).dot(y0.col(l)) / std::sqrt(double(sizes[r]));
      CHECK(std::abs(c.centers(r, l) - z) <= 1e-12);
    }
}

TEST_CASE("repulsion forces") {
  const AffinityP<double> p = block_p({3, 4}, 5);
  const ComponentLabels lab = ComponentLabels::from_tags({0, 0, 0, 1, 1, 1, 1});
  Coords<double> y = testing_support::normal_matrix(7, 2, 13) * 0.1;
  // Put point 0 on the mean of cluster 1.
  y.row(0) = y.bottomRows(4).colwise().mean();
  const ForceDecomposition<double> f = repulsion_forces(p, y, lab, 3.0);
  CHECK(f.forces[1].row(0).norm() <= 1e-15);
  CHECK(f.forces[0].row(0).norm() == 0.0);
  CHECK(f.identity_residual() <= 1e-15);
  const EmbeddingState<double> st{y, Stage::Embedding, 0};
  CHECK((f.displacement - (embed_step(st, p, 3.0).coords - y)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("repulsion of two collapsed clusters points away from the other cluster") {
  const AffinityP<double> p = block_p({2, 3}, 6);
  const ComponentLabels lab = ComponentLabels::from_tags({0, 0, 1, 1, 1});
  Coords<double> y(5, 2);
  y << 0.1, 0.2, 0.1, 0.2, -0.3, 0.05, -0.3, 0.05, -0.3, 0.05;
  const double hp = 7.0;
  const ForceDecomposition<double> f = repulsion_forces(p, y, lab, hp);
  const Eigen::RowVector2d a = y.row(0), b = y.row(2);
  CHECK((f.forces[1].row(0) - hp * 3.0 / 20.0 * (a - b)).norm() <= 1e-15);
  CHECK((f.forces[0].row(2) - hp * 2.0 / 20.0 * (b - a)).norm() <= 1e-15);
  CHECK(f.forces[1].row(0).dot(a - b) > 0);
}

TEST_CASE("force decomposition identity holds on random states") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const AffinityP<double> p = random_p(20, seed);
    std::vector<int> tags;
    for (int i = 0; i < 20; ++i) tags.push_back(i % 3);
    const ForceDecomposition<double> f =
        repulsion_forces(p, Coords<double>(testing_support::normal_matrix(20, 2, seed + 7)), ComponentLabels::from_tags(tags), 50.0);
    CHECK(f.identity_residual() <= 1e-12);
  }
}

TEST_CASE("repulsion dominates the remainder right after exaggeration on strongly clustered data") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto means = gmm_means(3, 10, 20.0, seed);
    const LabeledData d = gmm_sample(60, means, CovarianceSpec::identity(), {1 / 3., 1 / 3., 1 / 3.}, seed);
    const DataMatrix<double> x(d.data);
    const AffinityP<double> p = affinity_from_data(x, 10.0);
    TuningParams t = theory_tuning(60, 0.5, 10.0, stable_gamma(p));
    t.K1 = 1;
    t.seed = seed;
    const TrajectoryLog<double> log = run(p, t);
    const auto fr = force_residual(log, p, d.components(), t.h_prime);
    REQUIRE(fr.size() == 1);
    CHECK(fr[0].k == t.K0);
    CHECK(fr[0].ratio < 0.2);
    CHECK(fr[0].identity_residual <= 1e-12);
  }
}
