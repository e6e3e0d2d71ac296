#pragma once

#include "tsne/rng.hpp"
#include "tsne/spectral.hpp"

#include <Eigen/QR>

#include <cstdint>
#include <vector>

namespace tsne {

/// Samples with optional cluster labels. `data` is a plain matrix so files
/// with fewer than three rows can still be loaded; wrap it in DataMatrix
/// before building affinities.
struct LabeledData {
  Matrix<double> data;
  std::vector<int> labels;  // empty, or n entries in [0, R)
  int R = 0;
  std::vector<double> pi;   // empty unless the generator knows the proportions

  Index n() const noexcept { return data.rows(); }
  bool has_labels() const noexcept { return !labels.empty(); }

  ComponentLabels components() const {
    if (labels.empty()) return ComponentLabels::from_tags(std::vector<int>(static_cast<std::size_t>(n()), 0));
    return ComponentLabels::from_tags(labels);
  }

  void validate() const {
    if (!labels.empty()) {
      if (static_cast<Index>(labels.size()) != n()) throw std::invalid_argument("LabeledData: label count differs from n");
      if (R < 1) throw std::invalid_argument("LabeledData: R must be at least 1");
      for (int l : labels)
        if (l < 0 || l >= R) throw std::invalid_argument("LabeledData: label out of range");
    }
    if (!pi.empty()) {
      double s = 0;
      for (double v : pi) s += v;
      if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("LabeledData: proportions do not sum to 1");
    }
  }
};

namespace detail {

inline void check_proportions(const std::vector<double>& pi) {
  if (pi.empty()) throw std::invalid_argument("proportions must be non-empty");
  double s = 0;
  for (double v : pi) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("proportions must be non-negative");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("proportions must sum to 1");
}

// Inverse-CDF draw from pi; falls back to the last positive class when
// rounding leaves the cumulative sum just below u.
inline int draw_label(const std::vector<double>& pi, double u) {
  double acc = 0;
  int last = 0;
  for (std::size_t r = 0; r < pi.size(); ++r) {
    if (pi[r] <= 0.0) continue;
    last = static_cast<int>(r);
    acc += pi[r];
    if (u < acc) return last;
  }
  return last;
}

inline std::vector<int> draw_labels(Index n, const std::vector<double>& pi, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  std::vector<int> z(static_cast<std::size_t>(n));
  for (auto& v : z) v = draw_label(pi, rng.uniform());
  return z;
}

}  // namespace detail

/// R means in R^p with all pairwise distances equal to rho: a regular simplex
/// in the first R-1 coordinates under a Haar-random rotation.
inline std::vector<Vector<double>> gmm_means(int R, Index p, double rho, std::uint64_t seed) {
  if (R < 1) throw std::invalid_argument("gmm_means: R must be at least 1");
  if (p < 1) throw std::invalid_argument("gmm_means: p must be at least 1");
  if (!(rho >= 0.0)) throw std::invalid_argument("gmm_means: rho must be non-negative");
  if (R - 1 > p) throw std::invalid_argument("gmm_means: R-1 > p, the simplex does not fit");

  // Helmert rows span the complement of the constant vector, so vertex j has
  // coordinates H(1..R-1, j) and unit vectors e_i - e_j map to length sqrt(2).
  Matrix<double> vertices = Matrix<double>::Zero(p, R);
  for (int k = 1; k < R; ++k) {
    const double c = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int j = 0; j < k; ++j) vertices(k - 1, j) = c;
    vertices(k - 1, k) = -k * c;
  }
  vertices *= rho / std::sqrt(2.0);

  CounterRng rng(seed, 0);
  Matrix<double> g(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix<double>> qr(g);
  Matrix<double> q = qr.householderQ();
  const Matrix<double> r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j)
    if (r(j, j) < 0) q.col(j) *= -1.0;

  const Matrix<double> rotated = q * vertices;
  std::vector<Vector<double>> means;
  for (int j = 0; j < R; ++j) means.emplace_back(rotated.col(j));
  return means;
}

/// Covariance of the mixture components.
struct CovarianceSpec {
  enum class Kind { ScaledIdentity, Diagonal, Full };
  Kind kind = Kind::ScaledIdentity;
  double scale = 1.0;
  Vector<double> diagonal;
  Matrix<double> full;

  static CovarianceSpec identity(double s = 1.0) { return {Kind::ScaledIdentity, s, {}, {}}; }
  static CovarianceSpec diag(Vector<double> d) { return {Kind::Diagonal, 1.0, std::move(d), {}}; }
  static CovarianceSpec dense(Matrix<double> m) { return {Kind::Full, 1.0, {}, std::move(m)}; }
};

namespace detail {

constexpr double kPsdTolerance = 1e-10;

inline double checked_sqrt(double v) {
  if (v < -kPsdTolerance) throw std::invalid_argument("covariance is not positive semidefinite");
  return std::sqrt(std::max(v, 0.0));
}

// Symmetric square root of a dense covariance, or the entrywise root of a diagonal one.
inline Matrix<double> covariance_root(const CovarianceSpec& s, Index p) {
  switch (s.kind) {
    case CovarianceSpec::Kind::ScaledIdentity:
      return Matrix<double>::Identity(p, p) * checked_sqrt(s.scale);
    case CovarianceSpec::Kind::Diagonal: {
      if (s.diagonal.size() != p) throw std::invalid_argument("covariance diagonal has the wrong length");
      Vector<double> d(p);
      for (Index i = 0; i < p; ++i) d(i) = checked_sqrt(s.diagonal(i));
      return d.asDiagonal();
    }
    case CovarianceSpec::Kind::Full: {
      if (s.full.rows() != p || s.full.cols() != p) throw std::invalid_argument("covariance matrix has the wrong shape");
      if (p == 1) return Matrix<double>::Constant(1, 1, checked_sqrt(s.full(0, 0)));
      const SpectralDecomp<double> dec = eig_sym(SquareSym<double>(s.full));
      Vector<double> root(p);
      for (Index i = 0; i < p; ++i) root(i) = checked_sqrt(dec.eigenvalues(i));
      return dec.eigenvectors * root.asDiagonal() * dec.eigenvectors.transpose();
    }
  }
  throw std::invalid_argument("unknown covariance kind");
}

}  // namespace detail

/// X_i = mu_{z_i} + Sigma^{1/2} W_i with z_i ~ Multinomial(pi).
inline LabeledData gmm_sample(Index n, const std::vector<Vector<double>>& means, const CovarianceSpec& sigma,
                              const std::vector<double>& pi, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("gmm_sample: n must be positive");
  if (means.empty()) throw std::invalid_argument("gmm_sample: need at least one mean");
  detail::check_proportions(pi);
  if (pi.size() != means.size()) throw std::invalid_argument("gmm_sample: pi and means differ in length");
  const Index p = means.front().size();
  for (const auto& m : means)
    if (m.size() != p) throw std::invalid_argument("gmm_sample: means differ in dimension");
  const Matrix<double> root = detail::covariance_root(sigma, p);

  LabeledData out;
  out.R = static_cast<int>(means.size());
  out.pi = pi;
  out.labels = detail::draw_labels(n, pi, seed);
  CounterRng noise(seed, 1);
  Vector<double> w(p);
  out.data.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) w(j) = noise.normal();
    out.data.row(i) = (means[static_cast<std::size_t>(out.labels[i])] + root * w).transpose();
  }
  return out;
}

/// X_i = (rho_{z_i} + xi_i) u_i with u_i uniform on the unit sphere and xi_i ~ N(0, sigma^2).
inline LabeledData nested_spheres(Index n, Index p, const std::vector<double>& radii, double sigma,
                                  const std::vector<double>& pi, std::uint64_t seed) {
  if (n < 1 || p < 1) throw std::invalid_argument("nested_spheres: n and p must be positive");
  if (radii.empty()) throw std::invalid_argument("nested_spheres: need at least one radius");
  for (std::size_t r = 0; r < radii.size(); ++r) {
    if (!(radii[r] > 0.0)) throw std::invalid_argument("nested_spheres: radii must be positive");
    if (r > 0 && !(radii[r] > radii[r - 1])) throw std::invalid_argument("nested_spheres: radii must be strictly increasing");
  }
  if (!(sigma >= 0.0)) throw std::invalid_argument("nested_spheres: sigma must be non-negative");
  detail::check_proportions(pi);
  if (pi.size() != radii.size()) throw std::invalid_argument("nested_spheres: pi and radii differ in length");

  LabeledData out;
  out.R = static_cast<int>(radii.size());
  out.pi = pi;
  out.labels = detail::draw_labels(n, pi, seed);
  CounterRng dirs(seed, 1), radial(seed, 2);
  Vector<double> u(p);
  out.data.resize(n, p);
  for (Index i = 0; i < n; ++i) {
    double norm = 0;
    do {
      for (Index j = 0; j < p; ++j) u(j) = dirs.normal();
      norm = u.norm();
    } while (norm == 0.0);
    const double xi = sigma * radial.normal();
    out.data.row(i) = ((radii[static_cast<std::size_t>(out.labels[i])] + xi) / norm) * u.transpose();
  }
  return out;
}

struct GmmPreset {
  Index n = 1500;
  Index p = 100;
  double rho2 = 100.0;  // squared minimum mean separation
  std::vector<double> pi{0.1, 0.1, 0.1, 0.15, 0.25, 0.3};
  double noise_scale = 1.0;
};

struct SpheresPreset {
  Index n = 1500;
  Index p = 50;
  std::vector<double> radii{10.0, 25.0, 50.0};
  double sigma = 1.0;
  std::vector<double> pi{0.17, 0.33, 0.5};
};

/// Means and samples draw from separate seeds derived from `seed`.
inline LabeledData make_gmm(const GmmPreset& g, std::uint64_t seed) {
  const auto means = gmm_means(static_cast<int>(g.pi.size()), g.p, std::sqrt(g.rho2), seed ^ 0x5eedULL);
  return gmm_sample(g.n, means, CovarianceSpec::identity(g.noise_scale), g.pi, seed);
}

inline LabeledData make_spheres(const SpheresPreset& s, std::uint64_t seed) {
  return nested_spheres(s.n, s.p, s.radii, s.sigma, s.pi, seed);
}

}  // namespace tsne
