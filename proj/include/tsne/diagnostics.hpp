#pragma once

#include "tsne/theory.hpp"

#include <limits>
#include <vector>

namespace tsne {

/// Per-k surrogate deviation max_l |y_l^(k) - ytilde_l^(k)|_2 / |y_l^(0)|_2 over
/// the early-exaggeration snapshots. Iterations without a snapshot are listed
/// in `missing`.
struct DeviationSeries {
  std::vector<long> ks;
  std::vector<double> values;
  std::vector<long> missing;

  double sup() const {
    double s = 0.0;
    for (double v : values) s = std::max(s, v);
    return s;
  }
};

template <typename Scalar>
DeviationSeries surrogate_deviation(const TrajectoryLog<Scalar>& traj, const SquareSym<Scalar>& p, Scalar alpha, Scalar h) {
  const EmbeddingState<Scalar>* init = traj.snapshot_at(0);
  if (init == nullptr) throw std::invalid_argument("surrogate_deviation: trajectory has no initial snapshot");
  const Coords<Scalar>& y0 = init->coords;
  const Matrix<Scalar> g = surrogate_laplacian(p, alpha).matrix();
  Vector<Scalar> norms0 = y0.colwise().norm().transpose();
  DeviationSeries out;
  Coords<Scalar> ytilde = y0;
  for (long k = 0; k <= traj.K0; ++k) {
    if (k > 0) ytilde -= h * (g * ytilde);
    const EmbeddingState<Scalar>* snap = traj.snapshot_at(k);
    if (snap == nullptr) {
      out.missing.push_back(k);
      continue;
    }
    double worst = 0.0;
    for (int l = 0; l < 2; ++l)
      worst = std::max(worst, static_cast<double>((snap->coords.col(l) - ytilde.col(l)).norm() / norms0(l)));
    out.ks.push_back(k);
    out.values.push_back(worst);
  }
  return out;
}

/// |S_alpha - (alpha P - H_n)| / |alpha P - H_n| in spectral norm.
template <typename Scalar>
Ratio s_approx_error(const AffinityP<Scalar>& p, const Coords<Scalar>& y, Scalar alpha) {
  const Index n = p.size();
  const Matrix<Scalar> target = alpha * p.matrix() - h_matrix<Scalar>(n).matrix();
  const Matrix<Scalar> diff = s_matrix(p, y, alpha).matrix() - target;
  const Scalar den = spectral_norm(SquareSym<Scalar>(target));
  const Scalar num = spectral_norm(SquareSym<Scalar>::symmetrized(diff));
  return Ratio::of(static_cast<double>(num), static_cast<double>(den), 1e-300);
}

/// Largest entrywise excess of |S_ij(alpha) - alpha p_ij + 1/(n(n-1))| over
/// alpha p_ij eta + 2 eta / (n(n-1)(1-eta)); non-positive when the bound holds.
/// Requires eta = diam^2 < 1.
template <typename Scalar>
Scalar graph_bound_excess(const AffinityP<Scalar>& p, const Coords<Scalar>& y, Scalar alpha) {
  const Index n = p.size();
  const Scalar d = diameter(y);
  const Scalar eta = d * d;
  if (!(eta < 1)) throw std::invalid_argument("graph_bound_excess: requires diam^2 < 1");
  const Matrix<Scalar> s = s_matrix(p, y, alpha).matrix();
  const Scalar nn = Scalar(n) * Scalar(n - 1);
  Scalar worst = -std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) {
      if (i == j) continue;
      const Scalar lhs = std::abs(s(i, j) - alpha * p(i, j) + Scalar(1) / nn);
      const Scalar rhs = alpha * p(i, j) * eta + Scalar(2) * eta / (nn * (Scalar(1) - eta));
      worst = std::max(worst, lhs - rhs);
    }
  return worst;
}

/// max intra-cluster distance / min inter-cluster distance.
template <typename Scalar>
Ratio separation_ratio(const Coords<Scalar>& y, const ComponentLabels& labels) {
  if (labels.n() != y.rows()) throw std::invalid_argument("separation_ratio: labels do not cover n");
  Scalar intra = 0, inter = std::numeric_limits<Scalar>::infinity();
  for (Index j = 0; j < y.rows(); ++j)
    for (Index i = j + 1; i < y.rows(); ++i) {
      const Scalar d = (y.row(i) - y.row(j)).norm();
      if (labels.labels[i] == labels.labels[j]) intra = std::max(intra, d);
      else inter = std::min(inter, d);
    }
  if (!std::isfinite(inter)) throw std::invalid_argument("separation_ratio: needs at least two clusters");
  return Ratio::of(static_cast<double>(intra), static_cast<double>(inter));
}

/// Diameter ratios over the embedding stage and the detected end of the
/// amplification phase: the first k whose ratio stays below 1 + 1e-3 for 10
/// consecutive iterations.
struct AmplificationTrace {
  std::vector<long> ks;       // k such that ratio = diam(k+1) / diam(k)
  std::vector<Ratio> ratios;
  long phase_end = 0;         // amplification phase is [K0, phase_end)
  bool boundary_found = false;
};

constexpr double kPhaseRatioThreshold = 1e-3;
constexpr int kPhaseRun = 10;

template <typename Scalar>
AmplificationTrace amplification_trace(const TrajectoryLog<Scalar>& traj) {
  AmplificationTrace out;
  const long end = traj.K0 + traj.K1;
  if (static_cast<long>(traj.scalars.size()) != end + 1)
    throw std::invalid_argument("amplification_trace: trajectory scalars incomplete");
  for (long k = traj.K0; k < end; ++k) {
    out.ks.push_back(k);
    out.ratios.push_back(traj.scalars[static_cast<std::size_t>(k + 1)].diam_ratio);
  }
  out.phase_end = end;
  int run = 0;
  for (std::size_t i = 0; i < out.ratios.size(); ++i) {
    const Ratio& r = out.ratios[i];
    run = (!r.infinite && r.value < 1.0 + kPhaseRatioThreshold) ? run + 1 : 0;
    if (run == kPhaseRun) {
      out.phase_end = out.ks[i + 1 - kPhaseRun];
      out.boundary_found = true;
      break;
    }
  }
  return out;
}

/// Force-decomposition residual at one embedding-stage iteration.
struct ForceResidualPoint {
  long k = 0;
  double ratio = 0.0;             // max_i |eps_i| / min_{r != r0(i)} |f_ir|
  bool infinite = false;
  double identity_residual = 0.0;
};

/// Evaluated at every embedding-stage snapshot k in [K0, K0+K1) (or
/// [K0, k_end) when k_end >= 0).
template <typename Scalar>
std::vector<ForceResidualPoint> force_residual(const TrajectoryLog<Scalar>& traj, const AffinityP<Scalar>& p,
                                               const ComponentLabels& labels, Scalar h_prime, long k_end = -1) {
  if (k_end < 0) k_end = traj.K0 + traj.K1;
  std::vector<ForceResidualPoint> out;
  for (const auto& snap : traj.snapshots) {
    if (snap.k < traj.K0 || snap.k >= k_end) continue;
    ForceResidualPoint pt;
    pt.k = snap.k;
    if (h_prime == 0) {
      out.push_back(pt);
      continue;
    }
    const ForceDecomposition<Scalar> dec = repulsion_forces(p, snap.coords, labels, h_prime);
    pt.identity_residual = static_cast<double>(dec.identity_residual());
    double worst = 0.0;
    for (Index i = 0; i < snap.coords.rows(); ++i) {
      double fmin = std::numeric_limits<double>::infinity();
      for (int r = 0; r < labels.count; ++r)
        if (r != labels.labels[i]) fmin = std::min(fmin, static_cast<double>(dec.forces[r].row(i).norm()));
      if (!std::isfinite(fmin)) continue;  // a single cluster exerts no foreign force
      const double eps = static_cast<double>(dec.residual.row(i).norm());
      if (fmin == 0.0) {
        if (eps > 0.0) pt.infinite = true;
        continue;
      }
      worst = std::max(worst, eps / fmin);
    }
    pt.ratio = pt.infinite ? std::numeric_limits<double>::infinity() : worst;
    out.push_back(pt);
  }
  return out;
}

/// Eigengap condition kappa < h lambda_{R+1}(L(alpha P*)) <= h lambda_n(L(alpha P*)) < 1
/// together with the closeness of P to its block surrogate P*.
struct EigengapReport {
  int R = 0;                     // components of P*
  int nullity_P = 0;             // eigenvalues of L(P) below 1e-8
  double h_lambda_R1 = 0.0;      // h lambda_{R+1}(L(alpha P*))
  double h_lambda_n = 0.0;       // h lambda_n(L(alpha P*))
  double h_lambda_R1_P = 0.0;    // same two quantities for P itself
  double h_lambda_n_P = 0.0;
  double kappa = 0.0;
  bool condition_holds = false;
  double offblock_norm = 0.0;    // |L(P* - P)|
  Ratio stop_budget;             // 1 / (h alpha |L(P* - P)|)
  double R_n = 0.0;              // cumulative approximation error, with y0 bounded by sigma_n
};

template <typename Scalar>
EigengapReport eigengap_report(const AffinityP<Scalar>& p, const ComponentLabels& labels, Scalar alpha, Scalar h,
                               long K0, Scalar sigma_n, Scalar kappa = 0) {
  const Index n = p.size();
  const SquareSym<Scalar> pstar = block_restrict(p.sym(), labels);
  EigengapReport rep;
  rep.kappa = static_cast<double>(kappa);
  rep.R = connected_components(pstar).count;

  const Vector<Scalar> ev_star = eigenvalues_sym(laplacian(SquareSym<Scalar>(alpha * pstar.matrix())));
  const Vector<Scalar> ev_p = eigenvalues_sym(laplacian(SquareSym<Scalar>(alpha * p.matrix())));
  const Index r1 = std::min<Index>(rep.R, n - 1);
  rep.h_lambda_R1 = static_cast<double>(h * ev_star(r1));
  rep.h_lambda_n = static_cast<double>(h * ev_star(n - 1));
  rep.h_lambda_R1_P = static_cast<double>(h * ev_p(r1));
  rep.h_lambda_n_P = static_cast<double>(h * ev_p(n - 1));
  for (Index i = 0; i < n; ++i)
    if (ev_p(i) / alpha < Scalar(1e-8)) ++rep.nullity_P;
  rep.condition_holds = rep.h_lambda_R1 > rep.kappa && rep.h_lambda_n < 1.0;

  const SquareSym<Scalar> off(pstar.matrix() - p.matrix());
  rep.offblock_norm = static_cast<double>(spectral_norm(laplacian(off)));
  rep.stop_budget = Ratio::of(1.0, static_cast<double>(h * alpha) * rep.offblock_norm);

  const double kap = std::clamp(rep.h_lambda_R1, 0.0, 1.0);
  const double pinf = static_cast<double>(p.matrix().cwiseAbs().maxCoeff());
  const double dn = static_cast<double>(n), s = static_cast<double>(sigma_n);
  rep.R_n = std::pow(1.0 - kap, static_cast<double>(K0)) +
            static_cast<double>(h) * static_cast<double>(K0) *
                ((static_cast<double>(alpha) * dn * pinf + 1.0 / dn) * s * s +
                 static_cast<double>(alpha) * rep.offblock_norm);
  return rep;
}

/// Euler iterates of the surrogate against the exact flow on the grid t = kh.
struct EulerFlowGap {
  double measured = 0.0;  // sup_{k <= T/h} max_l |ytilde_l^(k) - Y_l(kh)| / |Y_l(kh)|
  double bound = 0.0;     // T h |L(alpha P - H_n)|^2
};

template <typename Scalar>
EulerFlowGap euler_flow_gap(const SquareSym<Scalar>& p, Scalar alpha, Scalar h, const Coords<Scalar>& y0, Scalar T) {
  if (!(T >= 0) || !(h > 0)) throw std::invalid_argument("euler_flow_gap: need T >= 0 and h > 0");
  const SquareSym<Scalar> g = surrogate_laplacian(p, alpha);
  const Scalar gnorm = spectral_norm(g);
  EulerFlowGap out;
  out.bound = static_cast<double>(T * h * gnorm * gnorm);
  const FlowBasis<Scalar> basis = flow_basis(p);
  const long steps = static_cast<long>(std::floor(T / h + Scalar(1e-9)));
  Coords<Scalar> ytilde = y0;
  for (long k = 1; k <= steps; ++k) {
    ytilde -= h * (g.matrix() * ytilde);
    const Coords<Scalar> exact = gradient_flow(basis, alpha, y0, h * Scalar(k));
    for (int l = 0; l < 2; ++l) {
      const Scalar den = exact.col(l).norm();
      if (den > 0) out.measured = std::max(out.measured, static_cast<double>((ytilde.col(l) - exact.col(l)).norm() / den));
    }
  }
  return out;
}

/// Strict diameter growth over the detected amplification phase, with the
/// increment measured against h' sigma_n / n^2.
struct ExpansionPoint {
  long k = 0;
  bool increased = false;
  double increment_ratio = 0.0;
};

template <typename Scalar>
std::vector<ExpansionPoint> expansion_check(const TrajectoryLog<Scalar>& traj, double h_prime, double sigma_n, Index n) {
  const AmplificationTrace amp = amplification_trace(traj);
  const double unit = h_prime * sigma_n / (static_cast<double>(n) * static_cast<double>(n));
  std::vector<ExpansionPoint> out;
  for (long k = traj.K0; k < amp.phase_end; ++k) {
    const double d0 = traj.scalars[static_cast<std::size_t>(k)].diameter;
    const double d1 = traj.scalars[static_cast<std::size_t>(k + 1)].diameter;
    out.push_back({k, d1 > d0, unit > 0.0 ? (d1 - d0) / unit : 0.0});
  }
  return out;
}

/// max_k diam(y^(k)) over early exaggeration divided by max_l |y_l^(0)|_inf.
template <typename Scalar>
double localization_ratio(const TrajectoryLog<Scalar>& traj) {
  const EmbeddingState<Scalar>* init = traj.snapshot_at(0);
  if (init == nullptr) throw std::invalid_argument("localization_ratio: trajectory has no initial snapshot");
  const double yinf = static_cast<double>(init->coords.cwiseAbs().maxCoeff());
  double worst = 0.0;
  for (const auto& s : traj.scalars)
    if (s.k <= traj.K0) worst = std::max(worst, s.diameter);
  return yinf > 0.0 ? worst / yinf : std::numeric_limits<double>::infinity();
}

/// Surrogate power iteration against the null space of a block P*, for k = 0..k_max.
/// `measured` compares with the null-space part of the iterate, which grows like
/// (1 + h/(n-1))^k off the constant direction; `measured_fixed` compares with
/// U U^T y itself. The two agree while kh is small against n. `bound` is the
/// geometric rate (1 + h/(n-1) - h lambda_{R+1}(L(alpha P*)))^k. `drift` is
/// (1 + h/(n-1))^k, the norm of the k-step operator, which also scales the
/// rounding error carried in the null space.
struct NullSpaceConvergence {
  std::vector<double> measured;
  std::vector<double> measured_fixed;
  std::vector<double> bound;
  std::vector<double> drift;
};

template <typename Scalar>
NullSpaceConvergence null_space_convergence(const SquareSym<Scalar>& pstar, Scalar alpha, Scalar h,
                                            const Vector<Scalar>& y, long k_max) {
  const Index n = pstar.size();
  const SpectralDecomp<Scalar> dec = eig_sym(laplacian(pstar));
  Index R = 0;
  while (R < n && dec.eigenvalues(R) < Scalar(1e-8)) ++R;
  const Matrix<Scalar> u = dec.eigenvectors.leftCols(R);
  const Vector<Scalar> limit = u * (u.transpose() * y);
  const Vector<Scalar> mean = Vector<Scalar>::Constant(n, y.mean());
  const Scalar lam = R < n ? alpha * dec.eigenvalues(R) : Scalar(0);
  const Scalar grow = Scalar(1) + h / Scalar(n - 1);
  const double rate = static_cast<double>(grow - h * lam);
  const Matrix<Scalar> g = surrogate_laplacian(pstar, alpha).matrix();
  NullSpaceConvergence out;
  Vector<Scalar> cur = y;
  Scalar drift = 1;
  const Scalar ynorm = y.norm();
  for (long k = 0; k <= k_max; ++k) {
    if (k > 0) {
      cur -= h * (g * cur);
      drift *= grow;
    }
    const Vector<Scalar> moving = mean + drift * (limit - mean);
    out.measured.push_back(static_cast<double>((cur - moving).norm() / ynorm));
    out.measured_fixed.push_back(static_cast<double>((cur - limit).norm() / ynorm));
    out.bound.push_back(std::pow(rate, static_cast<double>(k)));
    out.drift.push_back(static_cast<double>(drift));
  }
  return out;
}

}  // namespace tsne
