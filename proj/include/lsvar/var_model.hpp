#pragma once

/// Piecewise-stationary VAR(1) models whose transition matrices split into a
/// low-rank and a sparse part: data containers, simulation and structural
/// checks.

#include "lsvar/core.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace lsvar {

/// Observations X_0 .. X_{T-1}, one per row.
class TimeSeriesData {
 public:
  TimeSeriesData() = default;

  explicit TimeSeriesData(Matrix values) : values_(std::move(values)) {
    require(values_.rows() >= 2, ErrorCode::invalid_argument,
            "time series needs at least 2 observations, got " + std::to_string(values_.rows()));
    require(values_.cols() >= 1, ErrorCode::invalid_argument, "time series needs at least 1 column");
    require(values_.allFinite(), ErrorCode::invalid_argument, "time series contains non-finite values");
  }

  Index T() const { return values_.rows(); }
  Index p() const { return values_.cols(); }
  const Matrix& values() const { return values_; }

  /// Rows [first, last) as a new series.
  TimeSeriesData rows(Index first, Index last) const {
    require(first >= 0 && last <= T() && last - first >= 2, ErrorCode::invalid_argument,
            "row range [" + std::to_string(first) + ", " + std::to_string(last) + ") is invalid");
    return TimeSeriesData(values_.middleRows(first, last - first));
  }

  /// Rows needed to evaluate the transitions of `window`: [begin-1, end).
  TimeSeriesData window(const Interval& w) const { return rows(w.begin - 1, w.end); }

  TimeSeriesData reversed() const { return TimeSeriesData(values_.colwise().reverse()); }

 private:
  Matrix values_;
};

struct LowRankSparsePair {
  Matrix L;
  Matrix S;
  double alpha_L = std::numeric_limits<double>::infinity();

  Matrix transition() const { return L + S; }
  Index p() const { return L.rows(); }

  bool in_omega() const {
    if (!std::isfinite(alpha_L)) return true;
    // Relative slack absorbs the rounding of alpha_L = p * max|L| round trips.
    return L.size() == 0 || L.cwiseAbs().maxCoeff() <= alpha_L / static_cast<double>(p()) * (1.0 + 1e-12);
  }
};

struct PiecewiseVarModel {
  std::vector<Index> change_points;
  std::vector<LowRankSparsePair> segments;
  double noise_std = 0.1;
  double max_sparse_magnitude = std::numeric_limits<double>::infinity();

  Index p() const { return segments.empty() ? 0 : segments.front().p(); }
  Index m0() const { return static_cast<Index>(change_points.size()); }

  /// Transition matrix governing transition t (t < tau uses the left model).
  Index segment_of(Index t) const {
    return static_cast<Index>(std::upper_bound(change_points.begin(), change_points.end(), t) -
                              change_points.begin());
  }
};

inline double spectral_radius(const Matrix& A) {
  require(A.rows() == A.cols(), ErrorCode::invalid_argument, "spectral radius needs a square matrix");
  require(A.allFinite(), ErrorCode::invalid_argument, "matrix contains non-finite values");
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Matrix> solver(A, false);
  require(solver.info() == Eigen::Success, ErrorCode::fit_failure, "eigenvalue computation failed");
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

inline constexpr double kStabilityMargin = 1e-8;

/// A VAR(1) segment is stable iff every eigenvalue of A lies strictly inside
/// the unit circle; radii within kStabilityMargin of 1 are rejected.
inline bool check_stability(const Matrix& A) {
  return spectral_radius(A) < 1.0 - kStabilityMargin;
}

/// ||L||_inf / ||S||_inf (max-abs entries).
inline double information_ratio(const LowRankSparsePair& pair) {
  double s = pair.S.size() ? pair.S.cwiseAbs().maxCoeff() : 0.0;
  require(s > 0.0, ErrorCode::undefined_value, "information ratio undefined: sparse component is zero");
  double l = pair.L.size() ? pair.L.cwiseAbs().maxCoeff() : 0.0;
  return l / s;
}

/// Entrywise clip of L into {||L||_inf <= alpha_L / p}.
inline Matrix project_onto_omega(const Matrix& L, double alpha_L) {
  require(alpha_L >= 0.0, ErrorCode::invalid_argument, "alpha_L must be nonnegative");
  if (!std::isfinite(alpha_L) || L.size() == 0) return L;
  double bound = alpha_L / static_cast<double>(L.rows());
  return L.cwiseMax(-bound).cwiseMin(bound);
}

/// Haar-distributed orthonormal p x p matrix.
inline Matrix random_orthonormal(Index p, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix G(p, p);
  for (Index j = 0; j < p; ++j)
    for (Index i = 0; i < p; ++i) G(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  Matrix Q = qr.householderQ() * Matrix::Identity(p, p);
  Matrix R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Index j = 0; j < p; ++j)
    if (R(j, j) < 0) Q.col(j) *= -1.0;
  return Q;
}

/// sum_{l < rank} sigma_l u_l u_l^T for the columns of an orthonormal U.
inline Matrix low_rank_from_basis(const Matrix& U, std::span<const double> singular_values) {
  Index p = U.rows();
  Matrix L = Matrix::Zero(p, p);
  for (std::size_t l = 0; l < singular_values.size(); ++l)
    L.noalias() += singular_values[l] * U.col(static_cast<Index>(l)) * U.col(static_cast<Index>(l)).transpose();
  return L;
}

/// Symmetric matrix of the requested rank built on a random orthonormal basis.
inline Matrix build_low_rank_component(std::uint64_t seed, Index p, Index rank,
                                       std::span<const double> singular_values) {
  require(p >= 1, ErrorCode::invalid_argument, "p must be positive");
  require(rank >= 0 && rank <= p, ErrorCode::invalid_argument,
          "rank " + std::to_string(rank) + " exceeds dimension " + std::to_string(p));
  require(static_cast<Index>(singular_values.size()) >= rank, ErrorCode::invalid_argument,
          "need one singular value per rank");
  for (Index l = 0; l < rank; ++l)
    require(singular_values[l] > 0.0, ErrorCode::invalid_argument, "singular values must be positive");
  std::mt19937_64 rng(seed);
  Matrix U = random_orthonormal(p, rng);
  return low_rank_from_basis(U, singular_values.first(static_cast<std::size_t>(rank)));
}

/// Checks the structural invariants of a model; throws with a diagnostic.
inline void validate_model(const PiecewiseVarModel& model) {
  require(!model.segments.empty(), ErrorCode::invalid_argument, "model has no segments");
  require(model.segments.size() == model.change_points.size() + 1, ErrorCode::invalid_argument,
          "model needs exactly one more segment than change points");
  require(model.noise_std >= 0.0 && std::isfinite(model.noise_std), ErrorCode::invalid_argument,
          "noise standard deviation must be finite and nonnegative");
  Index p = model.p();
  require(p >= 1, ErrorCode::invalid_argument, "model dimension must be positive");
  for (std::size_t j = 0; j < model.segments.size(); ++j) {
    const auto& seg = model.segments[j];
    require(seg.L.rows() == p && seg.L.cols() == p && seg.S.rows() == p && seg.S.cols() == p,
            ErrorCode::invalid_argument, "segment " + std::to_string(j) + " has mismatched shape");
    require(seg.S.size() == 0 || seg.S.cwiseAbs().maxCoeff() <= model.max_sparse_magnitude,
            ErrorCode::invalid_argument,
            "segment " + std::to_string(j) + " sparse entries exceed max_sparse_magnitude");
    require(seg.in_omega(), ErrorCode::invalid_argument,
            "segment " + std::to_string(j) + " low-rank part violates the spikiness bound");
    double rho = spectral_radius(seg.transition());
    require(rho < 1.0 - kStabilityMargin, ErrorCode::unstable_model,
            "segment " + std::to_string(j) + " is unstable (spectral radius " + std::to_string(rho) + ")");
  }
  for (std::size_t j = 0; j < model.change_points.size(); ++j) {
    require(model.change_points[j] > 1, ErrorCode::invalid_argument, "change points must exceed 1");
    if (j > 0)
      require(model.change_points[j] > model.change_points[j - 1], ErrorCode::invalid_argument,
              "change points must be strictly increasing");
  }
}

inline constexpr Index kDefaultBurnIn = 200;

/// Draws X_0 .. X_{T-1}. The chain starts at zero and runs `burn_in` steps of
/// the first segment before X_0 is recorded; X_t = A_{seg(t)} X_{t-1} + eps_t.
inline TimeSeriesData simulate_piecewise_var(const PiecewiseVarModel& model, Index T, std::uint64_t seed,
                                             Index burn_in = kDefaultBurnIn) {
  validate_model(model);
  require(T >= 2, ErrorCode::invalid_argument, "T must be at least 2");
  require(model.change_points.empty() || model.change_points.back() < T, ErrorCode::invalid_argument,
          "last change point must lie before T");
  Index p = model.p();
  std::vector<Matrix> transitions;
  for (const auto& seg : model.segments) transitions.push_back(seg.transition());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  auto draw_noise = [&](Vector& eps) {
    for (Index i = 0; i < p; ++i) eps(i) = model.noise_std * normal(rng);
  };

  Vector x = Vector::Zero(p), eps(p);
  for (Index s = 0; s < burn_in; ++s) {
    draw_noise(eps);
    x = transitions.front() * x + eps;
  }
  Matrix values(T, p);
  values.row(0) = x.transpose();
  for (Index t = 1; t < T; ++t) {
    draw_noise(eps);
    x = transitions[static_cast<std::size_t>(model.segment_of(t))] * x + eps;
    values.row(t) = x.transpose();
  }
  return TimeSeriesData(std::move(values));
}

}  // namespace lsvar
