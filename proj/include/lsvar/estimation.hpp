#pragma once

/// Penalized least-squares estimation of VAR(1) transition matrices on an
/// interval of transitions: low-rank plus sparse fits, lasso fits, proximal
/// maps, tuning-parameter schedules and grid search.

#include "lsvar/var_model.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

namespace lsvar {

struct PenaltyConfig {
  double lambda = 0.0;
  double mu = 0.0;
  double alpha_L = std::numeric_limits<double>::infinity();
  // Constants for the per-split schedule used while searching. Defaults
  // suit series with noise variance near 0.01; rescale with the data or use
  // tuning_grid_search.
  double c0 = 0.005;
  double c0_prime = 0.005;
  // Constants for the per-segment schedule used after detection.
  double c1 = 0.002;
  double c1_prime = 0.01;
};

struct SolverOptions {
  int max_iterations = 500;
  double rel_tolerance = 1e-6;
  std::optional<double> step_size;  // nullopt: 1 / Lipschitz constant of the loss gradient
};

enum class FitStatus { converged, max_iterations, diverged };

struct FitResult {
  Matrix L_hat;
  Matrix S_hat;
  double objective = 0.0;
  double rss = 0.0;  // unnormalized residual sum of squares of L_hat + S_hat
  Index n = 0;       // number of transitions used
  double lambda = 0.0;
  double mu = 0.0;
  int iterations = 0;
  bool converged = false;
  FitStatus status = FitStatus::max_iterations;

  Matrix A_hat() const { return L_hat + S_hat; }
};

/// Sufficient statistics of the squared loss over a set of transitions.
struct TransitionMoments {
  Matrix gram;   // sum x_{t-1} x_{t-1}^T
  Matrix cross;  // sum x_t x_{t-1}^T
  double yy = 0.0;
  Index n = 0;

  Index p() const { return gram.rows(); }

  static TransitionMoments over(const TimeSeriesData& data, const Interval& iv) {
    require(iv.begin >= 1 && iv.end <= data.T() && iv.begin <= iv.end, ErrorCode::invalid_argument,
            "interval [" + std::to_string(iv.begin) + ", " + std::to_string(iv.end) +
                ") outside the series");
    TransitionMoments m;
    Index n = iv.size();
    const auto& X = data.values();
    auto prev = X.middleRows(iv.begin - 1, n);
    auto curr = X.middleRows(iv.begin, n);
    m.gram.noalias() = prev.transpose() * prev;
    m.cross.noalias() = curr.transpose() * prev;
    m.yy = curr.squaredNorm();
    m.n = n;
    return m;
  }

  static TransitionMoments over(const TimeSeriesData& data, const std::vector<Index>& transitions) {
    Index p = data.p();
    TransitionMoments m{Matrix::Zero(p, p), Matrix::Zero(p, p), 0.0, 0};
    const auto& X = data.values();
    for (Index t : transitions) {
      auto prev = X.row(t - 1).transpose();
      auto curr = X.row(t).transpose();
      m.gram.noalias() += prev * prev.transpose();
      m.cross.noalias() += curr * prev.transpose();
      m.yy += curr.squaredNorm();
      ++m.n;
    }
    return m;
  }

  /// sum ||x_t - A x_{t-1}||^2 from the moments.
  double rss(const Matrix& A) const {
    return std::max(0.0, yy - 2.0 * A.cwiseProduct(cross).sum() + (A * gram).cwiseProduct(A).sum());
  }
};

/// Moments of arbitrary transition intervals in O(p^2) via prefix sums, or by
/// direct accumulation when the prefix tables would be too large.
class MomentTable {
 public:
  static constexpr Index kMaxPrefixEntries = Index{1} << 24;

  explicit MomentTable(const TimeSeriesData& data) : data_(&data) {
    Index T = data.T(), p = data.p();
    if (T * p * p > kMaxPrefixEntries) return;
    prefix_ = true;
    gram_.assign(static_cast<std::size_t>(T), Matrix::Zero(p, p));
    cross_.assign(static_cast<std::size_t>(T), Matrix::Zero(p, p));
    yy_.assign(static_cast<std::size_t>(T), 0.0);
    const auto& X = data.values();
    for (Index t = 1; t < T; ++t) {
      auto prev = X.row(t - 1).transpose();
      auto curr = X.row(t).transpose();
      auto k = static_cast<std::size_t>(t);
      gram_[k] = gram_[k - 1] + prev * prev.transpose();
      cross_[k] = cross_[k - 1] + curr * prev.transpose();
      yy_[k] = yy_[k - 1] + curr.squaredNorm();
    }
  }

  const TimeSeriesData& data() const { return *data_; }

  TransitionMoments over(const Interval& iv) const {
    if (!prefix_) return TransitionMoments::over(*data_, iv);
    require(iv.begin >= 1 && iv.end <= data_->T() && iv.begin <= iv.end, ErrorCode::invalid_argument,
            "interval [" + std::to_string(iv.begin) + ", " + std::to_string(iv.end) + ") outside the series");
    auto b = static_cast<std::size_t>(iv.begin - 1), e = static_cast<std::size_t>(iv.end - 1);
    return {gram_[e] - gram_[b], cross_[e] - cross_[b], std::max(0.0, yy_[e] - yy_[b]), iv.size()};
  }

 private:
  const TimeSeriesData* data_;
  bool prefix_ = false;
  // Entry k holds the sum over transitions 1..k.
  std::vector<Matrix> gram_, cross_;
  std::vector<double> yy_;
};

/// Residual sum computed from the data rather than the moments.
inline double residual_sum(const TimeSeriesData& data, const Interval& iv, const Matrix& A) {
  if (iv.size() <= 0) return 0.0;
  const auto& X = data.values();
  Matrix R = X.middleRows(iv.begin, iv.size());
  R.noalias() -= X.middleRows(iv.begin - 1, iv.size()) * A.transpose();
  return R.squaredNorm();
}

inline double soft_threshold(double x, double threshold) {
  if (x > threshold) return x - threshold;
  if (x < -threshold) return x + threshold;
  return 0.0;
}

inline Matrix soft_threshold(const Matrix& M, double threshold) {
  return M.unaryExpr([threshold](double x) { return soft_threshold(x, threshold); });
}

namespace detail {

struct SvtResult {
  Matrix value;
  double nuclear = 0.0;
};

inline Vector singular_values(const Matrix& M) {
  if (M.size() == 0) return Vector();
  Eigen::BDCSVD<Matrix> svd(M);
  return svd.singularValues();
}

inline SvtResult svt(const Matrix& M, double threshold) {
  require(M.allFinite(), ErrorCode::fit_failure, "singular value thresholding of a non-finite matrix");
  SvtResult out;
  if (M.size() == 0) return out;
  if (threshold <= 0.0) {
    out.value = M;
    out.nuclear = singular_values(M).sum();
    return out;
  }
  // sigma_max <= ||M||_F, so a Frobenius norm below the threshold zeroes everything.
  if (M.norm() <= threshold) {
    out.value = Matrix::Zero(M.rows(), M.cols());
    return out;
  }
  Eigen::BDCSVD<Matrix> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  require(svd.info() == Eigen::Success, ErrorCode::fit_failure, "SVD failed");
  Vector d = (svd.singularValues().array() - threshold).max(0.0).matrix();
  Index r = 0;
  while (r < d.size() && d(r) > 0.0) ++r;
  out.nuclear = d.sum();
  if (r == 0) {
    out.value = Matrix::Zero(M.rows(), M.cols());
  } else {
    out.value.noalias() = svd.matrixU().leftCols(r) * d.head(r).asDiagonal() * svd.matrixV().leftCols(r).transpose();
  }
  return out;
}

inline double nuclear_norm(const Matrix& M) { return singular_values(M).sum(); }

inline double default_step(const TransitionMoments& m) {
  if (m.n == 0 || m.p() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m.gram, Eigen::EigenvaluesOnly);
  double lmax = eig.eigenvalues().maxCoeff();
  if (!(lmax > 0.0)) return 1.0;
  return static_cast<double>(m.n) / (2.0 * lmax);
}

inline constexpr int kDivergencePatience = 10;
inline constexpr double kDescentSlack = 1e-10;

}  // namespace detail

/// U max(D - threshold, 0) V^T for M = U D V^T.
inline Matrix singular_value_threshold(const Matrix& M, double threshold) {
  require(threshold >= 0.0, ErrorCode::invalid_argument, "threshold must be nonnegative");
  return detail::svt(M, threshold).value;
}

/// Minimizes rss(L + S)/n + lambda ||S||_1 + mu ||L||_* over L in Omega by
/// alternating proximal gradient steps on S and L. Every iterate is clipped
/// into Omega; an L-step that would raise the objective (possible only when
/// the clip is active) is rejected, so the objective never increases.
inline FitResult fit_lowrank_sparse(const TransitionMoments& m, double lambda, double mu, double alpha_L,
                                    const SolverOptions& opts, const FitResult* warm = nullptr) {
  require(m.n >= 2, ErrorCode::degenerate_interval,
          "need at least 2 transitions to fit, got " + std::to_string(m.n));
  require(lambda >= 0.0 && mu >= 0.0, ErrorCode::invalid_argument, "penalties must be nonnegative");
  require(alpha_L >= 0.0, ErrorCode::invalid_argument, "alpha_L must be nonnegative");
  require(opts.max_iterations >= 1 && opts.rel_tolerance > 0.0, ErrorCode::invalid_argument,
          "invalid solver options");
  Index p = m.p();
  const double inv_n = 1.0 / static_cast<double>(m.n);
  const double step = opts.step_size.value_or(detail::default_step(m));
  require(step > 0.0, ErrorCode::invalid_argument, "step size must be positive");
  const bool lowrank_free = alpha_L > 0.0;

  FitResult r;
  r.n = m.n;
  r.lambda = lambda;
  r.mu = mu;
  Matrix L = Matrix::Zero(p, p), S = Matrix::Zero(p, p);
  if (warm && warm->L_hat.rows() == p && warm->S_hat.rows() == p) {
    S = warm->S_hat;
    if (lowrank_free) L = project_onto_omega(warm->L_hat, alpha_L);
  }
  double nuc = (lowrank_free && mu > 0.0 && L.any()) ? detail::nuclear_norm(L) : 0.0;

  auto objective = [&](const Matrix& Lc, const Matrix& Sc, double nuclear) {
    return m.rss(Lc + Sc) * inv_n + lambda * Sc.cwiseAbs().sum() + mu * nuclear;
  };
  auto gradient = [&](const Matrix& A) -> Matrix { return 2.0 * inv_n * (A * m.gram - m.cross); };

  // One alternating sweep from (Lc, Sc): a soft-threshold step on S, then an
  // SVT step on L clipped to Omega. With `guard`, an L step that raises the
  // objective is rejected.
  struct Point {
    Matrix L, S;
    double nuc = 0.0, f = 0.0;
  };
  auto sweep = [&](const Matrix& Lc, const Matrix& Sc, double nuc_c, bool guard) {
    Point out;
    out.L = Lc;
    out.S = soft_threshold(Sc - step * gradient(Lc + Sc), lambda * step);
    out.nuc = nuc_c;
    out.f = guard ? objective(Lc, out.S, nuc_c) : 0.0;
    if (lowrank_free) {
      auto prox = detail::svt(Lc - step * gradient(Lc + out.S), mu * step);
      Matrix L_next = project_onto_omega(prox.value, alpha_L);
      double nuc_next = prox.nuclear;
      if (mu > 0.0 && !L_next.isApprox(prox.value, 0.0)) nuc_next = detail::nuclear_norm(L_next);
      double f_next = objective(L_next, out.S, nuc_next);
      if (!guard || f_next <= out.f + detail::kDescentSlack * std::max(1.0, std::abs(out.f))) {
        out.L = std::move(L_next);
        out.nuc = nuc_next;
        out.f = f_next;
      }
    } else if (!guard) {
      out.f = objective(Lc, out.S, nuc_c);
    }
    return out;
  };

  // Momentum over sweeps, restarted whenever the extrapolated sweep does not
  // improve on the plain one's starting point; accepted iterates never rise
  // above the guarded sweep.
  double f = objective(L, S, nuc);
  Matrix L_prev = L, S_prev = S;
  double t_mom = 1.0;
  int increases = 0;
  r.status = FitStatus::max_iterations;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    const double f_prev = f;
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    double beta = (t_mom - 1.0) / t_next;
    Point next;
    bool accepted = false;
    if (beta > 0.0) {
      Matrix Ly = L + beta * (L - L_prev), Sy = S + beta * (S - S_prev);
      if (lowrank_free) Ly = project_onto_omega(Ly, alpha_L);
      else Ly.setZero();
      next = sweep(Ly, Sy, 0.0, false);
      accepted = std::isfinite(next.f) && next.f <= f;
    }
    if (!accepted) next = sweep(L, S, nuc, true);
    t_mom = accepted || beta == 0.0 ? t_next : 1.0;
    L_prev.swap(L);
    S_prev.swap(S);
    L = std::move(next.L);
    S = std::move(next.S);
    nuc = next.nuc;
    f = next.f;

    if (!std::isfinite(f)) {
      r.status = FitStatus::diverged;
      ++it;
      break;
    }
    if (f > f_prev) {
      if (++increases >= detail::kDivergencePatience) {
        r.status = FitStatus::diverged;
        ++it;
        break;
      }
    } else {
      increases = 0;
    }
    double scale = std::max(std::abs(f_prev), std::numeric_limits<double>::min());
    if (f == 0.0 || std::abs(f_prev - f) <= opts.rel_tolerance * scale) {
      r.status = FitStatus::converged;
      ++it;
      break;
    }
  }
  r.iterations = std::min(it, opts.max_iterations);
  r.converged = r.status == FitStatus::converged;
  r.L_hat = std::move(L);
  r.S_hat = std::move(S);
  r.rss = m.rss(r.A_hat());
  r.objective = f;
  return r;
}

inline FitResult fit_lowrank_sparse(const TimeSeriesData& data, const Interval& iv, const PenaltyConfig& penalty,
                                    const SolverOptions& opts, const FitResult* warm = nullptr) {
  require(iv.size() >= 2, ErrorCode::degenerate_interval,
          "interval [" + std::to_string(iv.begin) + ", " + std::to_string(iv.end) +
              ") has fewer than 2 transitions");
  auto m = TransitionMoments::over(data, iv);
  auto r = fit_lowrank_sparse(m, penalty.lambda, penalty.mu, penalty.alpha_L, opts, warm);
  r.rss = residual_sum(data, iv, r.A_hat());
  return r;
}

/// Lasso fit: minimizes rss(A)/n + lambda_w ||A||_1 by proximal gradient.
/// The result is stored as S_hat with a zero L_hat.
inline FitResult fit_weakly_sparse(const TransitionMoments& m, double lambda_w, const SolverOptions& opts,
                                   const FitResult* warm = nullptr) {
  require(m.n >= 2, ErrorCode::degenerate_interval,
          "need at least 2 transitions to fit, got " + std::to_string(m.n));
  require(lambda_w >= 0.0, ErrorCode::invalid_argument, "lambda_w must be nonnegative");
  require(opts.max_iterations >= 1 && opts.rel_tolerance > 0.0, ErrorCode::invalid_argument,
          "invalid solver options");
  Index p = m.p();
  const double inv_n = 1.0 / static_cast<double>(m.n);
  const double step = opts.step_size.value_or(detail::default_step(m));

  FitResult r;
  r.n = m.n;
  r.lambda = lambda_w;
  Matrix A = Matrix::Zero(p, p);
  if (warm && warm->S_hat.rows() == p) A = warm->A_hat();
  auto objective = [&](const Matrix& Ac) { return m.rss(Ac) * inv_n + lambda_w * Ac.cwiseAbs().sum(); };

  auto prox_step = [&](const Matrix& Ac) -> Matrix {
    return soft_threshold(Ac - step * 2.0 * inv_n * (Ac * m.gram - m.cross), lambda_w * step);
  };

  // Momentum with restart, as in fit_lowrank_sparse.
  double f = objective(A);
  Matrix A_prev = A;
  double t_mom = 1.0;
  int increases = 0;
  int it = 0;
  r.status = FitStatus::max_iterations;
  for (; it < opts.max_iterations; ++it) {
    const double f_prev = f;
    double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_mom * t_mom));
    double beta = (t_mom - 1.0) / t_next;
    Matrix next;
    double f_next = std::numeric_limits<double>::infinity();
    if (beta > 0.0) {
      next = prox_step(A + beta * (A - A_prev));
      f_next = objective(next);
    }
    bool accepted = std::isfinite(f_next) && f_next <= f;
    if (!accepted) {
      next = prox_step(A);
      f_next = objective(next);
    }
    t_mom = accepted || beta == 0.0 ? t_next : 1.0;
    A_prev.swap(A);
    A = std::move(next);
    f = f_next;
    if (!std::isfinite(f)) {
      r.status = FitStatus::diverged;
      ++it;
      break;
    }
    if (f > f_prev) {
      if (++increases >= detail::kDivergencePatience) {
        r.status = FitStatus::diverged;
        ++it;
        break;
      }
    } else {
      increases = 0;
    }
    double scale = std::max(std::abs(f_prev), std::numeric_limits<double>::min());
    if (f == 0.0 || std::abs(f_prev - f) <= opts.rel_tolerance * scale) {
      r.status = FitStatus::converged;
      ++it;
      break;
    }
  }
  r.iterations = std::min(it, opts.max_iterations);
  r.converged = r.status == FitStatus::converged;
  r.L_hat = Matrix::Zero(p, p);
  r.S_hat = std::move(A);
  r.rss = m.rss(r.S_hat);
  r.objective = f;
  return r;
}

inline FitResult fit_weakly_sparse(const TimeSeriesData& data, const Interval& iv, double lambda_w,
                                   const SolverOptions& opts, const FitResult* warm = nullptr) {
  require(iv.size() >= 2, ErrorCode::degenerate_interval,
          "interval [" + std::to_string(iv.begin) + ", " + std::to_string(iv.end) +
              ") has fewer than 2 transitions");
  auto r = fit_weakly_sparse(TransitionMoments::over(data, iv), lambda_w, opts, warm);
  r.rss = residual_sum(data, iv, r.A_hat());
  return r;
}

/// Minimum-norm least-squares transition matrix (pseudo-inverse of the Gram).
inline Matrix ols_transition(const TransitionMoments& m) {
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(m.gram);
  return cod.solve(m.cross.transpose()).transpose();
}

// ---------------------------------------------------------------------------
// Tuning schedules

struct PenaltyPair {
  double lambda = 0.0;
  double mu = 0.0;
};

/// 4c sqrt((log p + log n)/n) and 4c' sqrt((p + log n)/n): the per-split
/// schedule, also used for every candidate segment during screening.
inline PenaltyPair log_rate_penalty(double n, double p, double c, double c_prime) {
  require(n >= 1.0 && p >= 1.0, ErrorCode::invalid_argument, "sample size and dimension must be at least 1");
  return {4.0 * c * std::sqrt((std::log(p) + std::log(n)) / n), 4.0 * c_prime * std::sqrt((p + std::log(n)) / n)};
}

inline PenaltyPair log_rate_penalty(Index n, Index p, double c, double c_prime) {
  return log_rate_penalty(static_cast<double>(n), static_cast<double>(p), c, c_prime);
}

struct SplitPenalties {
  PenaltyPair left;
  PenaltyPair right;
};

inline SplitPenalties search_phase_tuning(Index tau, Index T, Index p, const PenaltyConfig& config) {
  require(tau > 1 && tau < T, ErrorCode::invalid_argument,
          "split " + std::to_string(tau) + " must lie strictly inside (1, " + std::to_string(T) + ")");
  return {log_rate_penalty(tau - 1, p, config.c0, config.c0_prime),
          log_rate_penalty(T - tau, p, config.c0, config.c0_prime)};
}

/// Refit schedule on a stationary segment of N transitions. An unbounded
/// alpha_L contributes no offset.
inline PenaltyPair segment_phase_tuning(Index N, Index p, double alpha_L, const PenaltyConfig& config) {
  require(N >= 2, ErrorCode::invalid_argument, "segment needs at least 2 transitions");
  double dn = static_cast<double>(N), dp = static_cast<double>(p);
  double offset = std::isfinite(alpha_L) ? 4.0 * config.c1 * alpha_L / dp : 0.0;
  return {4.0 * config.c1 * std::sqrt(std::log(dp) / dn) + offset, 4.0 * config.c1_prime * std::sqrt(dp / dn)};
}

/// c p sqrt(log(pT)/T).
inline double default_alpha_L(Index p, Index T, double c = 0.5) {
  double dp = static_cast<double>(p), dT = static_cast<double>(T);
  return c * dp * std::sqrt(std::log(dp * dT) / dT);
}

// ---------------------------------------------------------------------------
// Grid search

struct GridCell {
  double c0 = 0.0;
  double c0_prime = 0.0;
};

/// n equally spaced values per constant in [lo, hi], crossed.
inline std::vector<GridCell> default_grid(int n = 20, double lo = 0.001, double hi = 10.0) {
  require(n >= 1, ErrorCode::invalid_argument, "grid needs at least one value per constant");
  std::vector<double> axis;
  for (int i = 0; i < n; ++i) axis.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  std::vector<GridCell> grid;
  for (double a : axis)
    for (double b : axis) grid.push_back({a, b});
  return grid;
}

struct GridSearchResult {
  GridCell cell;
  double lambda = 0.0;
  double mu = 0.0;
  double test_error = 0.0;
  std::vector<double> cell_errors;  // same order as the input grid
};

namespace detail {

struct TrainTestSplit {
  TransitionMoments train;
  std::vector<Index> test;
};

/// Every k-th transition of the interval is held out.
inline TrainTestSplit every_kth_split(const TimeSeriesData& data, const Interval& iv, Index k) {
  std::vector<Index> train, test;
  for (Index t = iv.begin; t < iv.end; ++t) ((t - iv.begin) % k == k - 1 ? test : train).push_back(t);
  return {TransitionMoments::over(data, train), std::move(test)};
}

inline double prediction_error(const TimeSeriesData& data, const std::vector<Index>& test, const Matrix& A) {
  double total = 0.0;
  for (Index t : test)
    total += (data.values().row(t).transpose() - A * data.values().row(t - 1).transpose()).squaredNorm();
  return total / static_cast<double>(test.size());
}

/// Smallest error; ties resolved toward the lexicographically smallest cell.
inline std::size_t argmin_cell(const std::vector<GridCell>& grid, const std::vector<double>& errors) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (errors[i] < errors[best] ||
        (errors[i] == errors[best] && std::pair(grid[i].c0, grid[i].c0_prime) < std::pair(grid[best].c0, grid[best].c0_prime)))
      best = i;
  }
  return best;
}

inline constexpr Index kHoldoutStride = 5;

}  // namespace detail

/// Picks (c0, c0') by one-step-ahead prediction error on every 5th transition
/// of the interval after fitting on the others with the log-rate schedule.
inline GridSearchResult tuning_grid_search(const TimeSeriesData& data, const Interval& iv,
                                           const std::vector<GridCell>& grid, double alpha_L,
                                           const SolverOptions& opts) {
  require(!grid.empty(), ErrorCode::invalid_argument, "tuning grid is empty");
  require(iv.size() >= 10, ErrorCode::invalid_argument, "grid search needs an interval of at least 10 transitions");
  auto split = detail::every_kth_split(data, iv, detail::kHoldoutStride);
  std::vector<double> errors(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    auto pen = log_rate_penalty(split.train.n, data.p(), grid[i].c0, grid[i].c0_prime);
    auto fit = fit_lowrank_sparse(split.train, pen.lambda, pen.mu, alpha_L, opts);
    errors[i] = detail::prediction_error(data, split.test, fit.A_hat());
  });
  std::size_t best = detail::argmin_cell(grid, errors);
  auto pen = log_rate_penalty(split.train.n, data.p(), grid[best].c0, grid[best].c0_prime);
  return {grid[best], pen.lambda, pen.mu, errors[best], std::move(errors)};
}

/// One-dimensional variant for the lasso constant; c0_prime is ignored.
inline GridSearchResult tuning_grid_search_weakly_sparse(const TimeSeriesData& data, const Interval& iv,
                                                         const std::vector<double>& constants,
                                                         const SolverOptions& opts) {
  require(!constants.empty(), ErrorCode::invalid_argument, "tuning grid is empty");
  require(iv.size() >= 10, ErrorCode::invalid_argument, "grid search needs an interval of at least 10 transitions");
  auto split = detail::every_kth_split(data, iv, detail::kHoldoutStride);
  std::vector<GridCell> grid;
  for (double c : constants) grid.push_back({c, 0.0});
  std::vector<double> errors(grid.size());
  parallel_for(grid.size(), [&](std::size_t i) {
    auto pen = log_rate_penalty(split.train.n, data.p(), grid[i].c0, 0.0);
    auto fit = fit_weakly_sparse(split.train, pen.lambda, opts);
    errors[i] = detail::prediction_error(data, split.test, fit.A_hat());
  });
  std::size_t best = detail::argmin_cell(grid, errors);
  auto pen = log_rate_penalty(split.train.n, data.p(), grid[best].c0, 0.0);
  return {grid[best], pen.lambda, 0.0, errors[best], std::move(errors)};
}

// ---------------------------------------------------------------------------
// Structure summaries

inline constexpr double kRankThreshold = 0.01;
inline constexpr double kSupportThreshold = 1e-3;

/// Number of singular values above rel_threshold * sigma_max.
inline Index estimate_rank(const Matrix& L, double rel_threshold = kRankThreshold) {
  require(rel_threshold > 0.0 && rel_threshold < 1.0, ErrorCode::invalid_argument,
          "rel_threshold must lie in (0, 1)");
  Vector s = detail::singular_values(L);
  if (s.size() == 0 || s(0) <= 0.0) return 0;
  return (s.array() > rel_threshold * s(0)).count();
}

inline Index sparse_support_size(const Matrix& S, double threshold = kSupportThreshold) {
  return (S.array().abs() > threshold).count();
}

}  // namespace lsvar
