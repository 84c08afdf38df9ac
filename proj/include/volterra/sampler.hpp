#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "volterra/kernels.hpp"
#include "volterra/quadrature.hpp"

namespace volterra {

/// Strictly increasing times with times.front() = 0 and times.back() = T.
class TimeGrid {
 public:
  explicit TimeGrid(std::vector<double> times);
  static TimeGrid uniform(double T, int steps);

  double T() const noexcept { return times_.back(); }
  int steps() const noexcept { return static_cast<int>(times_.size()) - 1; }
  double time(int k) const { return times_[k]; }
  double dt(int k) const { return times_[k + 1] - times_[k]; }
  const std::vector<double>& times() const noexcept { return times_; }
  bool is_uniform() const noexcept { return uniform_; }

  bool operator==(const TimeGrid& other) const { return times_ == other.times_; }

 private:
  std::vector<double> times_;
  bool uniform_ = false;
};

/// One replication: Brownian increments of (W, What) per step and V at every
/// grid time (V[0] = 0).
struct PathBundle {
  TimeGrid grid;
  std::vector<double> dW;
  std::vector<double> dWhat;
  std::vector<double> V;
  double rho = 0.0;
  double rho_hat = 1.0;

  /// dB_k = rho dW_k + rho_hat dWhat_k.
  double dB(int k) const { return rho * dW[k] + rho_hat * dWhat[k]; }
};

/// Identifies the random stream of one replication.
struct StreamId {
  std::uint64_t seed = 0;
  std::uint64_t replication = 0;
};

/// Standard normals of one replication, in the order they are drawn:
/// n for dW, n for dWhat, then the residual block.
struct ReplicationNormals {
  std::vector<double> w;
  std::vector<double> w_hat;
  std::vector<double> residual;
};

ReplicationNormals draw_normals(StreamId stream, int steps, int residual_count);

/// Lower-triangular factor of Cov(dW_1..dW_n, V_t1..V_tn). Because the dW
/// block is diagonal the factor has the block form
///
///     [ D  0 ]      D = diag(sqrt(dt_j))
///     [ B  C ]      B = Cov(V, dW) D^-1,  C C^T = Cov(V, V) - B B^T
///
/// so V = B z_w + C z_res, i.e. V is drawn conditionally on the increments.
class JointFactorization {
 public:
  const TimeGrid& grid() const noexcept { return grid_; }
  const Kernel& kernel() const noexcept { return kernel_; }
  double jitter() const noexcept { return jitter_; }
  const Eigen::MatrixXd& cross() const noexcept { return cross_; }
  const Eigen::MatrixXd& residual() const noexcept { return residual_; }

  /// The analytic 2n x 2n joint covariance this factor reproduces.
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  /// Full 2n x 2n lower-triangular factor.
  Eigen::MatrixXd lower() const;

  /// V at t_1..t_n from standard normals z_w (driving dW) and z_res.
  void volterra_values(std::span<const double> z_w, std::span<const double> z_res,
                       std::span<double> V) const;

 private:
  friend JointFactorization factorize_joint(const Kernel&, const TimeGrid&,
                                            const QuadratureOptions&);
  JointFactorization(TimeGrid grid, Kernel kernel)
      : grid_(std::move(grid)), kernel_(std::move(kernel)) {}

  TimeGrid grid_;
  Kernel kernel_;
  double jitter_ = 0.0;
  Eigen::MatrixXd cross_;
  Eigen::MatrixXd residual_;
  Eigen::MatrixXd covariance_;
};

/// Tolerances used for the covariance entries; tighter than the library
/// default because the residual block is a difference of near-equal numbers.
QuadratureOptions covariance_quadrature_options();

JointFactorization factorize_joint(const Kernel& kernel, const TimeGrid& grid,
                                   const QuadratureOptions& opts = covariance_quadrature_options());

/// Lower Cholesky factor of a symmetric positive semidefinite matrix.
/// Pivots within a round-off band of zero give zero columns; a negative pivot
/// retries with diagonal jitter 1e-14, 1e-12, 1e-10 times the mean diagonal
/// of `reference_diag_mean`. Throws FactorizationError after the last level.
Eigen::MatrixXd semidefinite_cholesky(const Eigen::MatrixXd& A, double reference_diag_mean,
                                      double* jitter_used = nullptr);

PathBundle sample_exact(const JointFactorization& fact, double rho, StreamId stream);
/// Same, from normals already drawn (n residuals); lets several kernels share them.
PathBundle sample_exact(const JointFactorization& fact, double rho, const ReplicationNormals& z);

/// Exact sampler for sum-of-exponentials kernels: each exponential mode is an
/// Ornstein-Uhlenbeck process driven by W and advanced by its exact
/// one-step Gaussian law.
class MarkovianSampler {
 public:
  MarkovianSampler(const Kernel& kernel, TimeGrid grid);

  PathBundle sample(double rho, StreamId stream) const;
  const TimeGrid& grid() const noexcept { return grid_; }

  /// Joint covariance of (dW, I_1..I_m) for one step of length dt, where
  /// I_i = int e^{-x_i (t_{k+1} - u)} dW_u over the step.
  static Eigen::MatrixXd step_covariance(const std::vector<double>& nodes, double dt);

 private:
  Kernel kernel_;
  TimeGrid grid_;
  // One factor per step (shared when the grid is uniform).
  std::vector<Eigen::MatrixXd> factors_;
  std::vector<std::vector<double>> decays_;
};

PathBundle sample_markovian(const Kernel& kernel, const TimeGrid& grid, double rho,
                            StreamId stream);

/// CSV rows "replication,t,dW,dWhat,V"; row k carries the increments ending at t_k.
std::string paths_to_csv(std::span<const PathBundle> paths);

}  // namespace volterra
