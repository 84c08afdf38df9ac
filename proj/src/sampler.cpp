#include "volterra/sampler.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "volterra/errors.hpp"
#include "volterra/rng.hpp"
#include "volterra/text.hpp"

namespace volterra {

namespace {

double exp_integral(double x, double t) {
  if (x == 0.0) return t;
  return -std::expm1(-x * t) / x;
}

}  // namespace

TimeGrid::TimeGrid(std::vector<double> times) : times_(std::move(times)) {
  if (times_.size() < 2 || times_.front() != 0.0) {
    throw std::invalid_argument("TimeGrid: need at least two times starting at 0");
  }
  for (std::size_t k = 1; k < times_.size(); ++k) {
    if (!(times_[k] > times_[k - 1]) || !std::isfinite(times_[k])) {
      throw std::invalid_argument("TimeGrid: times must be strictly increasing and finite");
    }
  }
  const double first = times_[1] - times_[0];
  uniform_ = true;
  for (std::size_t k = 1; k + 1 < times_.size(); ++k) {
    if (std::abs((times_[k + 1] - times_[k]) - first) > 1e-12 * first) uniform_ = false;
  }
}

TimeGrid TimeGrid::uniform(double T, int steps) {
  if (!(T > 0.0) || steps < 1) throw std::invalid_argument("TimeGrid: need T > 0 and steps >= 1");
  std::vector<double> times(steps + 1);
  for (int k = 0; k <= steps; ++k) times[k] = T * k / steps;
  times.back() = T;
  return TimeGrid(std::move(times));
}

ReplicationNormals draw_normals(StreamId stream, int steps, int residual_count) {
  RandomStream rng(stream.seed, stream.replication);
  ReplicationNormals z;
  z.w.resize(steps);
  z.w_hat.resize(steps);
  z.residual.resize(residual_count);
  for (auto& v : z.w) v = rng.normal();
  for (auto& v : z.w_hat) v = rng.normal();
  for (auto& v : z.residual) v = rng.normal();
  return z;
}

Eigen::MatrixXd semidefinite_cholesky(const Eigen::MatrixXd& A, double reference_diag_mean,
                                      double* jitter_used) {
  const Eigen::Index n = A.rows();
  const double eps = std::numeric_limits<double>::epsilon();
  const double pivot_tol = 16.0 * static_cast<double>(n) * eps * reference_diag_mean;
  double worst_pivot = 0.0;
  for (double level : {0.0, 1e-14, 1e-12, 1e-10}) {
    const double jitter = level * reference_diag_mean;
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
    bool ok = true;
    for (Eigen::Index j = 0; j < n && ok; ++j) {
      double d = A(j, j) + jitter;
      if (j > 0) d -= L.row(j).head(j).squaredNorm();
      if (d < -pivot_tol) {
        worst_pivot = std::min(worst_pivot, d);
        ok = false;
        break;
      }
      if (d <= pivot_tol) continue;  // zero column: no variance left in this direction
      const double ljj = std::sqrt(d);
      L(j, j) = ljj;
      for (Eigen::Index i = j + 1; i < n; ++i) {
        double s = A(i, j);
        if (j > 0) s -= L.row(i).head(j).dot(L.row(j).head(j));
        L(i, j) = s / ljj;
      }
    }
    if (ok) {
      if (jitter_used) *jitter_used = jitter;
      return L;
    }
  }
  throw FactorizationError("Cholesky failed after maximum jitter", worst_pivot);
}

QuadratureOptions covariance_quadrature_options() {
  QuadratureOptions opts;
  opts.abs_tol = 1e-14;
  opts.rel_tol = 1e-12;
  return opts;
}

Eigen::MatrixXd JointFactorization::lower() const {
  const int n = grid_.steps();
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) L(j, j) = std::sqrt(grid_.dt(j));
  L.block(n, 0, n, n) = cross_;
  L.block(n, n, n, n) = residual_;
  return L;
}

void JointFactorization::volterra_values(std::span<const double> z_w,
                                         std::span<const double> z_res,
                                         std::span<double> V) const {
  const Eigen::Index n = grid_.steps();
  Eigen::Map<const Eigen::VectorXd> zw(z_w.data(), n);
  Eigen::Map<const Eigen::VectorXd> zr(z_res.data(), n);
  Eigen::Map<Eigen::VectorXd> out(V.data(), n);
  out.noalias() = cross_.triangularView<Eigen::Lower>() * zw;
  out.noalias() += residual_.triangularView<Eigen::Lower>() * zr;
}

JointFactorization factorize_joint(const Kernel& kernel, const TimeGrid& grid,
                                   const QuadratureOptions& opts) {
  JointFactorization fact(grid, kernel);
  const int n = grid.steps();
  const auto& t = grid.times();

  // Cov(V_{t_i}, dW_j) = int_{t_{j-1}}^{min(t_j, t_i)} K(t_i - u) du, zero for j > i.
  Eigen::MatrixXd cov_vw = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= i; ++j) {
      cov_vw(i - 1, j - 1) = integral(kernel, t[i] - t[j - 1]) - integral(kernel, t[i] - t[j]);
    }
  }
  Eigen::MatrixXd cov_vv(n, n);
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= i; ++j) {
      const double c = covariance(kernel, t[i], t[j], opts);
      cov_vv(i - 1, j - 1) = c;
      cov_vv(j - 1, i - 1) = c;
    }
  }

  fact.covariance_ = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (int j = 0; j < n; ++j) fact.covariance_(j, j) = grid.dt(j);
  fact.covariance_.block(n, 0, n, n) = cov_vw;
  fact.covariance_.block(0, n, n, n) = cov_vw.transpose();
  fact.covariance_.block(n, n, n, n) = cov_vv;

  fact.cross_ = cov_vw;
  for (int j = 0; j < n; ++j) fact.cross_.col(j) /= std::sqrt(grid.dt(j));
  Eigen::MatrixXd schur = cov_vv;
  schur.noalias() -= fact.cross_ * fact.cross_.transpose();
  schur = 0.5 * (schur + schur.transpose());
  const double mean_diag = fact.covariance_.diagonal().mean();
  fact.residual_ = semidefinite_cholesky(schur, mean_diag, &fact.jitter_);
  return fact;
}

PathBundle sample_exact(const JointFactorization& fact, double rho, const ReplicationNormals& z) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("sample_exact: rho must lie in [0, 1]");
  const TimeGrid& grid = fact.grid();
  const int n = grid.steps();
  PathBundle path{grid, std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n + 1, 0.0), rho, std::sqrt(1.0 - rho * rho)};
  for (int k = 0; k < n; ++k) {
    const double sq = std::sqrt(grid.dt(k));
    path.dW[k] = sq * z.w[k];
    path.dWhat[k] = sq * z.w_hat[k];
  }
  fact.volterra_values(z.w, z.residual, std::span<double>(path.V).subspan(1));
  return path;
}

PathBundle sample_exact(const JointFactorization& fact, double rho, StreamId stream) {
  const int n = fact.grid().steps();
  return sample_exact(fact, rho, draw_normals(stream, n, n));
}

Eigen::MatrixXd MarkovianSampler::step_covariance(const std::vector<double>& nodes, double dt) {
  const auto m = static_cast<Eigen::Index>(nodes.size());
  Eigen::MatrixXd C(m + 1, m + 1);
  C(0, 0) = dt;
  for (Eigen::Index i = 0; i < m; ++i) {
    C(0, i + 1) = C(i + 1, 0) = exp_integral(nodes[i], dt);
    for (Eigen::Index j = 0; j <= i; ++j) {
      C(i + 1, j + 1) = C(j + 1, i + 1) = exp_integral(nodes[i] + nodes[j], dt);
    }
  }
  return C;
}

MarkovianSampler::MarkovianSampler(const Kernel& kernel, TimeGrid grid)
    : kernel_(kernel), grid_(std::move(grid)) {
  if (kernel_.family() != KernelFamily::SumOfExponentials) {
    throw std::invalid_argument("MarkovianSampler: kernel must be a sum of exponentials");
  }
  const int steps = grid_.is_uniform() ? 1 : grid_.steps();
  for (int k = 0; k < steps; ++k) {
    const double dt = grid_.dt(k);
    const Eigen::MatrixXd C = step_covariance(kernel_.nodes(), dt);
    factors_.push_back(semidefinite_cholesky(C, C.diagonal().mean()));
    std::vector<double> decay;
    for (double x : kernel_.nodes()) decay.push_back(std::exp(-x * dt));
    decays_.push_back(std::move(decay));
  }
}

PathBundle MarkovianSampler::sample(double rho, StreamId stream) const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw DomainError("sample_markovian: rho must lie in [0, 1]");
  const int n = grid_.steps();
  const auto m = static_cast<Eigen::Index>(kernel_.nodes().size());
  const auto z = draw_normals(stream, n, n * static_cast<int>(m));
  PathBundle path{grid_, std::vector<double>(n), std::vector<double>(n),
                  std::vector<double>(n + 1, 0.0), rho, std::sqrt(1.0 - rho * rho)};
  Eigen::VectorXd Y = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd zs(m + 1);
  Eigen::Map<const Eigen::VectorXd> w(kernel_.weights().data(), m);
  for (int k = 0; k < n; ++k) {
    const std::size_t slot = factors_.size() == 1 ? 0 : static_cast<std::size_t>(k);
    const Eigen::MatrixXd& F = factors_[slot];
    const auto& decay = decays_[slot];
    zs[0] = z.w[k];
    for (Eigen::Index i = 0; i < m; ++i) zs[i + 1] = z.residual[k * m + i];
    const Eigen::VectorXd draw = F.triangularView<Eigen::Lower>() * zs;
    path.dW[k] = draw[0];
    path.dWhat[k] = std::sqrt(grid_.dt(k)) * z.w_hat[k];
    for (Eigen::Index i = 0; i < m; ++i) Y[i] = decay[i] * Y[i] + draw[i + 1];
    path.V[k + 1] = kernel_.scale() * w.dot(Y);
  }
  return path;
}

PathBundle sample_markovian(const Kernel& kernel, const TimeGrid& grid, double rho,
                            StreamId stream) {
  return MarkovianSampler(kernel, grid).sample(rho, stream);
}

std::string paths_to_csv(std::span<const PathBundle> paths) {
  std::string out = "replication,t,dW,dWhat,V\n";
  for (std::size_t r = 0; r < paths.size(); ++r) {
    const auto& p = paths[r];
    for (int k = 0; k <= p.grid.steps(); ++k) {
      out += std::to_string(r) + "," + format_double(p.grid.time(k)) + ",";
      out += (k == 0 ? "0" : format_double(p.dW[k - 1])) + ",";
      out += (k == 0 ? "0" : format_double(p.dWhat[k - 1])) + ",";
      out += format_double(p.V[k]) + "\n";
    }
  }
  return out;
}

}  // namespace volterra
