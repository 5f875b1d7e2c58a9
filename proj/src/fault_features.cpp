#include "rootkgd/fault_features.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rootkgd/error.hpp"

namespace rootkgd::features {

namespace {

// Eigenvalues below this fraction of the trace are numerically zero; the
// corresponding principal directions are dropped from D.
constexpr double kRankTolerance = 1e-12;

void fix_signs(Eigen::MatrixXd& loadings) {
  for (Eigen::Index j = 0; j < loadings.cols(); ++j) {
    Eigen::Index arg = 0;
    loadings.col(j).cwiseAbs().maxCoeff(&arg);
    if (loadings(arg, j) < 0.0) loadings.col(j) *= -1.0;
  }
}

Eigen::VectorXd rbc_from(const Eigen::MatrixXd& m, const Eigen::VectorXd& x,
                         std::vector<std::size_t>& degenerate) {
  Eigen::VectorXd projected = m * x;
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double diag = m(i, i);
    if (diag <= kDegenerateDiagonal) {
      out(i) = 0.0;
      degenerate.push_back(static_cast<std::size_t>(i));
    } else {
      out(i) = projected(i) * projected(i) / diag;
    }
  }
  return out;
}

}  // namespace

PcaModel PcaModel::from_parts(std::vector<std::string> columns, Eigen::VectorXd mean,
                              Eigen::VectorXd stddev, Eigen::VectorXd eigenvalues,
                              Eigen::MatrixXd loadings, Eigen::Index n_pc, double r_pc) {
  const Eigen::Index n = mean.size();
  if (n < 1 || stddev.size() != n || eigenvalues.size() != n || loadings.rows() != n ||
      loadings.cols() != n || static_cast<Eigen::Index>(columns.size()) != n) {
    throw ValidationError("PCA model parts have inconsistent dimensions");
  }
  if (n_pc < 0 || n_pc > n) throw ValidationError("PCA model n_pc out of range");
  if (!(r_pc > 0.0 && r_pc <= 1.0)) throw ValidationError("PCA model r_pc must lie in (0, 1]");
  if (!(stddev.array() > 0.0).all() || !stddev.allFinite() || !mean.allFinite()) {
    throw ValidationError("PCA model standard deviations must be finite and positive");
  }
  if (!eigenvalues.allFinite() || !loadings.allFinite()) {
    throw ValidationError("PCA model contains non-finite values");
  }

  PcaModel model;
  model.columns_ = std::move(columns);
  model.mean_ = std::move(mean);
  model.std_ = std::move(stddev);
  model.eigenvalues_ = std::move(eigenvalues);
  model.loadings_ = std::move(loadings);
  model.n_pc_ = n_pc;
  model.r_pc_ = r_pc;

  const auto p = model.loadings_principal();
  const auto p_res = model.loadings_residual();
  model.proj_pc_ = p * p.transpose();
  model.proj_res_ = p_res * p_res.transpose();

  const double floor = kRankTolerance * std::max(model.eigenvalues_.cwiseAbs().sum(), 1e-300);
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(n_pc);
  for (Eigen::Index j = 0; j < n_pc; ++j) {
    const double lambda = model.eigenvalues_(j);
    if (lambda > floor) inv(j) = 1.0 / lambda;
  }
  model.d_matrix_ = p * inv.asDiagonal() * p.transpose();
  return model;
}

double PcaModel::retained_variance() const {
  const double total = eigenvalues_.sum();
  return total > 0.0 ? eig_principal().sum() / total : 0.0;
}

Eigen::VectorXd PcaModel::standardize(const Eigen::Ref<const Eigen::VectorXd>& sample) const {
  if (sample.size() != n_vars()) {
    throw ValidationError("sample has " + std::to_string(sample.size()) + " values, model expects " +
                          std::to_string(n_vars()));
  }
  if (!sample.allFinite()) throw ValidationError("sample contains non-finite values");
  return (sample - mean_).cwiseQuotient(std_);
}

PcaModel fit_pca(const DataMatrix& normal_data, double r_pc) {
  if (!(r_pc > 0.0 && r_pc <= 1.0)) throw ValidationError("r_pc must lie in (0, 1]");
  check_data_matrix(normal_data);
  const Eigen::Index m = normal_data.rows();
  const Eigen::Index n = normal_data.cols();
  if (m < 2) throw ValidationError("PCA fit needs at least 2 samples");
  if (n < 2) throw ValidationError("PCA fit needs at least 2 variables");

  Eigen::VectorXd mean = normal_data.values.colwise().mean();
  Eigen::MatrixXd centered = normal_data.values.rowwise() - mean.transpose();
  Eigen::VectorXd stddev =
      (centered.colwise().squaredNorm() / static_cast<double>(m - 1)).cwiseSqrt().transpose();
  for (Eigen::Index j = 0; j < n; ++j) {
    if (!(stddev(j) > 1e-12 * std::max(1.0, std::abs(mean(j))))) {
      throw ValidationError("column '" + normal_data.columns[static_cast<std::size_t>(j)] +
                            "' is constant in the training data");
    }
  }
  Eigen::MatrixXd z = centered.array().rowwise() / stddev.transpose().array();
  Eigen::MatrixXd cov = (z.transpose() * z) / static_cast<double>(m - 1);
  cov = 0.5 * (cov + cov.transpose());

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");

  // Eigen returns ascending order.
  Eigen::VectorXd eigenvalues = solver.eigenvalues().reverse();
  Eigen::MatrixXd loadings = solver.eigenvectors().rowwise().reverse();
  fix_signs(loadings);

  const double trace = cov.trace();
  const double target = r_pc * trace - kRankTolerance * trace;
  Eigen::Index k = 0;
  double cumulative = 0.0;
  while (k < n && cumulative < target) cumulative += eigenvalues(k++);
  k = std::max<Eigen::Index>(k, 1);

  return PcaModel::from_parts(normal_data.columns, std::move(mean), std::move(stddev),
                              std::move(eigenvalues), std::move(loadings), k, r_pc);
}

double spe(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample) {
  const Eigen::VectorXd x = model.standardize(sample);
  // P̃ᵀx keeps the quadratic form nonnegative by construction.
  return (model.loadings_residual().transpose() * x).squaredNorm();
}

double t2(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample) {
  const Eigen::VectorXd x = model.standardize(sample);
  return std::max(0.0, x.dot(model.d_matrix() * x));
}

ContributionVector rbc_spe(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample) {
  ContributionVector out;
  out.roster = model.columns();
  out.scores = rbc_from(model.proj_res(), model.standardize(sample), out.degenerate);
  return out;
}

ContributionVector rbc_t2(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample) {
  ContributionVector out;
  out.roster = model.columns();
  out.scores = rbc_from(model.d_matrix(), model.standardize(sample), out.degenerate);
  return out;
}

ContributionVector contribution_rate(const PcaModel& model, const DataMatrix& fault_window,
                                     const ContributionOptions& options) {
  if (fault_window.rows() < 1) throw ValidationError("fault window is empty");
  if (fault_window.columns != model.columns()) {
    throw ValidationError("fault window columns do not match the model roster");
  }

  const Eigen::Index n = model.n_vars();
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(n);
  Eigen::Index used = 0;
  std::vector<std::size_t> degenerate;
  for (Eigen::Index i = 0; i < fault_window.rows(); ++i) {
    const Eigen::VectorXd row = fault_window.values.row(i).transpose();
    ContributionVector raw = options.statistic == RbcStatistic::Spe ? rbc_spe(model, row)
                                                                    : rbc_t2(model, row);
    if (i == 0) degenerate = std::move(raw.degenerate);
    const double total = raw.scores.sum();
    if (options.order == NormalizationOrder::PerSample) {
      if (!(total > 0.0)) continue;
      sum += raw.scores / total;
    } else {
      sum += raw.scores;
    }
    ++used;
  }

  const double total = sum.sum();
  if (used == 0 || !(total > 0.0)) {
    throw ValidationError("every sample in the fault window has zero contribution");
  }

  ContributionVector out;
  out.roster = model.columns();
  out.scores = sum / total;
  out.degenerate = std::move(degenerate);
  return out;
}

}  // namespace rootkgd::features
