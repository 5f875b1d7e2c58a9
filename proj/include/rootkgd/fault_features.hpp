#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rootkgd/dataset.hpp"

namespace rootkgd::features {

/// PCA monitoring model fitted on z-scored normal-operation data.
///
/// Loadings hold every eigenvector of the training covariance, one per column,
/// ordered by descending eigenvalue; the first `n_pc` columns span the principal
/// subspace and the rest the residual subspace. Each column is signed so that
/// its largest-magnitude entry is positive.
class PcaModel {
 public:
  PcaModel() = default;

  /// Assembles a model from stored parts and derives the projection matrices.
  /// Throws ValidationError on inconsistent dimensions or non-positive std.
  static PcaModel from_parts(std::vector<std::string> columns, Eigen::VectorXd mean,
                             Eigen::VectorXd stddev, Eigen::VectorXd eigenvalues,
                             Eigen::MatrixXd loadings, Eigen::Index n_pc, double r_pc);

  const std::vector<std::string>& columns() const { return columns_; }
  Eigen::Index n_vars() const { return mean_.size(); }
  Eigen::Index n_pc() const { return n_pc_; }
  double r_pc() const { return r_pc_; }

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::VectorXd& stddev() const { return std_; }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  const Eigen::MatrixXd& loadings() const { return loadings_; }

  auto loadings_principal() const { return loadings_.leftCols(n_pc_); }
  auto loadings_residual() const { return loadings_.rightCols(n_vars() - n_pc_); }
  auto eig_principal() const { return eigenvalues_.head(n_pc_); }
  auto eig_residual() const { return eigenvalues_.tail(n_vars() - n_pc_); }

  /// C = P Pᵀ
  const Eigen::MatrixXd& proj_pc() const { return proj_pc_; }
  /// C̃ = P̃ P̃ᵀ
  const Eigen::MatrixXd& proj_res() const { return proj_res_; }
  /// D = P Λ⁻¹ Pᵀ
  const Eigen::MatrixXd& d_matrix() const { return d_matrix_; }

  /// Fraction of total variance captured by the principal subspace.
  double retained_variance() const;

  /// z-scores a raw sample. Throws ValidationError on length mismatch or non-finite input.
  Eigen::VectorXd standardize(const Eigen::Ref<const Eigen::VectorXd>& sample) const;

 private:
  std::vector<std::string> columns_;
  Eigen::VectorXd mean_;
  Eigen::VectorXd std_;
  Eigen::VectorXd eigenvalues_;
  Eigen::MatrixXd loadings_;
  Eigen::Index n_pc_ = 0;
  double r_pc_ = 1.0;
  Eigen::MatrixXd proj_pc_;
  Eigen::MatrixXd proj_res_;
  Eigen::MatrixXd d_matrix_;
};

/// Fits the model on `normal_data`, keeping the fewest leading components whose
/// eigenvalues sum to at least `r_pc` of the total variance.
PcaModel fit_pca(const DataMatrix& normal_data, double r_pc);

/// Squared prediction error of a raw sample: xᵀC̃x on the z-scored sample.
double spe(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample);

/// Hotelling T² of a raw sample: xᵀDx on the z-scored sample.
double t2(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample);

/// Per-variable contribution scores aligned with `roster`.
struct ContributionVector {
  std::vector<std::string> roster;
  Eigen::VectorXd scores;
  /// Variables whose reconstruction denominator vanished; their score is 0.
  std::vector<std::size_t> degenerate;
};

/// Diagonal entries at or below this are treated as zero in the RBC denominators.
inline constexpr double kDegenerateDiagonal = 1e-12;

/// Reconstruction-based contribution to SPE: (ξᵢᵀC̃x)² / c̃ᵢᵢ.
ContributionVector rbc_spe(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample);

/// Reconstruction-based contribution to T²: (ξᵢᵀDx)² / dᵢᵢ.
ContributionVector rbc_t2(const PcaModel& model, const Eigen::Ref<const Eigen::VectorXd>& sample);

enum class RbcStatistic { Spe, T2 };
enum class NormalizationOrder { PerSample, PostAverage };

struct ContributionOptions {
  RbcStatistic statistic = RbcStatistic::Spe;
  NormalizationOrder order = NormalizationOrder::PerSample;
};

/// Window-averaged contribution rate, summing to 1.
///
/// PerSample normalizes each row's raw RBC to sum 1 (all-zero rows skipped),
/// averages, and renormalizes. PostAverage averages raw RBC first.
/// Throws ValidationError for an empty window, a column mismatch, or when no
/// row has a nonzero contribution.
ContributionVector contribution_rate(const PcaModel& model, const DataMatrix& fault_window,
                                     const ContributionOptions& options = {});

}  // namespace rootkgd::features
