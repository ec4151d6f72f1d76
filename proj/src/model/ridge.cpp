#include "comformer/model/ridge.hpp"

#include "comformer/error.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace comformer::model {

double RidgeModel::predict(const std::vector<double>& x) const {
  if (x.size() != weights.size()) throw Error(ErrorCode::kShapeMismatch, "feature width does not match the readout");
  double y = intercept;
  for (std::size_t c = 0; c < x.size(); ++c) y += weights[c] * x[c];
  return y;
}

RidgeModel fit_readout_ridge(const std::vector<std::vector<double>>& features, const std::vector<double>& targets,
                             double lambda) {
  if (features.empty()) throw Error(ErrorCode::kInvalidArgument, "ridge fit needs at least one row");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw Error(ErrorCode::kInvalidArgument, "lambda must be finite and >= 0");
  if (targets.size() != features.size()) throw Error(ErrorCode::kShapeMismatch, "one target per feature row");
  const auto rows = static_cast<Eigen::Index>(features.size());
  const auto cols = static_cast<Eigen::Index>(features.front().size());

  Eigen::MatrixXd x(rows, cols);
  Eigen::VectorXd y(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = features[static_cast<std::size_t>(r)];
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::kShapeMismatch, "ragged feature matrix");
    for (Eigen::Index c = 0; c < cols; ++c) {
      if (!std::isfinite(row[static_cast<std::size_t>(c)])) throw Error(ErrorCode::kNonfiniteInput, "non-finite feature");
      x(r, c) = row[static_cast<std::size_t>(c)];
    }
    y(r) = targets[static_cast<std::size_t>(r)];
    if (!std::isfinite(y(r))) throw Error(ErrorCode::kNonfiniteInput, "non-finite target");
  }
  const Eigen::RowVectorXd x_mean = x.colwise().mean();
  const double y_mean = y.mean();
  x.rowwise() -= x_mean;
  y.array() -= y_mean;

  // Least squares on [X; sqrt(lambda) I] avoids forming X^T X.
  Eigen::MatrixXd a(rows + cols, cols);
  a.topRows(rows) = x;
  a.bottomRows(cols) = std::sqrt(lambda) * Eigen::MatrixXd::Identity(cols, cols);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(rows + cols);
  b.head(rows) = y;
  const Eigen::VectorXd w = a.colPivHouseholderQr().solve(b);

  RidgeModel model;
  model.weights.assign(w.data(), w.data() + w.size());
  model.intercept = y_mean - x_mean.dot(w);
  return model;
}

double r2_score(const std::vector<double>& truth, const std::vector<double>& predicted) {
  if (truth.size() != predicted.size() || truth.empty()) throw Error(ErrorCode::kShapeMismatch, "r2 needs equal, non-empty inputs");
  double mean = 0.0;
  for (double t : truth) mean += t;
  mean /= static_cast<double>(truth.size());
  double ss_res = 0.0;
  double ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    ss_res += (truth[i] - predicted[i]) * (truth[i] - predicted[i]);
    ss_tot += (truth[i] - mean) * (truth[i] - mean);
  }
  return ss_tot == 0.0 ? (ss_res == 0.0 ? 1.0 : 0.0) : 1.0 - ss_res / ss_tot;
}

}  // namespace comformer::model
