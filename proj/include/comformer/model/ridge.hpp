#pragma once

#include <cstddef>
#include <vector>

namespace comformer::model {

/// Linear readout y = w . x + intercept.
struct RidgeModel {
  std::vector<double> weights;
  double intercept = 0.0;

  [[nodiscard]] double predict(const std::vector<double>& x) const;
};

/// Solves (F^T F + lambda I) w = F^T y on column-centered features; the
/// intercept is unpenalized. Rows of `features` must share one width.
/// Errors: NonfiniteInput, ShapeMismatch, InvalidArgument (lambda < 0, no rows).
RidgeModel fit_readout_ridge(const std::vector<std::vector<double>>& features, const std::vector<double>& targets,
                             double lambda);

/// Coefficient of determination; 1 - SS_res / SS_tot. Errors: ShapeMismatch.
double r2_score(const std::vector<double>& truth, const std::vector<double>& predicted);

}  // namespace comformer::model
