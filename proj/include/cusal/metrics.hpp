#ifndef CUSAL_METRICS_HPP
#define CUSAL_METRICS_HPP

#include "cusal/core.hpp"

#include <string>
#include <vector>

namespace cusal {

enum class MetricName { RMSE, SRE_dB, SAD_rad };

const char* to_string(MetricName name);
/// Accepts rmse, sre, sre_db, sad, sad_rad in any case.
MetricName parse_metric_name(const std::string& text);

struct MetricResult {
  MetricName name;
  double value;    ///< +inf for a perfect SRE
  Index n_items;   ///< pixels averaged
};

/// sqrt(1/(R T) * sum_t ||x_t - xhat_t||^2).
MetricResult rmse(const Matrix& X_true, const Matrix& X_hat);

/// 10 log10(sum_t ||x_t||^2 / sum_t ||x_t - xhat_t||^2); +inf on zero error.
MetricResult sre_db(const Matrix& X_true, const Matrix& X_hat);

/// Mean per-pixel spectral angle in radians, skipping the listed band rows.
MetricResult sad(const Matrix& Y, const Matrix& Y_hat,
                 const std::vector<Index>& exclude_bands = {});

/// sad(Y, M X_hat, exclude_bands).
MetricResult sad_reconstruction(const Matrix& Y, const Matrix& M, const Matrix& X_hat,
                                const std::vector<Index>& exclude_bands = {});

}  // namespace cusal

#endif  // CUSAL_METRICS_HPP
