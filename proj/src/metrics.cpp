#include "cusal/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

namespace cusal {

namespace {

void same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shapes differ (" +
                                              std::to_string(a.rows()) + "x" +
                                              std::to_string(a.cols()) + " vs " +
                                              std::to_string(b.rows()) + "x" +
                                              std::to_string(b.cols()) + ")");
}

}  // namespace

const char* to_string(MetricName name) {
  switch (name) {
    case MetricName::RMSE: return "RMSE";
    case MetricName::SRE_dB: return "SRE_dB";
    case MetricName::SAD_rad: return "SAD_rad";
  }
  return "Unknown";
}

MetricName parse_metric_name(const std::string& text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "rmse") return MetricName::RMSE;
  if (lower == "sre" || lower == "sre_db") return MetricName::SRE_dB;
  if (lower == "sad" || lower == "sad_rad") return MetricName::SAD_rad;
  throw Error(ErrorCode::InvalidInput, "unknown metric '" + text + "'");
}

MetricResult rmse(const Matrix& X_true, const Matrix& X_hat) {
  same_shape(X_true, X_hat, "rmse");
  if (X_true.size() == 0) throw Error(ErrorCode::UndefinedMetric, "rmse of empty matrices");
  const double value =
      std::sqrt((X_true - X_hat).squaredNorm() / static_cast<double>(X_true.size()));
  return {MetricName::RMSE, value, X_true.cols()};
}

MetricResult sre_db(const Matrix& X_true, const Matrix& X_hat) {
  same_shape(X_true, X_hat, "sre");
  const double signal = X_true.squaredNorm();
  if (!(signal > 0.0))
    throw Error(ErrorCode::UndefinedMetric, "SRE is undefined for an all-zero reference");
  const double error = (X_true - X_hat).squaredNorm();
  const double value = error > 0.0 ? 10.0 * std::log10(signal / error)
                                   : std::numeric_limits<double>::infinity();
  return {MetricName::SRE_dB, value, X_true.cols()};
}

MetricResult sad(const Matrix& Y, const Matrix& Y_hat,
                 const std::vector<Index>& exclude_bands) {
  same_shape(Y, Y_hat, "sad");
  std::vector<bool> keep(static_cast<std::size_t>(Y.rows()), true);
  for (Index l : exclude_bands) {
    if (l < 0 || l >= Y.rows())
      throw Error(ErrorCode::InvalidInput,
                  "excluded band " + std::to_string(l) + " is out of range");
    keep[l] = false;
  }
  if (Y.cols() == 0) throw Error(ErrorCode::UndefinedMetric, "sad of an empty cube");
  double total = 0.0;
  for (Index t = 0; t < Y.cols(); ++t) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (Index l = 0; l < Y.rows(); ++l) {
      if (!keep[l]) continue;
      dot += Y(l, t) * Y_hat(l, t);
      na += Y(l, t) * Y(l, t);
      nb += Y_hat(l, t) * Y_hat(l, t);
    }
    if (!(na > 0.0) || !(nb > 0.0))
      throw Error(ErrorCode::ZeroNormSpectrum,
                  "pixel " + std::to_string(t) + " has a zero-norm spectrum");
    total += std::acos(std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0));
  }
  return {MetricName::SAD_rad, total / static_cast<double>(Y.cols()), Y.cols()};
}

MetricResult sad_reconstruction(const Matrix& Y, const Matrix& M, const Matrix& X_hat,
                                const std::vector<Index>& exclude_bands) {
  if (M.cols() != X_hat.rows())
    throw Error(ErrorCode::ShapeMismatch, "sad: M and X_hat do not conform");
  return sad(Y, M * X_hat, exclude_bands);
}

}  // namespace cusal
