#include "lmoamp/messages.hpp"

#include <cmath>
#include <string>

namespace lmoamp {

MessageHistory::MessageHistory(std::optional<Index> window) : window_(window) {
  if (window_ && *window_ < 1) throw PreconditionError("memory window must be at least 1");
}

void MessageHistory::push(const Vector& mean, const Vector& cov_row, double producer_xi, Vector gains) {
  const Index k = size();
  if (cov_row.size() != k + 1) throw DimensionError("MessageHistory::push: covariance row has wrong length");
  if (k > 0 && mean.size() != means_.rows()) throw DimensionError("MessageHistory::push: mean length changed");
  if (!cov_row.allFinite()) throw DomainError("MessageHistory::push: non-finite covariance");
  if (!(cov_row[k] > 0.0)) throw DomainError("MessageHistory::push: diagonal covariance must be positive");

  means_.conservativeResize(mean.size(), k + 1);
  means_.col(k) = mean;
  cov_.conservativeResize(k + 1, k + 1);
  cov_.row(k) = cov_row.transpose();
  cov_.col(k) = cov_row;
  xi_.push_back(producer_xi);
  gains_.push_back(std::move(gains));
  if (window_ && size() > *window_) drop_oldest();
}

void MessageHistory::drop_oldest() {
  const Index k = size() - 1;
  means_ = Matrix(means_.rightCols(k));
  cov_ = Matrix(cov_.bottomRightCorner(k, k));
  xi_.erase(xi_.begin());
  gains_.erase(gains_.begin());
}

Vector onsager_mean(const Vector& x_post, const Vector& x_suf, double xi) {
  return (x_post - xi * x_suf) / (1.0 - xi);
}

Vector extrinsic_cov_row(const Vector& post_row, const std::vector<double>& xi_history, double xi,
                         const Vector& v_suf_row) {
  const Index n = post_row.size();
  if (Index(xi_history.size()) != n || v_suf_row.size() != n) {
    throw DimensionError("extrinsic_cov_row: row lengths disagree");
  }
  Vector row(n);
  for (Index k = 0; k < n; ++k) {
    const double xk = xi_history[std::size_t(k)];
    row[k] = (post_row[k] - xk * xi * v_suf_row[k]) / ((1.0 - xk) * (1.0 - xi));
  }
  return row;
}

void check_onsager_divisor(double xi, const char* module) {
  if (!std::isfinite(xi) || std::abs(1.0 - xi) <= 1e-12) {
    throw DegenerateError(std::string(module) + ": Onsager coefficient xi = " + std::to_string(xi) +
                          " leaves no extrinsic information (|1 - xi| <= 1e-12)");
  }
}

}  // namespace lmoamp
