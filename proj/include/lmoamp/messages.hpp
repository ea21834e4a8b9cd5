#pragma once

#include <optional>
#include <vector>

#include "lmoamp/combiner.hpp"
#include "lmoamp/types.hpp"

namespace lmoamp {

/// Stacked mean messages of one direction and their error covariance.
///
/// Each stored message also remembers the Onsager coefficient xi of the
/// module that produced it, and (for A-to-B messages) the LMMSE gains of the
/// filter that produced it; both are needed for later covariance entries.
class MessageHistory {
public:
  explicit MessageHistory(std::optional<Index> window = std::nullopt);

  /// Appends a message. cov_row holds the covariances with every stored
  /// message followed by the new diagonal entry (length size() + 1).
  void push(const Vector& mean, const Vector& cov_row, double producer_xi, Vector gains = Vector());

  Index size() const { return cov_.rows(); }
  bool empty() const { return size() == 0; }
  const Matrix& means() const { return means_; }
  const Matrix& covariance() const { return cov_; }
  const std::vector<double>& producer_xi() const { return xi_; }
  const std::vector<Vector>& gains() const { return gains_; }

  SufficientStatistic<double> combine() const { return lmoamp::combine(means_, cov_, true); }

private:
  void drop_oldest();

  std::optional<Index> window_;
  Matrix means_;
  Matrix cov_;
  std::vector<double> xi_;
  std::vector<Vector> gains_;
};

struct ExtrinsicMessage {
  Vector mean;
  Vector cov_row;
};

/// (x_post - xi * x_suf) / (1 - xi), the literal Onsager sum over the history
/// folded through weights that sum to one.
Vector onsager_mean(const Vector& x_post, const Vector& x_suf, double xi);

/// Entries (v_post[k] - xi_k xi v_suf[k]) / ((1 - xi_k)(1 - xi)).
Vector extrinsic_cov_row(const Vector& post_row, const std::vector<double>& xi_history, double xi,
                         const Vector& v_suf_row);

/// Throws DegenerateError when |1 - xi| <= 1e-12.
void check_onsager_divisor(double xi, const char* module);

}  // namespace lmoamp
