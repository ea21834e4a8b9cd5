#include "lmoamp/combiner.hpp"

namespace lmoamp {

template CombinerWeights<double> solve_weights(const Eigen::MatrixBase<Matrix>&);
template CombinerWeights<double> solve_weights_structured(const Eigen::MatrixBase<Matrix>&, double);
template SufficientStatistic<double> combine(const Eigen::MatrixBase<Matrix>&, const Eigen::MatrixBase<Matrix>&,
                                             bool);

}  // namespace lmoamp
