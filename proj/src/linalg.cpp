#include "btune/linalg.hpp"

#include <stdexcept>

namespace btune {

Eigen::LLT<Eigen::MatrixXd> llt_with_jitter(Eigen::MatrixXd a) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const Eigen::Index n = a.rows();
  for (double jitter = 1e-10; jitter <= 1.0000001e-6; jitter *= 10.0) {
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
    if (llt.info() == Eigen::Success) return llt;
  }
  throw std::runtime_error("llt_with_jitter: matrix of size " + std::to_string(n) +
                           " not positive definite after jitter escalation");
}

}  // namespace btune
