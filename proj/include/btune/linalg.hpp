#pragma once

#include <Eigen/Dense>

namespace btune {

// Cholesky factorization with escalating diagonal jitter: tries the matrix
// as-is, then adds 1e-10 scaled up tenfold per retry until 1e-6, then throws.
Eigen::LLT<Eigen::MatrixXd> llt_with_jitter(Eigen::MatrixXd a);

}  // namespace btune
