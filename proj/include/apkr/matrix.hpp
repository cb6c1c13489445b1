#pragma once

#include <Eigen/Dense>

namespace apkr {

// Row-major layout matches the on-disk format and keeps data points (rows)
// contiguous for the kernel machinery.
using DenseMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

}  // namespace apkr
