#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace meltctl {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

}  // namespace meltctl
