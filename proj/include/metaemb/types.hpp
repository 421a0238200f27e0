#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

namespace metaemb {

// Row-major so that one row is one word (or one batch sample).
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Index = Eigen::Index;
using IndexList = std::vector<Index>;

}  // namespace metaemb
