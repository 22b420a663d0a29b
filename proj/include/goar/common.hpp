#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

namespace goar {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

// Ranking score used wherever "top-k" coordinates are selected.
enum class RankBy { value, magnitude };

}  // namespace goar
