#pragma once

#include <Eigen/Core>

namespace msd::detail {

/// Gauss-Legendre rule on [-1, 1].
struct GaussLegendre {
    Eigen::ArrayXd nodes;
    Eigen::ArrayXd weights;
};

GaussLegendre make_gauss_legendre(int points);

/// Shared 32-point rule, built once.
const GaussLegendre& gauss_legendre_32();

}  // namespace msd::detail
