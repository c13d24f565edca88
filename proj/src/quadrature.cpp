#include "quadrature.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace msd::detail {

// Golub-Welsch: nodes are the eigenvalues of the Jacobi matrix of the
// Legendre recurrence, weights are 2 * (first eigenvector component)^2.
GaussLegendre make_gauss_legendre(int points) {
    if (points < 1) {
        throw std::invalid_argument("Gauss-Legendre rule needs at least one point");
    }
    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(points, points);
    for (int k = 1; k < points; ++k) {
        const double b = k / std::sqrt(4.0 * k * k - 1.0);
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    GaussLegendre rule;
    rule.nodes = solver.eigenvalues().array();
    rule.weights = 2.0 * solver.eigenvectors().row(0).transpose().array().square();
    return rule;
}

const GaussLegendre& gauss_legendre_32() {
    static const GaussLegendre rule = make_gauss_legendre(32);
    return rule;
}

}  // namespace msd::detail
