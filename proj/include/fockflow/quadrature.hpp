#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Core>
#include <Eigen/Eigenvalues>

namespace fockflow {

// Quadrature rule for averages over a standard normal variable:
// sum_k weight[k] * f(node[k]) approximates E[f(X)] with X ~ N(0, 1).
// Weights are positive and sum to one.
struct GaussHermiteRule {
    Eigen::ArrayXd nodes;
    Eigen::ArrayXd weights;

    int order() const { return static_cast<int>(nodes.size()); }
};

// Golub-Welsch construction from the probabilists' Hermite recurrence.
// The Jacobi matrix is symmetric tridiagonal with zero diagonal and
// off-diagonal sqrt(k); eigenvalues are the nodes and the squared first
// eigenvector components the weights (total mass one).
inline GaussHermiteRule gauss_hermite(int order) {
    if (order < 1) throw std::invalid_argument("gauss_hermite: order must be at least 1");
    if (order == 1) return {Eigen::ArrayXd::Zero(1), Eigen::ArrayXd::Ones(1)};

    Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(order, order);
    for (int k = 1; k < order; ++k) {
        const double b = std::sqrt(static_cast<double>(k));
        jacobi(k, k - 1) = b;
        jacobi(k - 1, k) = b;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
    if (solver.info() != Eigen::Success)
        throw std::runtime_error("gauss_hermite: eigensolver failed");

    GaussHermiteRule rule;
    rule.nodes = solver.eigenvalues().array();
    rule.weights = solver.eigenvectors().row(0).array().square();
    rule.weights /= rule.weights.sum();
    return rule;
}

}  // namespace fockflow
