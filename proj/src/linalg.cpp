#include "rsam/linalg.hpp"

#include <unsupported/Eigen/MatrixFunctions>

#include "rsam/errors.hpp"

namespace rsam {

double min_eigenvalue(const MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

MatrixXd psd_sqrt(const MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    VectorXd d = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

MatrixXd spd_inv_sqrt(const MatrixXd& sym) {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(sym);
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw DomainError("spd_inv_sqrt: matrix is not positive definite");
    VectorXd d = es.eigenvalues().cwiseSqrt().cwiseInverse();
    return es.eigenvectors() * d.asDiagonal() * es.eigenvectors().transpose();
}

int numerical_rank(const MatrixXd& A) {
    if (A.size() == 0) return 0;
    Eigen::JacobiSVD<MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) == 0.0) return 0;
    const double tol = std::max(A.rows(), A.cols()) *
                       std::numeric_limits<double>::epsilon() * sv(0);
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
        if (sv(i) > tol) ++r;
    return r;
}

MatrixXd pinv(const MatrixXd& A) {
    Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(A);
    return cod.pseudoInverse();
}

MatrixXd expm(const MatrixXd& A) { return A.exp(); }

MatrixXd ou_drift_integral(const MatrixXd& B, double dt) {
    const int n = static_cast<int>(B.rows());
    MatrixXd blk = MatrixXd::Zero(2 * n, 2 * n);
    blk.topLeftCorner(n, n) = B;
    blk.topRightCorner(n, n) = MatrixXd::Identity(n, n);
    MatrixXd F = expm(blk * dt);
    return F.topRightCorner(n, n);
}

MatrixXd ou_covariance_integral(const MatrixXd& B, const MatrixXd& QQt, double dt) {
    const int n = static_cast<int>(B.rows());
    MatrixXd blk = MatrixXd::Zero(2 * n, 2 * n);
    blk.topLeftCorner(n, n) = B;
    blk.topRightCorner(n, n) = QQt;
    blk.bottomRightCorner(n, n) = -B.transpose();
    MatrixXd F = expm(blk * dt);
    // F12 = int exp(B(dt-s)) QQt exp(-B's) ds, so C = F12 * exp(B' dt).
    MatrixXd C = F.topRightCorner(n, n) * expm(B.transpose() * dt);
    return 0.5 * (C + C.transpose());
}

}  // namespace rsam
