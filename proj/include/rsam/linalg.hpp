#pragma once

#include <Eigen/Dense>

namespace rsam {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const MatrixXd& sym);

// Symmetric PSD square root; eigenvalues below zero are clipped.
MatrixXd psd_sqrt(const MatrixXd& sym);

// Symmetric positive-definite inverse square root.
MatrixXd spd_inv_sqrt(const MatrixXd& sym);

// Numerical rank via singular values above max(rows,cols)*eps*sigma_max.
int numerical_rank(const MatrixXd& A);

// Moore-Penrose pseudoinverse (SVD-based).
MatrixXd pinv(const MatrixXd& A);

// exp(A) for a square matrix.
MatrixXd expm(const MatrixXd& A);

// I1 = integral_0^dt exp(B s) ds  (Van Loan block exponential).
MatrixXd ou_drift_integral(const MatrixXd& B, double dt);

// C  = integral_0^dt exp(B s) QQt exp(B' s) ds with QQt = Lambda Lambda'.
MatrixXd ou_covariance_integral(const MatrixXd& B, const MatrixXd& QQt, double dt);

}  // namespace rsam
