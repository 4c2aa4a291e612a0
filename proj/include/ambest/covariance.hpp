#pragma once

#include "ambest/linearize.hpp"

#include <Eigen/Eigenvalues>

namespace ambest {

/// Max-norm of A K + K A^T + B B^T.
inline double lyapunov_residual(const Mat& a, const Mat& k, const Mat& b) {
    return (a * k + k * a.transpose() + b * b.transpose()).cwiseAbs().maxCoeff();
}

/// Steady-state covariance of dX = A X dt + B dW: solves
/// A K + K A^T + B B^T = 0 by the Schur-form column recursion
/// (Bartels-Stewart). A must be Hurwitz. K is symmetrized after the solve.
inline Mat solve_lyapunov(const Mat& a, const Mat& b) {
    const int n = static_cast<int>(a.rows());
    if (a.cols() != n) throw ConfigError("solve_lyapunov: A must be square");
    if (b.rows() != n) throw ConfigError("solve_lyapunov: B row count mismatch");
    if (n == 0) return Mat::Zero(0, 0);

    Eigen::ComplexSchur<Mat> schur(a, true);
    if (schur.info() != Eigen::Success)
        throw NumericalError("solve_lyapunov: Schur decomposition failed");
    const CMat& u = schur.matrixU();
    const CMat& t = schur.matrixT();
    for (int i = 0; i < n; ++i)
        if (t(i, i).real() >= 0.0)
            throw NumericalError(
                "solve_lyapunov: drift is not Hurwitz (eigenvalue with Re >= 0)");

    // transform A K + K A^T = -B B^T into T Y + Y T^H = F
    const Mat q = b * b.transpose();
    const CMat f = u.adjoint() * (-q).cast<cplx>() * u;
    CMat y = CMat::Zero(n, n);
    const CMat t_adj = t.adjoint();
    CMat shifted = t;
    for (int k = n - 1; k >= 0; --k) {
        CVec rhs = f.col(k) - y * t_adj.col(k);
        const cplx offset = t_adj(k, k);
        shifted.diagonal().array() += offset;
        y.col(k) = shifted.triangularView<Eigen::Upper>().solve(rhs);
        shifted.diagonal().array() -= offset;
    }
    Mat k_xt = (u * y * u.adjoint()).real();
    k_xt = 0.5 * (k_xt + k_xt.transpose()).eval();
    return k_xt;
}

struct CovarianceResult {
    Mat k_xt;
    std::map<std::string, double> k_zeta; ///< selected measurement variances
    double residual_norm = 0.0;
};

/// Quadratic-form propagation: variance of measurement row e_i is
/// e_i K e_i^T.
inline std::map<std::string, double>
measurement_variances(const LinearizedSystem& sys, const Mat& k_xt,
                      std::span<const std::string> names) {
    std::map<std::string, double> out;
    for (const auto& name : names) {
        const int row = sys.meas_pos(name);
        const double var =
            (sys.e.row(row) * k_xt * sys.e.row(row).transpose()).value();
        out[name] = std::max(var, 0.0);
    }
    return out;
}

/// Convenience bundle: Lyapunov solve plus selected variances with the
/// reported residual.
inline CovarianceResult covariance(const LinearizedSystem& sys,
                                   std::span<const std::string> names) {
    CovarianceResult res;
    res.k_xt = solve_lyapunov(sys.a, sys.b);
    res.residual_norm = lyapunov_residual(sys.a, res.k_xt, sys.b);
    res.k_zeta = measurement_variances(sys, res.k_xt, names);
    return res;
}

/// d(variance)/d(param) by central differences through the update_lambda
/// fast path, relative step rel_step.
inline std::map<std::string, double>
variance_sensitivity(const LinearizedSystem& sys, std::span<const std::string> names,
                     const std::string& param, double param_value,
                     double rel_step = 1e-4) {
    const double h = rel_step * std::max(1.0, std::abs(param_value));
    const auto up = update_lambda(sys, {{param, param_value + h}});
    const auto dn = update_lambda(sys, {{param, param_value - h}});
    const auto vp = measurement_variances(up, solve_lyapunov(up.a, up.b), names);
    const auto vn = measurement_variances(dn, solve_lyapunov(dn.a, dn.b), names);
    std::map<std::string, double> out;
    for (const auto& name : names)
        out[name] = (vp.at(name) - vn.at(name)) / (2.0 * h);
    return out;
}

} // namespace ambest
