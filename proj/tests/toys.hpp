#pragma once

#include "ambest/model.hpp"

// Minimal hand-built systems for exercising the linearization, covariance
// and SDE machinery without a power grid.

namespace ambest::toys {

/// Bank of OU processes, nothing else (n_states = n_algs = 0).
class OuOnly : public SystemModel {
public:
    explicit OuOnly(std::vector<OuParams> ou) : ou_(std::move(ou)) {
        for (size_t i = 0; i < ou_.size(); ++i)
            noise_names_.push_back("eta:z" + std::to_string(i));
        xi_ = Mat::Zero(0, static_cast<int>(ou_.size()));
    }
    int n_states() const override { return 0; }
    int n_algs() const override { return 0; }
    int n_noise() const override { return static_cast<int>(ou_.size()); }
    const Vec& lambda_diag() const override { return empty_; }
    const Mat& xi_inject() const override { return xi_; }
    const std::vector<OuParams>& ou() const override { return ou_; }
    const std::vector<std::string>& state_names() const override { return none_; }
    const std::vector<std::string>& alg_names() const override { return none_; }
    const std::vector<std::string>& noise_names() const override { return noise_names_; }
    const Vec& state_eq() const override { return empty_; }
    const Vec& alg_eq() const override { return empty_; }
    void eval_f(const Vec&, const Vec&, Vec& out) const override { out.resize(0); }
    void eval_g(const Vec&, const Vec&, const Vec&, Vec& out) const override {
        out.resize(0);
    }

private:
    std::vector<OuParams> ou_;
    std::vector<std::string> noise_names_, none_;
    Vec empty_;
    Mat xi_;
};

/// Scalar relaxation driven by one OU process through an algebraic slot:
///   x' = a*x + c*z,   0 = -z + eta.
/// The continuous stationary variance of x is
///   c^2 sigma^2 / (2 upsilon (upsilon - a) ... ) -- see var_x().
class Relax : public SystemModel {
public:
    Relax(double a, double c, OuParams ou, double coupling_xi = 1.0)
        : a_(a), c_(c), ou_{ou} {
        lambda_ = Vec::Ones(1);
        x0_ = Vec::Zero(1);
        z0_ = Vec::Zero(1);
        xi_ = Mat::Constant(1, 1, coupling_xi);
        state_names_ = {"x"};
        alg_names_ = {"z"};
        noise_names_ = {"eta:z0"};
    }
    int n_states() const override { return 1; }
    int n_algs() const override { return 1; }
    int n_noise() const override { return 1; }
    const Vec& lambda_diag() const override { return lambda_; }
    const Mat& xi_inject() const override { return xi_; }
    const std::vector<OuParams>& ou() const override { return ou_; }
    const std::vector<std::string>& state_names() const override { return state_names_; }
    const std::vector<std::string>& alg_names() const override { return alg_names_; }
    const std::vector<std::string>& noise_names() const override { return noise_names_; }
    const Vec& state_eq() const override { return x0_; }
    const Vec& alg_eq() const override { return z0_; }
    void eval_f(const Vec& x, const Vec& z, Vec& out) const override {
        out.resize(1);
        out(0) = a_ * x(0) + c_ * z(0);
    }
    void eval_g(const Vec&, const Vec& z, const Vec& eta, Vec& out) const override {
        out.resize(1);
        out(0) = -z(0) + xi_(0, 0) * (eta.size() > 0 ? eta(0) : 0.0);
    }

    /// Continuous-time stationary variance of x (2x2 Lyapunov closed form).
    double var_x() const {
        const double u = ou_[0].upsilon, s = ou_[0].sigma;
        const double k_ee = s * s / (2.0 * u);
        const double k_xe = c_ * xi_(0, 0) * k_ee / (u - a_);
        return -c_ * xi_(0, 0) * k_xe / a_;
    }

private:
    double a_, c_;
    std::vector<OuParams> ou_;
    Vec lambda_, x0_, z0_;
    Mat xi_;
    std::vector<std::string> state_names_, alg_names_, noise_names_;
};

} // namespace ambest::toys
