#include <catch2/catch_amalgamated.hpp>

#include "ambest/covariance.hpp"
#include "ambest/rng.hpp"

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/KroneckerProduct>

using namespace ambest;
using Catch::Approx;

namespace {

/// Independent oracle: vec(K) = -(I (x) A + A (x) I)^-1 vec(B B^T).
Mat lyapunov_kron_oracle(const Mat& a, const Mat& b) {
    const int n = static_cast<int>(a.rows());
    const Mat q = b * b.transpose();
    const Mat eye = Mat::Identity(n, n);
    Mat big = Eigen::kroneckerProduct(eye, a).eval() +
              Eigen::kroneckerProduct(a, eye).eval();
    Vec rhs(n * n);
    for (int c = 0; c < n; ++c) rhs.segment(c * n, n) = q.col(c);
    const Vec x = big.fullPivLu().solve(-rhs);
    Mat k(n, n);
    for (int c = 0; c < n; ++c) k.col(c) = x.segment(c * n, n);
    return k;
}

Mat random_stable(int n, int z, CounterRng& rng, std::uint64_t& ctr, Mat& b_out) {
    Mat a(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) a(i, j) = rng.normal(ctr++);
    const double shift = a.eigenvalues().real().maxCoeff();
    a -= (shift + 0.2 + rng.uniform(ctr++)) * Mat::Identity(n, n);
    b_out.resize(n, z);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < z; ++j) b_out(i, j) = rng.normal(ctr++);
    return a;
}

} // namespace

TEST_CASE("lyapunov: scalar OU variance") {
    Mat a(1, 1), b(1, 1);
    a << -0.5;
    b << 0.1;
    const Mat k = solve_lyapunov(a, b);
    REQUIRE(k(0, 0) == Approx(0.01).epsilon(1e-12)); // beta^2/(2 alpha)
}

TEST_CASE("lyapunov: diagonal OU bank") {
    const int z = 4;
    Mat a = Mat::Zero(z, z), b = Mat::Zero(z, z);
    const double ups[z] = {0.5, 1.0, 2.0, 0.25};
    const double sig[z] = {0.1, 0.2, 0.05, 0.3};
    for (int i = 0; i < z; ++i) {
        a(i, i) = -ups[i];
        b(i, i) = sig[i];
    }
    const Mat k = solve_lyapunov(a, b);
    for (int i = 0; i < z; ++i) {
        for (int j = 0; j < z; ++j) {
            if (i == j)
                REQUIRE(k(i, i) == Approx(sig[i] * sig[i] / (2.0 * ups[i])).epsilon(1e-12));
            else
                REQUIRE(k(i, j) == Approx(0.0).margin(1e-14));
        }
    }
}

TEST_CASE("lyapunov: random stable systems match the Kronecker oracle") {
    CounterRng rng(42, 0);
    std::uint64_t ctr = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform(ctr++) * 10);
        const int z = 1 + static_cast<int>(rng.uniform(ctr++) * 3);
        Mat b;
        const Mat a = random_stable(n, z, rng, ctr, b);
        const Mat k = solve_lyapunov(a, b);
        const Mat k_ref = lyapunov_kron_oracle(a, b);
        const double scale = k_ref.cwiseAbs().maxCoeff();
        REQUIRE(((k - k_ref).cwiseAbs().maxCoeff() / scale) < 1e-10);
        REQUIRE(lyapunov_residual(a, k, b) <=
                1e-10 * std::max(1.0, (b * b.transpose()).cwiseAbs().maxCoeff()));
    }
}

TEST_CASE("lyapunov: symmetry and positive semidefiniteness") {
    CounterRng rng(7, 1);
    std::uint64_t ctr = 0;
    Mat b;
    const Mat a = random_stable(12, 3, rng, ctr, b);
    const Mat k = solve_lyapunov(a, b);
    REQUIRE((k - k.transpose()).cwiseAbs().maxCoeff() == Approx(0.0).margin(1e-14));
    Eigen::SelfAdjointEigenSolver<Mat> es(k);
    REQUIRE(es.eigenvalues().minCoeff() >= -1e-12 * k.trace());
}

TEST_CASE("lyapunov: rejects non-Hurwitz drift") {
    Mat a(2, 2), b(2, 1);
    a << 0.1, 0.0, 0.0, -1.0;
    b << 1.0, 1.0;
    REQUIRE_THROWS_AS(solve_lyapunov(a, b), NumericalError);
}

namespace {

/// Hand-specified linear system for variance plumbing tests:
/// x driven by one OU through 2H x' = -x + eta.
LinearizedSystem scalar_system(double h_val, double upsilon, double sigma) {
    LinearizedSystem sys;
    const double beta = 1.0 / (2.0 * h_val);
    sys.n_dyn = 1;
    sys.n_noise = 1;
    sys.a.resize(2, 2);
    sys.a << -beta, beta, 0.0, -upsilon;
    sys.b.resize(2, 1);
    sys.b << 0.0, sigma;
    sys.e.resize(2, 2);
    sys.e << 1.0, 0.0, // "meas" observes x directly
        0.0, 1.0;      // and the noise itself
    sys.state_names = {"x", "eta:z"};
    sys.meas_names = {"meas", "noisefeed"};
    sys.lambda_diag = Vec::Constant(1, 2.0 * h_val);
    sys.j = sys.a.topLeftCorner(1, 1);
    sys.swing["dev"] = SwingRow{0, h_val, 1.0};
    sys.max_re_eig = std::max(-beta, -upsilon);
    return sys;
}

double scalar_variance(double h_val, double upsilon, double sigma) {
    // closed form: K_xx = sigma^2 / (2 upsilon (1 + 2 H upsilon))
    return sigma * sigma / (2.0 * upsilon * (1.0 + 2.0 * h_val * upsilon));
}

} // namespace

TEST_CASE("measurement variances: quadratic form basics") {
    const auto sys = scalar_system(5.0, 0.5, 0.1);
    const Mat k = solve_lyapunov(sys.a, sys.b);
    const std::vector<std::string> names{"meas", "noisefeed"};
    const auto var = measurement_variances(sys, k, names);
    REQUIRE(var.at("meas") == Approx(scalar_variance(5.0, 0.5, 0.1)).epsilon(1e-10));
    REQUIRE(var.at("noisefeed") == Approx(0.01).epsilon(1e-10)); // sigma^2/(2 ups)

    // zero row -> zero variance
    auto sys2 = sys;
    sys2.e.row(0).setZero();
    const auto var2 = measurement_variances(sys2, k, names);
    REQUIRE(var2.at("meas") == 0.0);

    REQUIRE_THROWS_AS(measurement_variances(sys, k, std::vector<std::string>{"nope"}),
                      ConfigError);
}

TEST_CASE("variance sensitivity: closed forms and decoupling") {
    const double ups = 0.5, sig = 0.1, h0 = 5.0;
    const auto sys = scalar_system(h0, ups, sig);
    const std::vector<std::string> names{"meas", "noisefeed"};
    const auto grad = variance_sensitivity(sys, names, "H:dev", h0);

    // dK/dH of sigma^2/(2u(1+2Hu)) = -sigma^2/(2u) * 2u/(1+2Hu)^2
    const double denom = 1.0 + 2.0 * h0 * ups;
    const double expect = -sig * sig / (denom * denom);
    REQUIRE(grad.at("meas") == Approx(expect).epsilon(1e-6));
    // the pure noise feed is decoupled from H
    REQUIRE(std::abs(grad.at("noisefeed")) <= 1e-8);
}

TEST_CASE("variance sensitivity: Richardson step-halving consistency") {
    const auto sys = scalar_system(4.0, 0.5, 0.2);
    const std::vector<std::string> names{"meas"};
    const auto g1 = variance_sensitivity(sys, names, "H:dev", 4.0, 1e-4);
    const auto g2 = variance_sensitivity(sys, names, "H:dev", 4.0, 5e-5);
    REQUIRE(g1.at("meas") == Approx(g2.at("meas")).epsilon(1e-2));
}
