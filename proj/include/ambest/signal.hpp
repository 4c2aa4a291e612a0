#pragma once

#include "ambest/covariance.hpp"
#include "ambest/sde.hpp"

#include <array>
#include <cmath>
#include <complex>

namespace ambest {

/// Continuous-time second-order section g*s / (s^2 + a1*s + a0).
struct ContBiquad {
    double a1 = 0.0, a0 = 0.0, g = 1.0;
};

/// Discrete biquad (b0 + b1 z^-1 + b2 z^-2)/(1 + c1 z^-1 + c2 z^-2).
struct DiscBiquad {
    double b0 = 0, b1 = 0, b2 = 0, c1 = 0, c2 = 0;
};

/// Butterworth-type bandpass as a cascade of unity-peak second-order
/// sections. The same continuous prototype drives both the trace filter
/// (after bilinear transform) and the state-space augmentation of the
/// linearized model, so analytic and empirical filtered variances are
/// directly comparable.
struct BandpassSpec {
    double f_lo = 0.1; ///< Hz
    double f_hi = 1.5; ///< Hz
    int order = 4;     ///< lowpass prototype order; 2*order states total
    std::vector<ContBiquad> sections;

    static BandpassSpec butterworth(double f_lo = 0.1, double f_hi = 1.5,
                                    int order = 4) {
        if (!(0.0 < f_lo && f_lo < f_hi))
            throw ConfigError("bandpass: need 0 < f_lo < f_hi");
        if (order < 1 || order > 12) throw ConfigError("bandpass: order out of range");
        BandpassSpec spec;
        spec.f_lo = f_lo;
        spec.f_hi = f_hi;
        spec.order = order;
        const double w_lo = 2.0 * kPi * f_lo;
        const double w_hi = 2.0 * kPi * f_hi;
        const double w0 = std::sqrt(w_lo * w_hi);
        const double bw = w_hi - w_lo;

        // lowpass prototype poles on the unit circle, then the
        // lowpass-to-bandpass map p -> roots of s^2 - p*bw*s + w0^2
        std::vector<cplx> poles;
        for (int k = 1; k <= order; ++k) {
            const double ang = kPi * (2.0 * k + order - 1.0) / (2.0 * order);
            const cplx p(std::cos(ang), std::sin(ang));
            const cplx disc = std::sqrt(p * p * bw * bw - 4.0 * w0 * w0);
            poles.push_back((p * bw + disc) / 2.0);
            poles.push_back((p * bw - disc) / 2.0);
        }
        // group into conjugate (or real) pairs
        std::vector<cplx> upper;
        std::vector<double> real_poles;
        for (const auto& q : poles) {
            if (std::abs(q.imag()) < 1e-12 * std::abs(q.real()))
                real_poles.push_back(q.real());
            else if (q.imag() > 0.0)
                upper.push_back(q);
        }
        for (const auto& q : upper) {
            ContBiquad s;
            s.a1 = -2.0 * q.real();
            s.a0 = std::norm(q);
            spec.sections.push_back(s);
        }
        std::sort(real_poles.begin(), real_poles.end());
        for (size_t i = 0; i + 1 < real_poles.size(); i += 2) {
            ContBiquad s;
            s.a1 = -(real_poles[i] + real_poles[i + 1]);
            s.a0 = real_poles[i] * real_poles[i + 1];
            spec.sections.push_back(s);
        }
        for (auto& s : spec.sections) {
            if (s.a1 <= 0.0 || s.a0 <= 0.0)
                throw NumericalError("bandpass: unstable section produced");
            // unity gain at the geometric center per section
            s.g = std::abs(cplx(s.a0 - w0 * w0, s.a1 * w0)) / w0;
        }
        return spec;
    }

    int n_states() const { return 2 * static_cast<int>(sections.size()); }

    /// |H(j 2 pi f)| of the continuous cascade.
    double gain(double f_hz) const {
        const cplx s(0.0, 2.0 * kPi * f_hz);
        cplx h(1.0, 0.0);
        for (const auto& sec : sections)
            h *= sec.g * s / (s * s + sec.a1 * s + sec.a0);
        return std::abs(h);
    }

    /// State-space realization of the cascade:
    ///   x' = A x + B u,  y = C x  (D = 0).
    /// Each section contributes states (w, w_int) with
    /// w' = -a1 w - a0 w_int + u_in, w_int' = w, y_sec = g*w.
    void realization(Mat& a, Vec& b, Vec& c) const {
        const int n = n_states();
        a = Mat::Zero(n, n);
        b = Vec::Zero(n);
        c = Vec::Zero(n);
        Vec input_row = Vec::Zero(n); // y of previous section as next input
        for (size_t i = 0; i < sections.size(); ++i) {
            const int k = static_cast<int>(2 * i);
            const auto& s = sections[i];
            a(k, k) = -s.a1;
            a(k, k + 1) = -s.a0;
            a(k + 1, k) = 1.0;
            if (i == 0)
                b(k) = 1.0;
            else
                a.row(k) += input_row.transpose();
            input_row = Vec::Zero(n);
            input_row(k) = s.g;
        }
        c = input_row;
    }

    /// Bilinear-transform discretization at sample step dt, prewarped so
    /// the geometric center frequency maps exactly.
    std::vector<DiscBiquad> discretize(double dt) const {
        const double w0 = 2.0 * kPi * std::sqrt(f_lo * f_hi);
        if (f_hi >= 0.5 / dt)
            throw ConfigError("bandpass: f_hi at or above the Nyquist rate");
        const double kk = w0 / std::tan(w0 * dt / 2.0);
        std::vector<DiscBiquad> out;
        for (const auto& s : sections) {
            const double den0 = kk * kk + s.a1 * kk + s.a0;
            DiscBiquad d;
            d.b0 = s.g * kk / den0;
            d.b1 = 0.0;
            d.b2 = -s.g * kk / den0;
            d.c1 = (-2.0 * kk * kk + 2.0 * s.a0) / den0;
            d.c2 = (kk * kk - s.a1 * kk + s.a0) / den0;
            if (std::abs(d.c2) >= 1.0)
                throw NumericalError("bandpass: discretized section unstable");
            out.push_back(d);
        }
        return out;
    }

    /// |H(e^{j 2 pi f dt})| of the discrete cascade.
    static double discrete_gain(const std::vector<DiscBiquad>& secs, double f_hz,
                                double dt) {
        const cplx zinv = std::exp(cplx(0.0, -2.0 * kPi * f_hz * dt));
        cplx h(1.0, 0.0);
        for (const auto& d : secs)
            h *= (d.b0 + d.b1 * zinv + d.b2 * zinv * zinv) /
                 (1.0 + d.c1 * zinv + d.c2 * zinv * zinv);
        return std::abs(h);
    }
};

/// Filtered name convention shared by traces and augmented systems.
inline std::string filtered_name(const std::string& name) { return "bp(" + name + ")"; }

/// Causal zero-state filtering of selected columns. The output trace keeps
/// the full time axis and tags the first window/3 as warm-up via
/// valid_from_s.
inline SimTrace filter_trace(const SimTrace& trace, const BandpassSpec& spec,
                             std::span<const std::string> names,
                             double window_s = 900.0) {
    auto secs = spec.discretize(trace.sample_dt);
    SimTrace out;
    out.t = trace.t;
    out.sample_dt = trace.sample_dt;
    out.scenario_tag = trace.scenario_tag;
    out.valid_from_s = std::max(trace.valid_from_s,
                                (trace.t.empty() ? 0.0 : trace.t.front()) + window_s / 3.0);
    for (const auto& name : names) {
        const auto& src = trace.col(name);
        std::vector<double> y(src.size());
        std::vector<std::array<double, 2>> st(secs.size(), {0.0, 0.0});
        for (size_t k = 0; k < src.size(); ++k) {
            double u = src[k];
            for (size_t si = 0; si < secs.size(); ++si) {
                const auto& d = secs[si];
                auto& w = st[si];
                const double acc = u - d.c1 * w[0] - d.c2 * w[1];
                const double v = d.b0 * acc + d.b1 * w[0] + d.b2 * w[1];
                w[1] = w[0];
                w[0] = acc;
                u = v;
            }
            y[k] = u;
        }
        out.names.push_back(filtered_name(name));
        out.cols.push_back(std::move(y));
    }
    return out;
}

struct WindowedVariance {
    double window_s = 900.0;
    double stride_s = 900.0;
    std::vector<double> window_start_s;
    std::vector<std::string> names;
    std::vector<std::vector<double>> variance; ///< per name, per window
    bool filtered = false;

    const std::vector<double>& series(const std::string& name) const {
        for (size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return variance[i];
        throw ConfigError("no variance series for '" + name + "'");
    }
};

/// Unbiased per-window sample variance with the window mean removed.
/// Windows that begin before the trace's warm-up watermark are skipped.
inline WindowedVariance moving_variance(const SimTrace& trace,
                                        std::span<const std::string> names,
                                        double window_s, double stride_s) {
    if (trace.t.empty()) throw ConfigError("moving_variance: empty trace");
    const double dt = trace.sample_dt;
    const long w = static_cast<long>(std::round(window_s / dt));
    const long stride = std::max<long>(1, static_cast<long>(std::round(stride_s / dt)));
    if (std::abs(w * dt - window_s) > 1e-9)
        throw ConfigError("moving_variance: window_s must be a multiple of sample_dt");
    const long n = static_cast<long>(trace.t.size());
    if (w < 2 || w > n) throw ConfigError("moving_variance: window longer than trace");

    WindowedVariance out;
    out.window_s = window_s;
    out.stride_s = stride * dt;
    out.filtered = trace.valid_from_s > 0.0;
    out.names.assign(names.begin(), names.end());
    out.variance.resize(names.size());

    std::vector<const std::vector<double>*> cols;
    for (const auto& nm : names) cols.push_back(&trace.col(nm));

    for (long s = 0; s + w <= n; s += stride) {
        if (trace.t[s] < trace.valid_from_s - 1e-9) continue;
        out.window_start_s.push_back(trace.t[s]);
        for (size_t c = 0; c < cols.size(); ++c) {
            const auto& x = *cols[c];
            double mean = 0.0;
            for (long k = s; k < s + w; ++k) mean += x[k];
            mean /= static_cast<double>(w);
            double acc = 0.0;
            for (long k = s; k < s + w; ++k) {
                const double d = x[k] - mean;
                acc += d * d;
            }
            out.variance[c].push_back(acc / static_cast<double>(w - 1));
        }
    }
    if (out.window_start_s.empty())
        throw ConfigError("moving_variance: no usable window after warm-up");
    return out;
}

/// Append the filter state equations to the linearized system, one block
/// per measured name, driven by that measurement's sensitivity row. The
/// filter outputs become new measurement rows named bp(<name>), so
/// measurement_variances on the augmented system yields analytic filtered
/// variances.
inline LinearizedSystem append_filter_states(const LinearizedSystem& sys,
                                             const BandpassSpec& spec,
                                             std::span<const std::string> names) {
    Mat af;
    Vec bf, cf;
    spec.realization(af, bf, cf);
    const int nf = spec.n_states();
    const int n0 = static_cast<int>(sys.a.rows());
    const int m = static_cast<int>(names.size());

    for (const auto& name : names) {
        const std::string out_name = filtered_name(name);
        for (const auto& existing : sys.meas_names)
            if (existing == out_name)
                throw ConfigError("filter output '" + out_name + "' already exists");
    }

    LinearizedSystem out = sys;
    const int n1 = n0 + m * nf;
    out.a = Mat::Zero(n1, n1);
    out.a.topLeftCorner(n0, n0) = sys.a;
    out.b = Mat::Zero(n1, sys.b.cols());
    out.b.topRows(n0) = sys.b;
    out.e = Mat::Zero(sys.e.rows() + m, n1);
    out.e.topLeftCorner(sys.e.rows(), n0) = sys.e;

    for (int i = 0; i < m; ++i) {
        const int row = sys.meas_pos(names[i]);
        const int base = n0 + i * nf;
        out.a.block(base, base, nf, nf) = af;
        out.a.block(base, 0, nf, n0) = bf * sys.e.row(row);
        out.e.block(static_cast<int>(sys.e.rows()) + i, base, 1, nf) = cf.transpose();
        out.meas_names.push_back(filtered_name(names[i]));
        for (int k = 0; k < nf; ++k)
            out.state_names.push_back("f" + std::to_string(k) + ":" +
                                      filtered_name(names[i]));
    }
    return out;
}

} // namespace ambest
