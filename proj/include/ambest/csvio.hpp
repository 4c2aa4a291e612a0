#pragma once

#include "ambest/estimator.hpp"
#include "ambest/sde.hpp"
#include "ambest/signal.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

namespace ambest {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {
inline void put_g12(std::ostream& os, double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    os << buf;
}
} // namespace detail

/// Trace CSV: header `t,<name>,...`, one row per sample, 12 significant
/// digits.
inline void write_trace_csv(std::ostream& os, const SimTrace& trace) {
    os << "t";
    for (const auto& n : trace.names) os << ',' << n;
    os << '\n';
    for (size_t r = 0; r < trace.t.size(); ++r) {
        detail::put_g12(os, trace.t[r]);
        for (const auto& col : trace.cols) {
            os << ',';
            detail::put_g12(os, col[r]);
        }
        os << '\n';
    }
}

inline SimTrace read_trace_csv(std::istream& is) {
    SimTrace trace;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("trace csv: empty file");
    {
        std::stringstream ss(line);
        std::string tok;
        bool first = true;
        while (std::getline(ss, tok, ',')) {
            if (first) {
                if (tok != "t") throw ConfigError("trace csv: first column must be 't'");
                first = false;
            } else {
                trace.names.push_back(tok);
            }
        }
    }
    trace.cols.assign(trace.names.size(), {});
    size_t lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        size_t c = 0;
        while (std::getline(ss, tok, ',')) {
            const double v = std::strtod(tok.c_str(), nullptr);
            if (c == 0)
                trace.t.push_back(v);
            else if (c - 1 < trace.cols.size())
                trace.cols[c - 1].push_back(v);
            ++c;
        }
        if (c != trace.names.size() + 1) {
            std::ostringstream os;
            os << "trace csv: line " << lineno << ": expected "
               << trace.names.size() + 1 << " fields, got " << c;
            throw ConfigError(os.str());
        }
    }
    if (trace.t.size() >= 2) trace.sample_dt = trace.t[1] - trace.t[0];
    return trace;
}

/// Estimate trajectory CSV: window_start_s,param,estimate,cost,converged.
inline void write_report_csv(std::ostream& os,
                             const std::vector<WindowEstimate>& series) {
    os << "window_start_s,param,estimate,cost,converged\n";
    for (const auto& w : series) {
        for (const auto& [name, value] : w.estimates) {
            detail::put_g12(os, w.window_start_s);
            os << ',' << name << ',';
            detail::put_g12(os, value);
            os << ',';
            detail::put_g12(os, w.cost);
            os << ',' << (w.converged ? 1 : 0) << '\n';
        }
    }
}

struct ReportRow {
    double window_start_s = 0.0;
    std::string param;
    double estimate = 0.0;
    double cost = 0.0;
    bool converged = false;
};

inline std::vector<ReportRow> read_report_csv(std::istream& is) {
    std::vector<ReportRow> rows;
    std::string line;
    if (!std::getline(is, line)) throw ConfigError("report csv: empty file");
    if (line.rfind("window_start_s,", 0) != 0)
        throw ConfigError("report csv: unexpected header '" + line + "'");
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        ReportRow row;
        int c = 0;
        while (std::getline(ss, tok, ',')) {
            switch (c) {
            case 0: row.window_start_s = std::strtod(tok.c_str(), nullptr); break;
            case 1: row.param = tok; break;
            case 2: row.estimate = std::strtod(tok.c_str(), nullptr); break;
            case 3: row.cost = std::strtod(tok.c_str(), nullptr); break;
            case 4: row.converged = tok == "1"; break;
            default: break;
            }
            ++c;
        }
        if (c != 5) throw ConfigError("report csv: malformed row '" + line + "'");
        rows.push_back(row);
    }
    return rows;
}

/// Violin summary CSV, one row per parameter.
inline void write_violin_csv(std::ostream& os,
                             const std::map<std::string, ViolinStats>& stats) {
    os << "param,n,median,q1,q3,iqr,lo_adj,hi_adj,eps_pct\n";
    for (const auto& [name, s] : stats) {
        os << name << ',' << s.n << ',';
        detail::put_g12(os, s.median);
        os << ',';
        detail::put_g12(os, s.q1);
        os << ',';
        detail::put_g12(os, s.q3);
        os << ',';
        detail::put_g12(os, s.iqr);
        os << ',';
        detail::put_g12(os, s.lo_adj);
        os << ',';
        detail::put_g12(os, s.hi_adj);
        os << ',';
        detail::put_g12(os, s.eps_pct);
        os << '\n';
    }
}

/// Windowed variance series in the trace CSV convention.
inline void write_variance_csv(std::ostream& os, const WindowedVariance& wv) {
    os << "t";
    for (const auto& n : wv.names) os << ',' << n;
    os << '\n';
    for (size_t r = 0; r < wv.window_start_s.size(); ++r) {
        detail::put_g12(os, wv.window_start_s[r]);
        for (const auto& col : wv.variance) {
            os << ',';
            detail::put_g12(os, col[r]);
        }
        os << '\n';
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open '" + path + "'");
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot write '" + path + "'");
    os << content;
}

} // namespace ambest
