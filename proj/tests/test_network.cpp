#include <catch2/catch_amalgamated.hpp>

#include "ambest/network.hpp"

using namespace ambest;
using Catch::Approx;

namespace {

Network two_bus(double load_p, double load_q, double x = 0.1, double r = 0.0) {
    Network net;
    net.buses.push_back({"b1", 230.0, BusKind::slack, 1.0, 0.0, 0.0});
    net.buses.push_back({"b2", 230.0, BusKind::pq, 1.0, -load_p, -load_q});
    net.branches.push_back({"l1", "b1", "b2", r, x, 0.0, 1.0, true});
    return net;
}

/// Small meshed test grid used by the mismatch-scan oracle.
Network meshed_grid() {
    Network net;
    net.buses.push_back({"g1", 230.0, BusKind::pv, 1.02, 1.5, 0.0});
    net.buses.push_back({"g2", 230.0, BusKind::pv, 1.01, 1.2, 0.0});
    net.buses.push_back({"d1", 230.0, BusKind::pq, 1.0, -1.8, -0.4});
    net.buses.push_back({"d2", 230.0, BusKind::pq, 1.0, -1.2, -0.3});
    net.buses.push_back({"sl", 230.0, BusKind::slack, 1.0, 0.0, 0.0});
    net.branches.push_back({"", "g1", "d1", 0.01, 0.08, 0.02, 1.0, true});
    net.branches.push_back({"", "g2", "d1", 0.01, 0.09, 0.02, 1.0, true});
    net.branches.push_back({"", "g2", "d2", 0.012, 0.1, 0.02, 1.0, true});
    net.branches.push_back({"", "d1", "d2", 0.015, 0.12, 0.03, 1.0, true});
    net.branches.push_back({"", "d1", "sl", 0.008, 0.06, 0.02, 1.0, true});
    net.branches.push_back({"", "d2", "sl", 0.008, 0.06, 0.02, 1.0, true});
    return net;
}

double total_mismatch(const Network& net, const CMat& y, const Vec& v, const Vec& th) {
    const int n = static_cast<int>(net.buses.size());
    CVec vc(n);
    for (int i = 0; i < n; ++i) vc(i) = std::polar(v(i), th(i));
    CVec s = vc.array() * (y * vc).conjugate().array();
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        const auto& bus = net.buses[i];
        if (bus.kind == BusKind::slack) continue;
        acc += std::abs(bus.p_inj - s(i).real());
        if (bus.kind == BusKind::pq) acc += std::abs(bus.q_inj - s(i).imag());
    }
    return acc;
}

} // namespace

TEST_CASE("admittance: pure series reactance") {
    const auto y = build_admittance(two_bus(0.0, 0.0));
    REQUIRE(y(0, 0).imag() == Approx(-10.0));
    REQUIRE(y(0, 0).real() == Approx(0.0));
    REQUIRE(y(0, 1).imag() == Approx(10.0));
    REQUIRE(y(1, 0).imag() == Approx(10.0));
    REQUIRE(y(1, 1).imag() == Approx(-10.0));
}

TEST_CASE("admittance: single isolated bus") {
    Network net;
    net.buses.push_back({"b1", 230.0, BusKind::slack, 1.0, 0.0, 0.0});
    const auto y = build_admittance(net);
    REQUIRE(y.rows() == 1);
    REQUIRE(y(0, 0) == cplx(0.0, 0.0));
}

TEST_CASE("admittance: three-bus ring against hand assembly") {
    Network net;
    net.buses.push_back({"a", 230.0, BusKind::slack, 1.0, 0.0, 0.0});
    net.buses.push_back({"b", 230.0, BusKind::pq, 1.0, 0.0, 0.0});
    net.buses.push_back({"c", 230.0, BusKind::pq, 1.0, 0.0, 0.0});
    net.branches.push_back({"", "a", "b", 0.01, 0.1, 0.0, 1.0, true});
    net.branches.push_back({"", "b", "c", 0.01, 0.1, 0.0, 1.0, true});
    net.branches.push_back({"", "c", "a", 0.01, 0.1, 0.0, 1.0, true});
    const auto y = build_admittance(net);

    // independent assembly from first principles
    const cplx ys = 1.0 / cplx(0.01, 0.1);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            const cplx expect = (i == j) ? 2.0 * ys : -ys;
            REQUIRE(std::abs(y(i, j) - expect) < 1e-14);
        }
}

TEST_CASE("admittance: reciprocity for unit taps, tap asymmetry otherwise") {
    auto net = meshed_grid();
    auto y = build_admittance(net);
    for (int i = 0; i < y.rows(); ++i)
        for (int j = 0; j < y.cols(); ++j)
            REQUIRE(y(i, j) == y(j, i));

    net.branches[0].tap = 0.98;
    y = build_admittance(net);
    REQUIRE(y(0, 2) == y(2, 0)); // off-diagonals still equal
    // but the from-side self term now differs from the tap=1 case
    const auto y1 = build_admittance(meshed_grid());
    REQUIRE(std::abs(y(0, 0) - y1(0, 0)) > 1e-6);
}

TEST_CASE("admittance: rejects bad branches") {
    auto net = two_bus(0.0, 0.0);
    net.branches.push_back({"l1", "b1", "b2", 0.0, 0.2, 0.0, 1.0, true});
    REQUIRE_THROWS_AS(build_admittance(net), ConfigError); // duplicate id

    net = two_bus(0.0, 0.0);
    net.branches[0].x = 0.0;
    net.branches[0].r = 0.0;
    REQUIRE_THROWS_AS(build_admittance(net), ConfigError); // zero impedance
}

TEST_CASE("power flow: no-load case stays flat") {
    const auto sol = solve_power_flow(two_bus(0.0, 0.0));
    REQUIRE(sol.converged);
    REQUIRE(sol.v(0) == Approx(1.0));
    REQUIRE(sol.v(1) == Approx(1.0));
    REQUIRE(sol.theta(1) == Approx(0.0).margin(1e-12));
}

TEST_CASE("power flow: two-bus closed form") {
    // P2 = 10 v2 sin(th2) = -1, Q2 = 10 v2^2 - 10 v2 cos(th2) = 0
    // => v2 = cos(th2), th2 = -asin(0.2)/2
    const auto sol = solve_power_flow(two_bus(1.0, 0.0));
    REQUIRE(sol.converged);
    const double th2 = -std::asin(0.2) / 2.0;
    const double v2 = std::cos(th2);
    REQUIRE(sol.theta(1) == Approx(th2).margin(1e-8));
    REQUIRE(sol.v(1) == Approx(v2).margin(1e-8));
    REQUIRE(sol.theta(0) == 0.0);
}

TEST_CASE("power flow: meshed grid matches mismatch-scan oracle") {
    const auto net = meshed_grid();
    const auto sol = solve_power_flow(net);
    REQUIRE(sol.converged);
    REQUIRE(sol.max_mismatch <= 1e-8);

    // brute-force grid refinement around an independent coarse start must
    // land on the same point within 1e-4
    const auto y = build_admittance(net);
    Vec v = Vec::Ones(5), th = Vec::Zero(5);
    for (int i = 0; i < 5; ++i)
        if (net.buses[i].kind != BusKind::pq) v(i) = net.buses[i].v_set;
    double step = 0.02;
    for (int level = 0; level < 12; ++level) {
        bool improved = true;
        while (improved) {
            improved = false;
            double best = total_mismatch(net, y, v, th);
            for (int i = 0; i < 5; ++i) {
                if (net.buses[i].kind != BusKind::slack) {
                    for (double dir : {-step, step}) {
                        Vec t2 = th;
                        t2(i) += dir;
                        const double m = total_mismatch(net, y, v, t2);
                        if (m < best) { best = m; th = t2; improved = true; }
                    }
                }
                if (net.buses[i].kind == BusKind::pq) {
                    for (double dir : {-step, step}) {
                        Vec v2 = v;
                        v2(i) += dir;
                        const double m = total_mismatch(net, y, v2, th);
                        if (m < best) { best = m; v = v2; improved = true; }
                    }
                }
            }
        }
        step /= 2.0;
    }
    for (int i = 0; i < 5; ++i) {
        REQUIRE(v(i) == Approx(sol.v(i)).margin(1e-4));
        REQUIRE(th(i) == Approx(sol.theta(i)).margin(1e-4));
    }
}

TEST_CASE("power flow: power balance at a converged solution") {
    const auto net = meshed_grid();
    const auto sol = solve_power_flow(net);
    REQUIRE(sol.converged);
    // generation - load - losses == 0: the net injections already include
    // everything, so their sum must equal the network losses
    const auto y = build_admittance(net);
    const int n = 5;
    CVec vc(n);
    for (int i = 0; i < n; ++i) vc(i) = std::polar(sol.v(i), sol.theta(i));
    double losses = 0.0;
    for (const auto& br : net.branches) {
        const int f = net.bus_index(br.from), t = net.bus_index(br.to);
        const cplx cur = (vc(f) - vc(t)) / cplx(br.r, br.x);
        losses += std::norm(cur) * br.r;
    }
    REQUIRE(sol.p.sum() == Approx(losses).margin(1e-7));
}

TEST_CASE("power flow: warm start reconverges immediately") {
    const auto net = meshed_grid();
    const auto cold = solve_power_flow(net);
    REQUIRE(cold.converged);
    PowerFlowOptions opt;
    opt.warm = &cold;
    const auto warm = solve_power_flow(net, opt);
    REQUIRE(warm.converged);
    REQUIRE(warm.iterations <= 2);
}

TEST_CASE("power flow: non-convergence carries a diagnostic") {
    auto net = two_bus(30.0, 10.0); // far beyond the line's transfer limit
    const auto sol = solve_power_flow(net);
    REQUIRE_FALSE(sol.converged);
    REQUIRE_FALSE(sol.diagnostic.empty());
}

TEST_CASE("network validation catches structural errors") {
    auto net = two_bus(0.0, 0.0);
    net.buses[1].kind = BusKind::slack;
    REQUIRE_THROWS_AS(net.validate(), ConfigError); // two slacks

    net = two_bus(0.0, 0.0);
    net.buses.push_back({"b3", 230.0, BusKind::pq, 1.0, 0.0, 0.0});
    REQUIRE_THROWS_AS(net.validate(), ConfigError); // disconnected bus
}
