#pragma once

#include "ambest/csvio.hpp"
#include "ambest/estimator.hpp"
#include "ambest/signal.hpp"

#include <json.hpp>

namespace ambest {

using Json = nlohmann::ordered_json;

struct FilterConfig {
    bool enabled = true;
    double f_lo = 0.1;
    double f_hi = 1.5;
    int order = 4;

    BandpassSpec spec() const { return BandpassSpec::butterworth(f_lo, f_hi, order); }
};

struct MeasurementConfig {
    std::string preset = "terminals"; ///< terminals | boundaries | voltages
    std::vector<std::string> names;   ///< explicit selection overrides the preset
    std::vector<std::string> boundary_branches;
    double sample_dt = 0.025;
    double window_s = 900.0;
    FilterConfig filter;
};

struct EstimationParam {
    std::string name; ///< H:<device> or D:<device>
    double initial = 0.0; ///< 0: use the 5 s machine / 1 s converter default
    double reference = 0.0;
    double lower = 0.0;
    double upper = 100.0;
};

struct EstimationConfig {
    std::string param_set = "H"; ///< H | D
    std::vector<EstimationParam> params; ///< empty: all swing-capable devices
    int trials = 1;
    std::uint64_t seed = 1;
    OptimSettings optimizer;
    double stand_in_x_c = 0.3; ///< coupling reactance of GFL swing stand-ins
    std::map<std::string, double> truth; ///< optional, for eps_% reporting
};

struct IntegrationConfig {
    double h = 0.005;
};

struct RunConfig {
    int version = 1;
    Network network;
    DeviceSet devices;
    Scenario scenario;
    MeasurementConfig measurement;
    EstimationConfig estimation;
    IntegrationConfig integration;
    OuParams default_noise{0.5, 0.0};
    double default_noise_std_pct = 5.0;
};

namespace cfg_detail {

struct Ctx {
    std::string path;
    Ctx at(const std::string& key) const { return Ctx{path + "/" + key}; }
    Ctx at(size_t i) const { return Ctx{path + "/" + std::to_string(i)}; }
    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("config " + (path.empty() ? std::string("/") : path) + ": " + msg);
    }
};

inline double num(const Json& j, const Ctx& c, const std::string& key,
                  std::optional<double> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        c.fail("missing required field '" + key + "'");
    }
    if (!j[key].is_number()) c.at(key).fail("expected a number");
    return j[key].get<double>();
}

inline std::string str(const Json& j, const Ctx& c, const std::string& key,
                       std::optional<std::string> def = std::nullopt) {
    if (!j.contains(key)) {
        if (def) return *def;
        c.fail("missing required field '" + key + "'");
    }
    if (!j[key].is_string()) c.at(key).fail("expected a string");
    return j[key].get<std::string>();
}

inline bool flag(const Json& j, const Ctx& c, const std::string& key, bool def) {
    if (!j.contains(key)) return def;
    if (!j[key].is_boolean()) c.at(key).fail("expected true/false");
    return j[key].get<bool>();
}

inline OuParams noise_from(const Json& j, const Ctx& c, double p_ref,
                           const OuParams& def_ou, double def_std_pct) {
    OuParams ou;
    ou.upsilon = num(j, c, "upsilon_per_s", def_ou.upsilon);
    if (j.contains("sigma")) {
        ou.sigma = num(j, c, "sigma");
    } else {
        const double pct = num(j, c, "std_pct", def_std_pct);
        // stationary std of eta is pct% (eta multiplies the nominal power)
        ou.sigma = (pct / 100.0) * std::sqrt(2.0 * ou.upsilon);
        (void)p_ref;
    }
    return ou;
}

} // namespace cfg_detail

/// Parse the JSON (comments allowed) configuration document.
inline RunConfig parse_config(const std::string& text) {
    using cfg_detail::Ctx;
    using cfg_detail::flag;
    using cfg_detail::num;
    using cfg_detail::str;

    Json j;
    try {
        j = Json::parse(text, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        // convert the byte offset into a line anchor
        size_t line = 1;
        for (size_t i = 0; i < std::min(e.byte, text.size()); ++i)
            if (text[i] == '\n') ++line;
        throw ConfigError("config line " + std::to_string(line) + ": " + e.what());
    }

    RunConfig cfg;
    Ctx root{""};
    if (!j.contains("version")) root.fail("missing required field 'version'");
    cfg.version = j["version"].get<int>();
    if (cfg.version != 1) root.at("version").fail("unsupported config version");

    if (!j.contains("network")) root.fail("missing required section 'network'");
    {
        const auto& jn = j["network"];
        Ctx c = root.at("network");
        cfg.network.s_base = num(jn, c, "s_base_mva", 100.0);
        cfg.network.f_base = num(jn, c, "f_base_hz", 60.0);
        if (!jn.contains("buses")) c.fail("missing 'buses'");
        size_t i = 0;
        for (const auto& jb : jn["buses"]) {
            Ctx cb = c.at("buses").at(i++);
            Bus b;
            b.id = str(jb, cb, "id");
            b.base_kv = num(jb, cb, "base_kv", 1.0);
            const std::string kind = str(jb, cb, "kind", std::string("pq"));
            if (kind == "slack") b.kind = BusKind::slack;
            else if (kind == "pv") b.kind = BusKind::pv;
            else if (kind == "pq") b.kind = BusKind::pq;
            else cb.at("kind").fail("expected slack|pv|pq");
            b.v_set = num(jb, cb, "v_set_pu", 1.0);
            b.p_inj = num(jb, cb, "p_inj_pu", 0.0);
            b.q_inj = num(jb, cb, "q_inj_pu", 0.0);
            cfg.network.buses.push_back(b);
        }
        i = 0;
        if (jn.contains("branches"))
            for (const auto& jb : jn["branches"]) {
                Ctx cb = c.at("branches").at(i++);
                Branch br;
                br.id = str(jb, cb, "id", std::string(""));
                br.from = str(jb, cb, "from");
                br.to = str(jb, cb, "to");
                br.r = num(jb, cb, "r_pu", 0.0);
                br.x = num(jb, cb, "x_pu");
                br.b_sh = num(jb, cb, "b_sh_pu", 0.0);
                br.tap = num(jb, cb, "tap_pu", 1.0);
                br.on = str(jb, cb, "status", std::string("on")) == "on";
                cfg.network.branches.push_back(br);
            }
    }

    if (j.contains("noise")) {
        Ctx c = root.at("noise");
        cfg.default_noise.upsilon = num(j["noise"], c, "upsilon_per_s", 0.5);
        cfg.default_noise_std_pct = num(j["noise"], c, "std_pct", 5.0);
    }

    if (!j.contains("devices")) root.fail("missing required section 'devices'");
    {
        const auto& jd = j["devices"];
        Ctx c = root.at("devices");
        size_t i = 0;
        if (jd.contains("external_grids"))
            for (const auto& jx : jd["external_grids"]) {
                Ctx cx = c.at("external_grids").at(i++);
                cfg.devices.grids.push_back({str(jx, cx, "id"), str(jx, cx, "bus")});
            }
        i = 0;
        if (jd.contains("machines"))
            for (const auto& jm : jd["machines"]) {
                Ctx cm = c.at("machines").at(i++);
                SyncMachine m;
                m.id = str(jm, cm, "id");
                m.bus = str(jm, cm, "bus");
                m.h = num(jm, cm, "h_s");
                m.d = num(jm, cm, "d_pu", 0.0);
                m.x_d_prime = num(jm, cm, "x_d_prime_pu");
                m.p_rat_mw = num(jm, cm, "p_rat_mw");
                m.omega0 = num(jm, cm, "omega0_pu", 1.0);
                m.p_set = num(jm, cm, "p_set_pu", 0.0);
                if (jm.contains("governor")) {
                    Ctx cg = cm.at("governor");
                    Governor g;
                    g.droop_gain = num(jm["governor"], cg, "droop_gain_pu", 25.0);
                    g.t_g = num(jm["governor"], cg, "t_g_s", 0.5);
                    g.p_ref = num(jm["governor"], cg, "p_ref_pu", 0.0);
                    m.governor = g;
                }
                if (jm.contains("avr")) {
                    Ctx ca = cm.at("avr");
                    Avr a;
                    a.k_a = num(jm["avr"], ca, "k_a", 50.0);
                    a.t_a = num(jm["avr"], ca, "t_a_s", 0.2);
                    m.avr = a;
                }
                cfg.devices.machines.push_back(m);
            }
        i = 0;
        if (jd.contains("vsm_converters"))
            for (const auto& jv : jd["vsm_converters"]) {
                Ctx cv = c.at("vsm_converters").at(i++);
                VsmConverter v;
                v.id = str(jv, cv, "id");
                v.bus = str(jv, cv, "bus");
                v.h_eq = num(jv, cv, "h_eq_s");
                v.d_eq = num(jv, cv, "d_eq_pu");
                v.x_c = num(jv, cv, "x_c_pu", 0.3);
                v.p_rat_mw = num(jv, cv, "p_rat_mw");
                v.p_set = num(jv, cv, "p_set_pu", 0.0);
                v.q_set = num(jv, cv, "q_set_pu", 0.0);
                v.omega0 = num(jv, cv, "omega0_pu", 1.0);
                if (jv.contains("schedule")) {
                    size_t k = 0;
                    for (const auto& js : jv["schedule"]) {
                        Ctx cs = cv.at("schedule").at(k++);
                        ScheduleEvent ev;
                        ev.t = num(js, cs, "t_s");
                        ev.device = v.id;
                        ev.param = "h_eq_s";
                        ev.value = num(js, cs, "h_eq_s");
                        cfg.scenario.device_schedules.push_back(ev);
                    }
                }
                cfg.devices.vsms.push_back(v);
            }
        i = 0;
        if (jd.contains("gfl_converters"))
            for (const auto& jg : jd["gfl_converters"]) {
                Ctx cg = c.at("gfl_converters").at(i++);
                GflConverter g;
                g.id = str(jg, cg, "id");
                g.bus = str(jg, cg, "bus");
                g.droop = num(jg, cg, "droop_pu");
                g.t_f = num(jg, cg, "t_f_s", 0.1);
                g.p_rat_mw = num(jg, cg, "p_rat_mw");
                g.p_set = num(jg, cg, "p_set_pu", 0.0);
                g.q_set = num(jg, cg, "q_set_pu", 0.0);
                g.omega0 = num(jg, cg, "omega0_pu", 1.0);
                cfg.devices.gfls.push_back(g);
            }
        i = 0;
        if (jd.contains("loads"))
            for (const auto& jl : jd["loads"]) {
                Ctx cl = c.at("loads").at(i++);
                StochasticLoad l;
                l.id = str(jl, cl, "id");
                l.bus = str(jl, cl, "bus");
                l.p_l0 = num(jl, cl, "p_l0_pu");
                l.q_l0 = num(jl, cl, "q_l0_pu", 0.0);
                l.v0 = num(jl, cl, "v0_pu", 1.0);
                l.gamma = num(jl, cl, "gamma", 0.0);
                if (jl.contains("noise"))
                    l.ou = cfg_detail::noise_from(jl["noise"], cl.at("noise"), l.p_l0,
                                                  cfg.default_noise,
                                                  cfg.default_noise_std_pct);
                else
                    l.ou = cfg_detail::noise_from(Json::object(), cl, l.p_l0,
                                                  cfg.default_noise,
                                                  cfg.default_noise_std_pct);
                if (jl.contains("q_noise")) {
                    l.q_noise = true;
                    l.q_ou = cfg_detail::noise_from(jl["q_noise"], cl.at("q_noise"),
                                                    l.q_l0, cfg.default_noise,
                                                    cfg.default_noise_std_pct);
                }
                cfg.devices.loads.push_back(l);
            }
    }

    if (j.contains("scenario")) {
        const auto& js = j["scenario"];
        Ctx c = root.at("scenario");
        cfg.scenario.duration_s = num(js, c, "duration_s", 900.0);
        cfg.scenario.setpoint_update_s = num(js, c, "setpoint_update_s", 900.0);
        cfg.scenario.tag = str(js, c, "tag", std::string(""));
        if (js.contains("lambda_profile")) {
            size_t i = 0;
            for (const auto& jp : js["lambda_profile"]) {
                Ctx cp = c.at("lambda_profile").at(i++);
                const double t = num(jp, cp, "t_s");
                const double lam = num(jp, cp, "lambda");
                if (lam <= 0.0) cp.fail("lambda must be > 0");
                cfg.scenario.lambda_profile.emplace_back(t, lam);
            }
            std::sort(cfg.scenario.lambda_profile.begin(),
                      cfg.scenario.lambda_profile.end());
        }
        if (js.contains("schedules")) {
            size_t i = 0;
            for (const auto& je : js["schedules"]) {
                Ctx ce = c.at("schedules").at(i++);
                ScheduleEvent ev;
                ev.t = num(je, ce, "t_s");
                ev.device = str(je, ce, "device");
                ev.param = str(je, ce, "param");
                ev.value = num(je, ce, "value");
                cfg.scenario.device_schedules.push_back(ev);
            }
        }
    }

    if (j.contains("measurement")) {
        const auto& jm = j["measurement"];
        Ctx c = root.at("measurement");
        cfg.measurement.preset = str(jm, c, "preset", std::string("terminals"));
        if (cfg.measurement.preset != "terminals" &&
            cfg.measurement.preset != "boundaries" &&
            cfg.measurement.preset != "voltages")
            c.at("preset").fail("expected terminals|boundaries|voltages");
        if (jm.contains("names"))
            for (const auto& jn : jm["names"])
                cfg.measurement.names.push_back(jn.get<std::string>());
        if (jm.contains("boundary_branches"))
            for (const auto& jn : jm["boundary_branches"])
                cfg.measurement.boundary_branches.push_back(jn.get<std::string>());
        cfg.measurement.sample_dt = num(jm, c, "sample_dt_s", 0.025);
        cfg.measurement.window_s = num(jm, c, "window_s", 900.0);
        if (jm.contains("filter")) {
            Ctx cf = c.at("filter");
            cfg.measurement.filter.enabled = flag(jm["filter"], cf, "enabled", true);
            cfg.measurement.filter.f_lo = num(jm["filter"], cf, "f_lo_hz", 0.1);
            cfg.measurement.filter.f_hi = num(jm["filter"], cf, "f_hi_hz", 1.5);
            cfg.measurement.filter.order =
                static_cast<int>(num(jm["filter"], cf, "order", 4.0));
        }
    }

    if (j.contains("estimation")) {
        const auto& je = j["estimation"];
        Ctx c = root.at("estimation");
        cfg.estimation.param_set = str(je, c, "param_set", std::string("H"));
        if (cfg.estimation.param_set != "H" && cfg.estimation.param_set != "D")
            c.at("param_set").fail("expected H or D");
        cfg.estimation.trials = static_cast<int>(num(je, c, "trials", 1.0));
        cfg.estimation.seed = static_cast<std::uint64_t>(num(je, c, "seed", 1.0));
        cfg.estimation.stand_in_x_c = num(je, c, "stand_in_x_c_pu", 0.3);
        if (je.contains("params")) {
            size_t i = 0;
            for (const auto& jp : je["params"]) {
                Ctx cp = c.at("params").at(i++);
                EstimationParam p;
                p.name = str(jp, cp, "name");
                p.initial = num(jp, cp, "initial", 0.0);
                p.reference = num(jp, cp, "reference", 0.0);
                p.lower = num(jp, cp, "lower", 0.0);
                p.upper = num(jp, cp, "upper", 100.0);
                cfg.estimation.params.push_back(p);
            }
        }
        if (je.contains("optimizer")) {
            Ctx co = c.at("optimizer");
            cfg.estimation.optimizer.max_iter =
                static_cast<int>(num(je["optimizer"], co, "max_iter", 200.0));
            cfg.estimation.optimizer.cost_tol =
                num(je["optimizer"], co, "cost_tol", 1e-12);
            cfg.estimation.optimizer.step_tol =
                num(je["optimizer"], co, "step_tol", 1e-10);
        }
        if (je.contains("truth"))
            for (const auto& [key, val] : je["truth"].items())
                cfg.estimation.truth[key] = val.get<double>();
    }

    if (j.contains("integration")) {
        Ctx c = root.at("integration");
        cfg.integration.h = num(j["integration"], c, "h_s", 0.005);
    }

    cfg.network.validate();
    return cfg;
}

/// Serialize back to the canonical JSON form (parse/serialize idempotent).
inline std::string serialize_config(const RunConfig& cfg) {
    Json j;
    j["version"] = cfg.version;
    auto& jn = j["network"];
    jn["s_base_mva"] = cfg.network.s_base;
    jn["f_base_hz"] = cfg.network.f_base;
    jn["buses"] = Json::array();
    for (const auto& b : cfg.network.buses) {
        Json jb;
        jb["id"] = b.id;
        jb["base_kv"] = b.base_kv;
        jb["kind"] = b.kind == BusKind::slack ? "slack" : (b.kind == BusKind::pv ? "pv" : "pq");
        jb["v_set_pu"] = b.v_set;
        jb["p_inj_pu"] = b.p_inj;
        jb["q_inj_pu"] = b.q_inj;
        jn["buses"].push_back(jb);
    }
    jn["branches"] = Json::array();
    for (const auto& br : cfg.network.branches) {
        Json jb;
        jb["id"] = br.id;
        jb["from"] = br.from;
        jb["to"] = br.to;
        jb["r_pu"] = br.r;
        jb["x_pu"] = br.x;
        jb["b_sh_pu"] = br.b_sh;
        jb["tap_pu"] = br.tap;
        jb["status"] = br.on ? "on" : "off";
        jn["branches"].push_back(jb);
    }
    auto& jd = j["devices"];
    jd["external_grids"] = Json::array();
    for (const auto& x : cfg.devices.grids)
        jd["external_grids"].push_back({{"id", x.id}, {"bus", x.bus}});
    jd["machines"] = Json::array();
    for (const auto& m : cfg.devices.machines) {
        Json jm;
        jm["id"] = m.id;
        jm["bus"] = m.bus;
        jm["h_s"] = m.h;
        jm["d_pu"] = m.d;
        jm["x_d_prime_pu"] = m.x_d_prime;
        jm["p_rat_mw"] = m.p_rat_mw;
        jm["omega0_pu"] = m.omega0;
        jm["p_set_pu"] = m.p_set;
        if (m.governor) {
            jm["governor"] = {{"droop_gain_pu", m.governor->droop_gain},
                              {"t_g_s", m.governor->t_g},
                              {"p_ref_pu", m.governor->p_ref}};
        }
        if (m.avr)
            jm["avr"] = {{"k_a", m.avr->k_a}, {"t_a_s", m.avr->t_a}};
        jd["machines"].push_back(jm);
    }
    jd["vsm_converters"] = Json::array();
    for (const auto& v : cfg.devices.vsms) {
        Json jv;
        jv["id"] = v.id;
        jv["bus"] = v.bus;
        jv["h_eq_s"] = v.h_eq;
        jv["d_eq_pu"] = v.d_eq;
        jv["x_c_pu"] = v.x_c;
        jv["p_rat_mw"] = v.p_rat_mw;
        jv["p_set_pu"] = v.p_set;
        jv["q_set_pu"] = v.q_set;
        jv["omega0_pu"] = v.omega0;
        jd["vsm_converters"].push_back(jv);
    }
    jd["gfl_converters"] = Json::array();
    for (const auto& g : cfg.devices.gfls) {
        Json jg;
        jg["id"] = g.id;
        jg["bus"] = g.bus;
        jg["droop_pu"] = g.droop;
        jg["t_f_s"] = g.t_f;
        jg["p_rat_mw"] = g.p_rat_mw;
        jg["p_set_pu"] = g.p_set;
        jg["q_set_pu"] = g.q_set;
        jg["omega0_pu"] = g.omega0;
        jd["gfl_converters"].push_back(jg);
    }
    jd["loads"] = Json::array();
    for (const auto& l : cfg.devices.loads) {
        Json jl;
        jl["id"] = l.id;
        jl["bus"] = l.bus;
        jl["p_l0_pu"] = l.p_l0;
        jl["q_l0_pu"] = l.q_l0;
        jl["v0_pu"] = l.v0;
        jl["gamma"] = l.gamma;
        jl["noise"] = {{"upsilon_per_s", l.ou.upsilon}, {"sigma", l.ou.sigma}};
        if (l.q_noise)
            jl["q_noise"] = {{"upsilon_per_s", l.q_ou.upsilon}, {"sigma", l.q_ou.sigma}};
        jd["loads"].push_back(jl);
    }
    auto& js = j["scenario"];
    js["duration_s"] = cfg.scenario.duration_s;
    js["setpoint_update_s"] = cfg.scenario.setpoint_update_s;
    js["tag"] = cfg.scenario.tag;
    js["lambda_profile"] = Json::array();
    for (const auto& [t, lam] : cfg.scenario.lambda_profile)
        js["lambda_profile"].push_back({{"t_s", t}, {"lambda", lam}});
    js["schedules"] = Json::array();
    for (const auto& ev : cfg.scenario.device_schedules)
        js["schedules"].push_back({{"t_s", ev.t},
                                   {"device", ev.device},
                                   {"param", ev.param},
                                   {"value", ev.value}});
    auto& jm = j["measurement"];
    jm["preset"] = cfg.measurement.preset;
    jm["names"] = cfg.measurement.names;
    jm["boundary_branches"] = cfg.measurement.boundary_branches;
    jm["sample_dt_s"] = cfg.measurement.sample_dt;
    jm["window_s"] = cfg.measurement.window_s;
    jm["filter"] = {{"enabled", cfg.measurement.filter.enabled},
                    {"f_lo_hz", cfg.measurement.filter.f_lo},
                    {"f_hi_hz", cfg.measurement.filter.f_hi},
                    {"order", cfg.measurement.filter.order}};
    auto& je = j["estimation"];
    je["param_set"] = cfg.estimation.param_set;
    je["trials"] = cfg.estimation.trials;
    je["seed"] = cfg.estimation.seed;
    je["stand_in_x_c_pu"] = cfg.estimation.stand_in_x_c;
    je["params"] = Json::array();
    for (const auto& p : cfg.estimation.params)
        je["params"].push_back({{"name", p.name},
                                {"initial", p.initial},
                                {"reference", p.reference},
                                {"lower", p.lower},
                                {"upper", p.upper}});
    je["optimizer"] = {{"max_iter", cfg.estimation.optimizer.max_iter},
                       {"cost_tol", cfg.estimation.optimizer.cost_tol},
                       {"step_tol", cfg.estimation.optimizer.step_tol}};
    je["truth"] = cfg.estimation.truth;
    j["integration"] = {{"h_s", cfg.integration.h}};
    return j.dump(2) + "\n";
}

inline std::string config_hash(const RunConfig& cfg) {
    return hex64(fnv1a64(serialize_config(cfg)));
}

/// Measurement set from the preset (or the explicit name list).
inline std::vector<std::string> measurement_names(const RunConfig& cfg) {
    if (!cfg.measurement.names.empty()) return cfg.measurement.names;
    std::vector<std::string> out;
    if (cfg.measurement.preset == "terminals") {
        for (const auto& m : cfg.devices.machines) out.push_back("i:" + m.id);
        for (const auto& v : cfg.devices.vsms) out.push_back("i:" + v.id);
        for (const auto& g : cfg.devices.gfls) out.push_back("i:" + g.id);
    } else if (cfg.measurement.preset == "boundaries") {
        if (cfg.measurement.boundary_branches.empty())
            throw ConfigError("measurement preset 'boundaries' needs boundary_branches");
        for (const auto& id : cfg.measurement.boundary_branches)
            out.push_back("i:" + id);
    } else { // voltages at generator/converter buses
        std::vector<std::string> buses;
        auto add = [&](const std::string& bus) {
            if (std::find(buses.begin(), buses.end(), bus) == buses.end())
                buses.push_back(bus);
        };
        for (const auto& m : cfg.devices.machines) add(m.bus);
        for (const auto& v : cfg.devices.vsms) add(v.bus);
        for (const auto& g : cfg.devices.gfls) add(g.bus);
        for (const auto& bus : buses) out.push_back("v:" + bus);
    }
    if (out.empty()) throw ConfigError("measurement selection is empty");
    return out;
}

/// Estimation parameter specs with defaults resolved (5 s machines,
/// 1 s converters; damping defaults mirror the device set).
inline std::vector<ParamSpec> estimation_params(const RunConfig& cfg,
                                                const std::string& param_set) {
    std::vector<EstimationParam> raw = cfg.estimation.params;
    if (raw.empty()) {
        for (const auto& m : cfg.devices.machines)
            raw.push_back({param_set + ":" + m.id, 0, 0, 0, 100});
        for (const auto& v : cfg.devices.vsms)
            raw.push_back({param_set + ":" + v.id, 0, 0, 0, 100});
        for (const auto& g : cfg.devices.gfls)
            raw.push_back({param_set + ":" + g.id, 0, 0, 0, 100});
    }
    auto is_machine = [&](const std::string& dev) {
        for (const auto& m : cfg.devices.machines)
            if (m.id == dev) return true;
        return false;
    };
    std::vector<ParamSpec> out;
    for (const auto& p : raw) {
        const auto colon = p.name.find(':');
        if (colon == std::string::npos)
            throw ConfigError("estimation param '" + p.name + "': expected H:<dev> or D:<dev>");
        const std::string kind = p.name.substr(0, colon);
        if (kind != param_set) continue; // filtered by the requested set
        const std::string dev = p.name.substr(colon + 1);
        ParamSpec ps;
        ps.name = p.name;
        if (p.initial > 0.0) {
            ps.initial = p.initial;
        } else if (kind == "H") {
            ps.initial = is_machine(dev) ? 5.0 : 1.0;
        } else {
            ps.initial = is_machine(dev) ? 2.0 : 5.0;
        }
        ps.reference = p.reference;
        ps.lower = p.lower;
        ps.upper = p.upper;
        out.push_back(ps);
    }
    if (out.empty())
        throw ConfigError("estimation: no parameters left for set '" + param_set + "'");
    return out;
}

} // namespace ambest
