#pragma once
#include "ambest/common.hpp"
#include <map>

namespace ambest {
/// Bundled desk-scale systems, keyed by id. The same documents live
/// under data/ for direct editing; a unit test keeps both in sync.
inline const std::map<std::string, std::string>& bundled_systems() {
    static const std::map<std::string, std::string> sys = {
        {"smib", R"__cfg(// Single machine against a stiff external grid, one noisy load.
{
  "version": 1,
  "network": {
    "s_base_mva": 100.0,
    "f_base_hz": 60.0,
    "buses": [
      {"id": "b1", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.02},
      {"id": "b2", "base_kv": 230.0, "kind": "slack", "v_set_pu": 1.0}
    ],
    "branches": [
      {"id": "l12", "from": "b1", "to": "b2", "r_pu": 0.005, "x_pu": 0.1, "b_sh_pu": 0.02}
    ]
  },
  "noise": {"upsilon_per_s": 0.5, "std_pct": 5.0},
  "devices": {
    "external_grids": [{"id": "EXT", "bus": "b2"}],
    "machines": [
      {
        "id": "G1", "bus": "b1",
        "h_s": 5.0, "d_pu": 2.0, "x_d_prime_pu": 0.3,
        "p_rat_mw": 200.0, "p_set_pu": 0.9,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      }
    ],
    "loads": [
      {"id": "L1", "bus": "b1", "p_l0_pu": 0.5, "q_l0_pu": 0.1}
    ]
  },
  "scenario": {"duration_s": 900.0, "setpoint_update_s": 900.0},
  "measurement": {
    "preset": "terminals",
    "sample_dt_s": 0.025,
    "window_s": 900.0,
    "filter": {"enabled": true, "f_lo_hz": 0.1, "f_hi_hz": 1.5, "order": 4}
  },
  "estimation": {
    "param_set": "H",
    "params": [
      {"name": "H:G1", "initial": 4.0, "lower": 0.0, "upper": 50.0}
    ],
    "trials": 4,
    "seed": 1,
    "truth": {"H:G1": 5.0, "D:G1": 2.0}
  },
  "integration": {"h_s": 0.005}
}
)__cfg"},
        {"three_machine", R"__cfg(// Three machines, two load centers, stiff external tie at b6.
{
  "version": 1,
  "network": {
    "s_base_mva": 100.0,
    "f_base_hz": 60.0,
    "buses": [
      {"id": "b1", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.02},
      {"id": "b2", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.01},
      {"id": "b3", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.01},
      {"id": "b4", "base_kv": 230.0, "kind": "pq"},
      {"id": "b5", "base_kv": 230.0, "kind": "pq"},
      {"id": "b6", "base_kv": 230.0, "kind": "slack", "v_set_pu": 1.0}
    ],
    "branches": [
      {"id": "l14", "from": "b1", "to": "b4", "r_pu": 0.01, "x_pu": 0.08, "b_sh_pu": 0.02},
      {"id": "l24", "from": "b2", "to": "b4", "r_pu": 0.01, "x_pu": 0.09, "b_sh_pu": 0.02},
      {"id": "l25", "from": "b2", "to": "b5", "r_pu": 0.012, "x_pu": 0.1, "b_sh_pu": 0.02},
      {"id": "l35", "from": "b3", "to": "b5", "r_pu": 0.01, "x_pu": 0.07, "b_sh_pu": 0.02},
      {"id": "l45", "from": "b4", "to": "b5", "r_pu": 0.015, "x_pu": 0.12, "b_sh_pu": 0.03},
      {"id": "l46", "from": "b4", "to": "b6", "r_pu": 0.008, "x_pu": 0.06, "b_sh_pu": 0.02},
      {"id": "l56", "from": "b5", "to": "b6", "r_pu": 0.008, "x_pu": 0.06, "b_sh_pu": 0.02}
    ]
  },
  "noise": {"upsilon_per_s": 0.5, "std_pct": 5.0},
  "devices": {
    "external_grids": [{"id": "EXT", "bus": "b6"}],
    "machines": [
      {
        "id": "G1", "bus": "b1",
        "h_s": 5.0, "d_pu": 2.0, "x_d_prime_pu": 0.25,
        "p_rat_mw": 500.0, "p_set_pu": 2.0,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G2", "bus": "b2",
        "h_s": 4.0, "d_pu": 2.0, "x_d_prime_pu": 0.28,
        "p_rat_mw": 400.0, "p_set_pu": 1.6,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G3", "bus": "b3",
        "h_s": 3.5, "d_pu": 2.0, "x_d_prime_pu": 0.3,
        "p_rat_mw": 350.0, "p_set_pu": 1.4,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      }
    ],
    "loads": [
      {"id": "L1", "bus": "b4", "p_l0_pu": 2.4, "q_l0_pu": 0.5},
      {"id": "L2", "bus": "b5", "p_l0_pu": 2.2, "q_l0_pu": 0.45},
      {"id": "L3", "bus": "b2", "p_l0_pu": 0.6, "q_l0_pu": 0.1}
    ]
  },
  "scenario": {"duration_s": 900.0, "setpoint_update_s": 900.0},
  "measurement": {
    "preset": "terminals",
    "sample_dt_s": 0.025,
    "window_s": 900.0,
    "filter": {"enabled": true, "f_lo_hz": 0.1, "f_hi_hz": 1.5, "order": 4}
  },
  "estimation": {
    "param_set": "H",
    "params": [
      {"name": "H:G1", "initial": 4.0, "lower": 0.0, "upper": 50.0},
      {"name": "H:G2", "initial": 4.0, "lower": 0.0, "upper": 50.0},
      {"name": "H:G3", "initial": 4.0, "lower": 0.0, "upper": 50.0}
    ],
    "trials": 20,
    "seed": 1,
    "truth": {"H:G1": 5.0, "H:G2": 4.0, "H:G3": 3.5, "D:G1": 2.0, "D:G2": 2.0, "D:G3": 2.0}
  },
  "integration": {"h_s": 0.005}
}
)__cfg"},
        {"nine_bus_reduced", R"__cfg(// Classic 9-bus / three-plant topology with the slack plant replaced by a
// stiff external grid; two machines remain dynamic.
{
  "version": 1,
  "network": {
    "s_base_mva": 100.0,
    "f_base_hz": 60.0,
    "buses": [
      {"id": "bus1", "base_kv": 16.5, "kind": "slack", "v_set_pu": 1.04},
      {"id": "bus2", "base_kv": 18.0, "kind": "pv", "v_set_pu": 1.025},
      {"id": "bus3", "base_kv": 13.8, "kind": "pv", "v_set_pu": 1.025},
      {"id": "bus4", "base_kv": 230.0, "kind": "pq"},
      {"id": "bus5", "base_kv": 230.0, "kind": "pq"},
      {"id": "bus6", "base_kv": 230.0, "kind": "pq"},
      {"id": "bus7", "base_kv": 230.0, "kind": "pq"},
      {"id": "bus8", "base_kv": 230.0, "kind": "pq"},
      {"id": "bus9", "base_kv": 230.0, "kind": "pq"}
    ],
    "branches": [
      {"id": "t14", "from": "bus1", "to": "bus4", "r_pu": 0.0, "x_pu": 0.0576},
      {"id": "t27", "from": "bus2", "to": "bus7", "r_pu": 0.0, "x_pu": 0.0625},
      {"id": "t39", "from": "bus3", "to": "bus9", "r_pu": 0.0, "x_pu": 0.0586},
      {"id": "l45", "from": "bus4", "to": "bus5", "r_pu": 0.01, "x_pu": 0.085, "b_sh_pu": 0.176},
      {"id": "l46", "from": "bus4", "to": "bus6", "r_pu": 0.017, "x_pu": 0.092, "b_sh_pu": 0.158},
      {"id": "l57", "from": "bus5", "to": "bus7", "r_pu": 0.032, "x_pu": 0.161, "b_sh_pu": 0.306},
      {"id": "l69", "from": "bus6", "to": "bus9", "r_pu": 0.039, "x_pu": 0.17, "b_sh_pu": 0.358},
      {"id": "l78", "from": "bus7", "to": "bus8", "r_pu": 0.0085, "x_pu": 0.072, "b_sh_pu": 0.149},
      {"id": "l89", "from": "bus8", "to": "bus9", "r_pu": 0.0119, "x_pu": 0.1008, "b_sh_pu": 0.209}
    ]
  },
  "noise": {"upsilon_per_s": 0.5, "std_pct": 5.0},
  "devices": {
    "external_grids": [{"id": "EXT", "bus": "bus1"}],
    "machines": [
      {
        "id": "G2", "bus": "bus2",
        "h_s": 6.4, "d_pu": 2.0, "x_d_prime_pu": 0.23,
        "p_rat_mw": 192.0, "p_set_pu": 1.63,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G3", "bus": "bus3",
        "h_s": 3.01, "d_pu": 2.0, "x_d_prime_pu": 0.232,
        "p_rat_mw": 128.0, "p_set_pu": 0.85,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      }
    ],
    "loads": [
      {"id": "LA", "bus": "bus5", "p_l0_pu": 1.25, "q_l0_pu": 0.5},
      {"id": "LB", "bus": "bus6", "p_l0_pu": 0.9, "q_l0_pu": 0.3},
      {"id": "LC", "bus": "bus8", "p_l0_pu": 1.0, "q_l0_pu": 0.35}
    ]
  },
  "scenario": {"duration_s": 900.0, "setpoint_update_s": 900.0},
  "measurement": {
    "preset": "terminals",
    "sample_dt_s": 0.025,
    "window_s": 900.0,
    "filter": {"enabled": true, "f_lo_hz": 0.1, "f_hi_hz": 1.5, "order": 4}
  },
  "estimation": {
    "param_set": "H",
    "params": [
      {"name": "H:G2", "initial": 5.0, "lower": 0.0, "upper": 50.0},
      {"name": "H:G3", "initial": 5.0, "lower": 0.0, "upper": 50.0}
    ],
    "trials": 8,
    "seed": 1,
    "truth": {"H:G2": 6.4, "H:G3": 3.01, "D:G2": 2.0, "D:G3": 2.0}
  },
  "integration": {"h_s": 0.005}
}
)__cfg"},
        {"vsm_step", R"__cfg(// Three-machine grid plus one grid-forming converter whose virtual inertia
// switches from 0 to 10 s two hours into the run.
{
  "version": 1,
  "network": {
    "s_base_mva": 100.0,
    "f_base_hz": 60.0,
    "buses": [
      {"id": "b1", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.02},
      {"id": "b2", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.01},
      {"id": "b3", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.01},
      {"id": "b4", "base_kv": 230.0, "kind": "pq"},
      {"id": "b5", "base_kv": 230.0, "kind": "pq"},
      {"id": "b6", "base_kv": 230.0, "kind": "slack", "v_set_pu": 1.0},
      {"id": "b7", "base_kv": 230.0, "kind": "pq"}
    ],
    "branches": [
      {"id": "l14", "from": "b1", "to": "b4", "r_pu": 0.01, "x_pu": 0.08, "b_sh_pu": 0.02},
      {"id": "l24", "from": "b2", "to": "b4", "r_pu": 0.01, "x_pu": 0.09, "b_sh_pu": 0.02},
      {"id": "l25", "from": "b2", "to": "b5", "r_pu": 0.012, "x_pu": 0.1, "b_sh_pu": 0.02},
      {"id": "l35", "from": "b3", "to": "b5", "r_pu": 0.01, "x_pu": 0.07, "b_sh_pu": 0.02},
      {"id": "l45", "from": "b4", "to": "b5", "r_pu": 0.015, "x_pu": 0.12, "b_sh_pu": 0.03},
      {"id": "l46", "from": "b4", "to": "b6", "r_pu": 0.008, "x_pu": 0.06, "b_sh_pu": 0.02},
      {"id": "l56", "from": "b5", "to": "b6", "r_pu": 0.008, "x_pu": 0.06, "b_sh_pu": 0.02},
      {"id": "l47", "from": "b4", "to": "b7", "r_pu": 0.005, "x_pu": 0.08, "b_sh_pu": 0.01}
    ]
  },
  "noise": {"upsilon_per_s": 0.5, "std_pct": 5.0},
  "devices": {
    "external_grids": [{"id": "EXT", "bus": "b6"}],
    "machines": [
      {
        "id": "G1", "bus": "b1",
        "h_s": 5.0, "d_pu": 2.0, "x_d_prime_pu": 0.25,
        "p_rat_mw": 500.0, "p_set_pu": 2.0,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G2", "bus": "b2",
        "h_s": 4.0, "d_pu": 2.0, "x_d_prime_pu": 0.28,
        "p_rat_mw": 400.0, "p_set_pu": 1.6,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G3", "bus": "b3",
        "h_s": 3.5, "d_pu": 2.0, "x_d_prime_pu": 0.3,
        "p_rat_mw": 350.0, "p_set_pu": 1.4,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      }
    ],
    "vsm_converters": [
      {
        "id": "VSM1", "bus": "b7",
        "h_eq_s": 0.0, "d_eq_pu": 20.0, "x_c_pu": 0.3,
        "p_rat_mw": 100.0, "p_set_pu": 0.5, "q_set_pu": 0.0,
        "schedule": [{"t_s": 7200.0, "h_eq_s": 10.0}]
      }
    ],
    "loads": [
      {"id": "L1", "bus": "b4", "p_l0_pu": 2.4, "q_l0_pu": 0.5},
      {"id": "L2", "bus": "b5", "p_l0_pu": 2.2, "q_l0_pu": 0.45},
      {"id": "L3", "bus": "b2", "p_l0_pu": 0.6, "q_l0_pu": 0.1}
    ]
  },
  "scenario": {"duration_s": 14400.0, "setpoint_update_s": 900.0},
  "measurement": {
    "preset": "terminals",
    "sample_dt_s": 0.025,
    "window_s": 900.0,
    "filter": {"enabled": true, "f_lo_hz": 0.1, "f_hi_hz": 1.5, "order": 4}
  },
  "estimation": {
    "param_set": "H",
    "params": [
      {"name": "H:VSM1", "initial": 1.0, "lower": 0.0, "upper": 50.0}
    ],
    "trials": 5,
    "seed": 11,
    "stand_in_x_c_pu": 0.3
  },
  "integration": {"h_s": 0.005}
}
)__cfg"},
        {"gfl_droop", R"__cfg(// Three-machine grid plus three grid-following droop converters. The droop
// coefficient is the quantity under study; override it per run with a
// schedule-free copy of this file or the CLI's config overrides.
{
  "version": 1,
  "network": {
    "s_base_mva": 100.0,
    "f_base_hz": 60.0,
    "buses": [
      {"id": "b1", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.02},
      {"id": "b2", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.01},
      {"id": "b3", "base_kv": 230.0, "kind": "pv", "v_set_pu": 1.01},
      {"id": "b4", "base_kv": 230.0, "kind": "pq"},
      {"id": "b5", "base_kv": 230.0, "kind": "pq"},
      {"id": "b6", "base_kv": 230.0, "kind": "slack", "v_set_pu": 1.0},
      {"id": "b7", "base_kv": 230.0, "kind": "pq"},
      {"id": "b8", "base_kv": 230.0, "kind": "pq"},
      {"id": "b9", "base_kv": 230.0, "kind": "pq"}
    ],
    "branches": [
      {"id": "l14", "from": "b1", "to": "b4", "r_pu": 0.01, "x_pu": 0.08, "b_sh_pu": 0.02},
      {"id": "l24", "from": "b2", "to": "b4", "r_pu": 0.01, "x_pu": 0.09, "b_sh_pu": 0.02},
      {"id": "l25", "from": "b2", "to": "b5", "r_pu": 0.012, "x_pu": 0.1, "b_sh_pu": 0.02},
      {"id": "l35", "from": "b3", "to": "b5", "r_pu": 0.01, "x_pu": 0.07, "b_sh_pu": 0.02},
      {"id": "l45", "from": "b4", "to": "b5", "r_pu": 0.015, "x_pu": 0.12, "b_sh_pu": 0.03},
      {"id": "l46", "from": "b4", "to": "b6", "r_pu": 0.008, "x_pu": 0.06, "b_sh_pu": 0.02},
      {"id": "l56", "from": "b5", "to": "b6", "r_pu": 0.008, "x_pu": 0.06, "b_sh_pu": 0.02},
      {"id": "l47", "from": "b4", "to": "b7", "r_pu": 0.005, "x_pu": 0.08, "b_sh_pu": 0.01},
      {"id": "l58", "from": "b5", "to": "b8", "r_pu": 0.005, "x_pu": 0.09, "b_sh_pu": 0.01},
      {"id": "l49", "from": "b4", "to": "b9", "r_pu": 0.006, "x_pu": 0.1, "b_sh_pu": 0.01}
    ]
  },
  "noise": {"upsilon_per_s": 0.5, "std_pct": 5.0},
  "devices": {
    "external_grids": [{"id": "EXT", "bus": "b6"}],
    "machines": [
      {
        "id": "G1", "bus": "b1",
        "h_s": 5.0, "d_pu": 2.0, "x_d_prime_pu": 0.25,
        "p_rat_mw": 500.0, "p_set_pu": 2.0,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G2", "bus": "b2",
        "h_s": 4.0, "d_pu": 2.0, "x_d_prime_pu": 0.28,
        "p_rat_mw": 400.0, "p_set_pu": 1.6,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      },
      {
        "id": "G3", "bus": "b3",
        "h_s": 3.5, "d_pu": 2.0, "x_d_prime_pu": 0.3,
        "p_rat_mw": 350.0, "p_set_pu": 1.4,
        "governor": {"droop_gain_pu": 25.0, "t_g_s": 0.5},
        "avr": {"k_a": 50.0, "t_a_s": 0.2}
      }
    ],
    "gfl_converters": [
      {"id": "GFL1", "bus": "b7", "droop_pu": 2.0, "t_f_s": 0.1, "p_rat_mw": 100.0, "p_set_pu": 0.5},
      {"id": "GFL2", "bus": "b8", "droop_pu": 2.0, "t_f_s": 0.1, "p_rat_mw": 100.0, "p_set_pu": 0.5},
      {"id": "GFL3", "bus": "b9", "droop_pu": 2.0, "t_f_s": 0.1, "p_rat_mw": 100.0, "p_set_pu": 0.5}
    ],
    "loads": [
      {"id": "L1", "bus": "b4", "p_l0_pu": 2.4, "q_l0_pu": 0.5},
      {"id": "L2", "bus": "b5", "p_l0_pu": 2.2, "q_l0_pu": 0.45},
      {"id": "L3", "bus": "b2", "p_l0_pu": 0.6, "q_l0_pu": 0.1}
    ]
  },
  "scenario": {"duration_s": 7200.0, "setpoint_update_s": 900.0},
  "measurement": {
    "preset": "terminals",
    "sample_dt_s": 0.025,
    "window_s": 900.0,
    "filter": {"enabled": true, "f_lo_hz": 0.1, "f_hi_hz": 1.5, "order": 4}
  },
  "estimation": {
    "param_set": "H",
    "params": [
      {"name": "H:GFL1", "initial": 1.0, "lower": 0.0, "upper": 50.0},
      {"name": "H:GFL2", "initial": 1.0, "lower": 0.0, "upper": 50.0},
      {"name": "H:GFL3", "initial": 1.0, "lower": 0.0, "upper": 50.0},
      {"name": "D:GFL1", "initial": 5.0, "lower": 0.0, "upper": 100.0},
      {"name": "D:GFL2", "initial": 5.0, "lower": 0.0, "upper": 100.0},
      {"name": "D:GFL3", "initial": 5.0, "lower": 0.0, "upper": 100.0}
    ],
    "trials": 5,
    "seed": 21,
    "stand_in_x_c_pu": 0.3
  },
  "integration": {"h_s": 0.005}
}
)__cfg"},
    };
    return sys;
}

} // namespace ambest
