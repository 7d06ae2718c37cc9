#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace sketchkit {

// Tunable constants for every quantity that the algorithms only specify up to
// O(.) or Theta(.). Overridable by name (CLI: --set name=value).
struct Constants {
  // sketches
  double osnap_row_const = 4;

  // flatten
  double flat_L = 1;
  double flat_d = 2;
  double flat_kappa = 0.1;
  double flat_blowup_cap = 128;

  // fastembed
  double fe_row_const = 4;
  double fe_M_const = 8;
  double fe_M_exp = 2;
  double fe_p_const = 10;
  double fe_osnap_eps = 0.5;
  double fe_calib_trials = 100;
  double fe_calib_quantile = 0.05;
  double fe_dcal_margin = 1.1;
  double fe_g_nnz_cap = 512;

  // leverage
  double lev_C = 16;
  double lev_g1_rows = 8;
  double lev_g2_cols = 8;
  double lev_g3_const = 4;
  double lev_g4_const = 2;
  double lev_safety = 1.1;
  double lev_osnap_rows = 4;
  double lev_osnap_nnz = 2;
  double lev_probe_max_n = 2000;

  // regression
  double reg_power_iters = 20;
  double reg_max_iter_const = 50;
  double reg_eps_split = 4;
  double reg_stop_div = 8;

  // rankalg
  double rank_c = 11;
  double rank_floor_const = 4;
  double rank_reduction_const = 2;
  double rank_retries = 3;
  double rank_confirm = 2;

  // lowrank
  double lra_T_const = 8;
  double lra_S_const = 16;
  double lra_T1_const = 8;
  double lra_T2_const = 8;
  double lra_res_C = 16;
  double lra_lev_const = 8;
  double lra_bss_factor = 4;

  // cli
  double oracle_auto_threshold = 2000;
};

Constants& constants();
void reset_constants();

// Throws Error(BadParams) for an unknown name or a nonpositive value.
void set_constant(const std::string& name, double value);
double get_constant(const std::string& name);
std::vector<std::pair<std::string, double>> list_constants();
uint64_t constants_fingerprint();

}  // namespace sketchkit
