#include "sketchkit/constants.hpp"

#include <cmath>
#include <cstring>

#include "sketchkit/error.hpp"
#include "sketchkit/rng.hpp"

namespace sketchkit {
namespace {

struct Entry {
  const char* name;
  double Constants::*member;
};

#define SK_ENTRY(x) Entry{#x, &Constants::x}
const Entry kEntries[] = {
    SK_ENTRY(osnap_row_const),     SK_ENTRY(flat_L),
    SK_ENTRY(flat_d),              SK_ENTRY(flat_kappa),
    SK_ENTRY(flat_blowup_cap),     SK_ENTRY(fe_row_const),
    SK_ENTRY(fe_M_const),          SK_ENTRY(fe_M_exp),
    SK_ENTRY(fe_p_const),          SK_ENTRY(fe_osnap_eps),
    SK_ENTRY(fe_calib_trials),     SK_ENTRY(fe_calib_quantile),
    SK_ENTRY(fe_dcal_margin),      SK_ENTRY(fe_g_nnz_cap),
    SK_ENTRY(lev_C),               SK_ENTRY(lev_g1_rows),
    SK_ENTRY(lev_g2_cols),         SK_ENTRY(lev_g3_const),
    SK_ENTRY(lev_g4_const),        SK_ENTRY(lev_safety),
    SK_ENTRY(lev_osnap_rows),      SK_ENTRY(lev_osnap_nnz),     SK_ENTRY(lev_probe_max_n),
    SK_ENTRY(reg_power_iters),     SK_ENTRY(reg_max_iter_const),
    SK_ENTRY(reg_eps_split),       SK_ENTRY(reg_stop_div),
    SK_ENTRY(rank_c),              SK_ENTRY(rank_floor_const),
    SK_ENTRY(rank_reduction_const), SK_ENTRY(rank_retries),
    SK_ENTRY(rank_confirm),        SK_ENTRY(lra_T_const),
    SK_ENTRY(lra_S_const),         SK_ENTRY(lra_T1_const),
    SK_ENTRY(lra_T2_const),        SK_ENTRY(lra_res_C),
    SK_ENTRY(lra_lev_const),       SK_ENTRY(lra_bss_factor),
    SK_ENTRY(oracle_auto_threshold),
};
#undef SK_ENTRY

Constants& storage() {
  static Constants c;
  return c;
}

const Entry* find(const std::string& name) {
  for (const auto& e : kEntries)
    if (name == e.name) return &e;
  return nullptr;
}

}  // namespace

Constants& constants() { return storage(); }

void reset_constants() { storage() = Constants{}; }

void set_constant(const std::string& name, double value) {
  const Entry* e = find(name);
  require(e != nullptr, ErrorCode::BadParams, "unknown constant '" + name + "'");
  require(std::isfinite(value) && value > 0, ErrorCode::BadParams,
          "constant '" + name + "' must be positive");
  storage().*(e->member) = value;
}

double get_constant(const std::string& name) {
  const Entry* e = find(name);
  require(e != nullptr, ErrorCode::BadParams, "unknown constant '" + name + "'");
  return storage().*(e->member);
}

std::vector<std::pair<std::string, double>> list_constants() {
  std::vector<std::pair<std::string, double>> out;
  for (const auto& e : kEntries) out.emplace_back(e.name, storage().*(e.member));
  return out;
}

uint64_t constants_fingerprint() {
  uint64_t h = 0x1234567ULL;
  for (const auto& e : kEntries) {
    double v = storage().*(e.member);
    uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    h = mix64(h ^ bits);
  }
  return h;
}

}  // namespace sketchkit
