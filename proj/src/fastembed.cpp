#include "sketchkit/fastembed.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>
#include <map>
#include <mutex>
#include <tuple>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/rng.hpp"

namespace sketchkit {

namespace {

double log_k(size_t k) { return std::log(static_cast<double>(std::max<size_t>(k, 2))); }

size_t ceil_size(double v) { return static_cast<size_t>(std::ceil(v - 1e-9)); }

// Smallest fraction of flattened coordinates above eta over a fixed probe set.
double measure_large_fraction(const FlattenMap& fmap) {
  double eta = default_eta(fmap);
  double worst = 1.0;
  Stream st(fmap.seed, 0x70726f6265ULL);
  for (size_t probe = 0; probe < 8; ++probe) {
    Vector x = Vector::Zero(fmap.n_in);
    if (probe < 4) {
      x[st.below(fmap.n_in)] = 1.0;
    } else {
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = st.normal();
      x.normalize();
    }
    FlattenStats s = flatten_stats(fmap, x, eta);
    worst = std::min(worst, static_cast<double>(s.large_count) / static_cast<double>(fmap.m_out));
  }
  return std::max(worst, 1.0 / static_cast<double>(fmap.m_out));
}

template <class Mat>
DenseMatrix apply_chain(const FastEmbedSpec& spec, const Mat& a) {
  DenseMatrix y;
  if (spec.s1_identity) {
    if constexpr (std::is_same_v<Mat, CsrMatrix>) y = a.to_dense();
    else y = a;
  } else {
    y = apply_sketch(spec.s1, a);
  }
  if (!spec.s2_identity) y = apply_sketch(spec.s2, y);
  DenseMatrix f = apply_flatten(spec.fmap, y);
  DenseMatrix out = apply_sketch(spec.g, f);
  out *= spec.calibration.kappa;
  return out;
}

}  // namespace

FastEmbedSpec build_fast_embed_uncalibrated(size_t n, size_t k, double gamma, uint64_t seed) {
  require(k >= 1 && k <= n, ErrorCode::BadParams, "fast embedding needs 1 <= k <= n");
  require(gamma > 0 && gamma < 1, ErrorCode::BadParams, "fast embedding needs 0 < gamma < 1");
  const Constants& c = constants();
  FastEmbedSpec s;
  s.n = n;
  s.k = k;
  s.gamma = gamma;
  s.seed = seed;
  double kd = static_cast<double>(k);

  size_t m1 = std::max<size_t>(4, ceil_size(c.fe_row_const * std::pow(kd, 1.0 + gamma) * log_k(k)));
  size_t cur = n;
  if (cur <= m1) {
    s.s1_identity = true;
  } else {
    size_t nnz = std::max<size_t>(1, ceil_size(1.0 / (gamma * c.fe_osnap_eps)));
    s.s1 = OsnapSpec{m1, cur, std::min(nnz, m1), derive_seed(seed, 1)};
    cur = m1;
  }
  size_t m2 = std::max<size_t>(4, ceil_size(c.fe_row_const * kd * log_k(k)));
  if (cur <= m2) {
    s.s2_identity = true;
  } else {
    size_t nnz = std::max<size_t>(1, ceil_size(log_k(k) / c.fe_osnap_eps));
    s.s2 = OsnapSpec{m2, cur, std::min(nnz, m2), derive_seed(seed, 2)};
    cur = m2;
  }
  require(cur >= 4, ErrorCode::BadParams, "fast embedding needs at least 4 rows after compression");
  s.fmap = build_flatten_map(cur, derive_seed(seed, 3));
  s.large_fraction = measure_large_fraction(s.fmap);

  double ll = std::log2(std::log2(static_cast<double>(std::max<size_t>(k, 4))));
  size_t M = ceil_size(c.fe_M_const * kd * std::pow(ll, c.fe_M_exp));
  size_t r = s.fmap.m_out;
  double p = std::min(1.0, c.fe_p_const / (s.large_fraction * static_cast<double>(r)));
  s.g = SparseSignSpec{M, r, p, 1.0 / std::sqrt(static_cast<double>(M) * p), derive_seed(seed, 4)};

  std::vector<size_t> row_nnz(M, 0);
  std::vector<std::pair<size_t, double>> col;
  for (size_t j = 0; j < r; ++j) {
    col.clear();
    sketch_column(s.g, j, col);
    s.g_max_col_nnz = std::max(s.g_max_col_nnz, col.size());
    for (const auto& e : col) ++row_nnz[e.first];
  }
  s.g_max_row_nnz = *std::max_element(row_nnz.begin(), row_nnz.end());
  require(static_cast<double>(std::max(s.g_max_row_nnz, s.g_max_col_nnz)) <= c.fe_g_nnz_cap,
          ErrorCode::BadParams, "sparse sign stage exceeds configured nonzero cap");
  return s;
}

const FastEmbedCalibration& calibrate_fast_embed(size_t n, size_t k, double gamma) {
  static std::mutex mu;
  static std::map<std::tuple<size_t, size_t, double, uint64_t>, FastEmbedCalibration> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto key = std::make_tuple(n, k, gamma, constants_fingerprint());
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  const Constants& c = constants();
  size_t trials = std::max<size_t>(1, static_cast<size_t>(c.fe_calib_trials));
  std::vector<double> smin(trials), smax(trials);
  for (size_t t = 0; t < trials; ++t) {
    uint64_t cseed = derive_seed(0xca11b7a7e5ULL, t);
    FastEmbedSpec spec = build_fast_embed_uncalibrated(n, k, gamma, cseed);
    Stream st(cseed, 0x7375627370ULL);
    DenseMatrix g(n, k);
    for (Eigen::Index i = 0; i < g.rows(); ++i)
      for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = st.normal();
    DenseMatrix u = orthonormalize_columns(g).q;
    Distortion d = embedding_distortion(apply_chain(spec, u));
    smin[t] = d.sigma_min;
    smax[t] = d.sigma_max;
  }
  FastEmbedCalibration cal;
  cal.trials = trials;
  std::vector<double> sorted = smin;
  std::sort(sorted.begin(), sorted.end());
  size_t qi = static_cast<size_t>(std::floor(c.fe_calib_quantile * static_cast<double>(trials)));
  cal.q_sigma_min = sorted[std::min(qi, trials - 1)];
  cal.min_sigma_min = sorted.front();
  cal.max_sigma_max = *std::max_element(smax.begin(), smax.end());
  require(cal.q_sigma_min > 0, ErrorCode::Internal, "fast embedding calibration collapsed");
  cal.kappa = 1.0 / cal.q_sigma_min;
  cal.d_cal = cal.kappa * cal.max_sigma_max * c.fe_dcal_margin;
  return cache.emplace(key, cal).first->second;
}

FastEmbedSpec build_fast_embed(size_t n, size_t k, double gamma, uint64_t seed) {
  FastEmbedSpec s = build_fast_embed_uncalibrated(n, k, gamma, seed);
  s.calibration = calibrate_fast_embed(n, k, gamma);
  return s;
}

DenseMatrix fast_embed_apply(const FastEmbedSpec& spec, const CsrMatrix& a) {
  require(a.n_rows() == spec.n, ErrorCode::DimMismatch, "fast_embed_apply: row count");
  return apply_chain(spec, a);
}

DenseMatrix fast_embed_apply(const FastEmbedSpec& spec, const DenseMatrix& a) {
  require(static_cast<size_t>(a.rows()) == spec.n, ErrorCode::DimMismatch, "fast_embed_apply: row count");
  return apply_chain(spec, a);
}

Distortion sparse_sign_distortion_check(const SparseSignSpec& g, const DenseMatrix& flat_basis) {
  return embedding_distortion(apply_sketch(g, flat_basis));
}

FastEmbedStages materialize_stages(const FastEmbedSpec& spec) {
  FastEmbedStages st;
  st.s1 = spec.s1_identity ? CsrMatrix::identity(spec.n) : materialize(spec.s1);
  size_t n2 = spec.s1_identity ? spec.n : spec.s1.m;
  st.s2 = spec.s2_identity ? CsrMatrix::identity(n2) : materialize(spec.s2);
  st.flatten = apply_flatten(spec.fmap, DenseMatrix(DenseMatrix::Identity(spec.fmap.n_in, spec.fmap.n_in)));
  st.g = materialize(spec.g);
  st.kappa = spec.calibration.kappa;
  return st;
}

std::string fast_embed_to_json(const FastEmbedSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n;
  j["k"] = spec.k;
  j["gamma"] = spec.gamma;
  j["seed"] = spec.seed;
  j["s1"] = spec.s1_identity ? nlohmann::json("identity") : nlohmann::json::parse(sketch_to_json(spec.s1));
  j["s2"] = spec.s2_identity ? nlohmann::json("identity") : nlohmann::json::parse(sketch_to_json(spec.s2));
  j["flatten"] = nlohmann::json::parse(flatten_to_json(spec.fmap));
  j["g"] = nlohmann::json::parse(sketch_to_json(spec.g));
  j["large_fraction"] = spec.large_fraction;
  j["g_max_row_nnz"] = spec.g_max_row_nnz;
  j["g_max_col_nnz"] = spec.g_max_col_nnz;
  j["kappa"] = spec.calibration.kappa;
  j["d_cal"] = spec.calibration.d_cal;
  j["calibration_trials"] = spec.calibration.trials;
  return j.dump();
}

}  // namespace sketchkit
