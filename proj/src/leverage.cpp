#include "sketchkit/leverage.hpp"

#include <algorithm>
#include <cmath>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/rng.hpp"

namespace sketchkit {

namespace {

DenseMatrix gaussian(size_t rows, size_t cols, double sd, uint64_t key) {
  Stream st(key);
  DenseMatrix g(rows, cols);
  for (size_t i = 0; i < rows; ++i)
    for (size_t j = 0; j < cols; ++j) g(i, j) = sd * st.normal();
  return g;
}

size_t ceil_size(double v) { return static_cast<size_t>(std::ceil(v - 1e-9)); }

}  // namespace

DenseMatrix preconditioner_from_sketch(const DenseMatrix& sa, bool allow_rank_deficient, size_t* rank) {
  SvdResult svd = thin_svd(sa);
  const Vector& s = svd.singular_values;
  RankTolerance tol;
  double rel = tol.resolve(sa.rows(), sa.cols());
  size_t r = 0;
  while (r < static_cast<size_t>(s.size()) && s[0] > 0 && s[r] > rel * s[0]) ++r;
  if (!allow_rank_deficient)
    require(r == static_cast<size_t>(sa.cols()), ErrorCode::RankDeficient, "sketched matrix is rank deficient");
  require(r > 0, ErrorCode::RankDeficient, "sketched matrix is zero");
  if (rank) *rank = r;
  return svd.vt.topRows(r).transpose() * s.head(r).cwiseInverse().asDiagonal();
}

Preconditioner build_preconditioner(const CsrMatrix& a, double gamma, uint64_t seed,
                                    const PreconditionerOptions& opt) {
  const Constants& c = constants();
  size_t n = a.n_rows(), d = a.n_cols();
  size_t ksub = opt.rank_hint ? opt.rank_hint : d;
  require(ksub >= 1 && ksub <= n, ErrorCode::RankDeficient, "preconditioner needs n >= subspace dimension");
  FastEmbedSpec spec = build_fast_embed(n, ksub, gamma, seed);
  DenseMatrix sa = fast_embed_apply(spec, a);
  Preconditioner p;
  p.r = preconditioner_from_sketch(sa, opt.allow_rank_deficient, &p.rank);

  // Normalize so the embedding's lower distortion is 1, as the leverage
  // sandwich assumes: exactly via a probe basis when affordable, otherwise
  // from the calibration minimum with a safety factor.
  if (static_cast<double>(n) <= c.lev_probe_max_n) {
    DenseMatrix u = orthonormal_basis(a.to_dense());
    Vector sv = singular_values(fast_embed_apply(spec, u));
    p.probe_normalized = true;
    p.probe_sigma_max = sv[0];
    p.probe_sigma_min = sv[sv.size() - 1];
    p.r *= p.probe_sigma_min;
    p.beta = p.probe_sigma_max / p.probe_sigma_min;
  } else {
    double f = spec.calibration.kappa * spec.calibration.min_sigma_min / c.lev_safety;
    p.r *= f;
    p.beta = spec.calibration.d_cal / f;
  }
  return p;
}

ProductOperator product_operator(const CsrMatrix& a, const DenseMatrix& r) {
  require(a.n_cols() == static_cast<size_t>(r.rows()), ErrorCode::DimMismatch, "product operator: A R dims");
  ProductOperator op;
  op.rows = a.n_rows();
  op.cols = r.cols();
  op.apply = [&a, &r](const DenseMatrix& g) { return a.multiply(DenseMatrix(r * g)); };
  op.apply_rows = [&a, &r](const std::vector<size_t>& idx, const DenseMatrix& g) {
    return a.select_rows(idx).multiply(DenseMatrix(r * g));
  };
  return op;
}

std::vector<double> LeverageSample::rescale() const {
  std::vector<double> out(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) out[i] = 1.0 / std::sqrt(probs[i]);
  return out;
}

LeverageSample two_stage_sample(const ProductOperator& op, const TwoStageConfig& cfg) {
  const Constants& c = constants();
  require(cfg.gamma > 0 && cfg.gamma <= 1, ErrorCode::BadParams, "two-stage sampling needs 0 < gamma <= 1");
  require(cfg.s > 0, ErrorCode::BadParams, "two-stage sampling needs s > 0");
  size_t n = op.rows, d = op.cols;
  LeverageSample out;
  out.s_target = cfg.s;
  if (n == 0 || d == 0) return out;

  size_t g1 = static_cast<size_t>(c.lev_g1_rows), g2 = static_cast<size_t>(c.lev_g2_cols);
  DenseMatrix G1 = gaussian(g1, n, 1.0 / std::sqrt(static_cast<double>(g1)), derive_seed(cfg.seed, 1));
  DenseMatrix G2 = gaussian(d, g2, 1.0 / std::sqrt(static_cast<double>(g2)), derive_seed(cfg.seed, 2));
  double fhat = (G1 * op.apply(G2)).squaredNorm();
  out.frob_estimate = fhat;
  require(fhat > 0, ErrorCode::DegenerateNorm, "Frobenius estimate of the product is zero");

  size_t t = std::max<size_t>(1, ceil_size(c.lev_g4_const / cfg.gamma));
  DenseMatrix G4 = gaussian(d, t, 1.0, derive_seed(cfg.seed, 4));
  DenseMatrix coarse = op.apply(G4);
  double ngam = std::pow(static_cast<double>(n), cfg.gamma);

  std::vector<size_t> first;
  std::vector<double> q_first;
  for (size_t i = 0; i < n; ++i) {
    double z = 2.0 * ngam * coarse.row(i).squaredNorm() / fhat;
    double q = std::min(1.0, cfg.s * z);
    out.sum_q += q;
    if (q > 0 && Stream(cfg.seed, 0x71, i).uniform() < q) {
      first.push_back(i);
      q_first.push_back(q);
    }
  }
  out.first_stage_count = first.size();
  if (first.empty()) return out;

  size_t g3 = std::max<size_t>(1, ceil_size(c.lev_g3_const * std::log2(static_cast<double>(std::max<size_t>(n, 2)))));
  DenseMatrix G3 = gaussian(d, g3, 1.0 / std::sqrt(static_cast<double>(g3)), derive_seed(cfg.seed, 3));
  DenseMatrix accurate = op.apply_rows(first, G3);
  for (size_t p = 0; p < first.size(); ++p) {
    double acc = std::min(1.0, (cfg.s / 4.0) * accurate.row(p).squaredNorm() / fhat);
    // Validity holds only on the good event; outside it, clamp and count.
    if (acc > q_first[p]) {
      ++out.validity_clamps;
      acc = q_first[p];
    }
    if (acc <= 0) continue;
    if (Stream(cfg.seed, 0x72, first[p]).uniform() < acc / q_first[p]) {
      out.indices.push_back(first[p]);
      out.probs.push_back(acc);
    }
  }
  return out;
}

LeverageSample sample_from_product(const CsrMatrix& a, const DenseMatrix& r, const TwoStageConfig& cfg) {
  return two_stage_sample(product_operator(a, r), cfg);
}

double leverage_sample_size(size_t k, double eps, double beta) {
  double kd = static_cast<double>(k);
  return constants().lev_C * kd * std::log(std::max(kd, 2.0)) * beta / (eps * eps);
}

CsrMatrix sampled_rows(const CsrMatrix& a, const LeverageSample& sample) {
  return a.select_rows(sample.indices).scale_rows(sample.rescale());
}

LeverageEmbedding leverage_embedding(const CsrMatrix& a, double eps, double gamma, uint64_t seed,
                                     const LeverageOptions& opt) {
  require(eps > 0 && eps < 1, ErrorCode::BadParams, "leverage embedding needs 0 < eps < 1");
  LeverageEmbedding out;
  PreconditionerOptions popt;
  popt.allow_rank_deficient = opt.allow_rank_deficient;
  popt.rank_hint = opt.rank_hint;
  out.precond = build_preconditioner(a, gamma, derive_seed(seed, 0x70), popt);
  TwoStageConfig cfg;
  cfg.gamma = gamma;
  cfg.s = leverage_sample_size(out.precond.rank, eps, out.precond.beta);
  cfg.seed = derive_seed(seed, 0x73);
  out.sample = sample_from_product(a, out.precond.r, cfg);
  out.s_lev_a = sampled_rows(a, out.sample).to_dense();
  return out;
}

OsnapSpec compression_spec(size_t rows_in, size_t k, double eps, uint64_t seed) {
  const Constants& c = constants();
  double kd = static_cast<double>(k), lk = std::log(std::max(kd, 2.0));
  size_t m = std::max<size_t>(1, ceil_size(c.lev_osnap_rows * kd * lk / (eps * eps)));
  size_t s = std::max<size_t>(1, ceil_size(c.lev_osnap_nnz * lk / eps));
  return OsnapSpec{m, rows_in, std::min(s, m), seed};
}

DenseMatrix compress_with_osnap(const DenseMatrix& s_lev_a, size_t k, double eps, uint64_t seed) {
  require(eps > 0 && eps < 1 && k >= 1, ErrorCode::BadParams, "compress_with_osnap: bad parameters");
  OsnapSpec spec = compression_spec(s_lev_a.rows(), k, eps, seed);
  if (static_cast<size_t>(s_lev_a.rows()) <= spec.m) return s_lev_a;
  return apply_sketch(spec, s_lev_a);
}

}  // namespace sketchkit
