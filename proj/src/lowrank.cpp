#include "sketchkit/lowrank.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/rng.hpp"
#include "sketchkit/sketches.hpp"

namespace sketchkit {

namespace {

size_t ceil_size(double v) { return static_cast<size_t>(std::ceil(v - 1e-9)); }

// A T for a CountSketch T with t columns, or A itself when t >= d.
DenseMatrix right_countsketch(const CsrMatrix& a, size_t t, uint64_t seed, bool* identity = nullptr) {
  bool id = t >= a.n_cols();
  if (identity) *identity = id;
  if (id) return a.to_dense();
  return apply_sketch_right(CountSketchSpec{t, a.n_cols(), seed}, a).to_dense();
}

DenseMatrix right_countsketch(const DenseMatrix& a, size_t t, uint64_t seed) {
  if (t >= static_cast<size_t>(a.cols())) return a;
  CountSketchSpec spec{t, static_cast<size_t>(a.cols()), seed};
  return apply_sketch(spec, DenseMatrix(a.transpose())).transpose();
}

DenseMatrix left_countsketch(const DenseMatrix& a, size_t t, uint64_t seed) {
  if (t >= static_cast<size_t>(a.rows())) return a;
  return apply_sketch(CountSketchSpec{t, static_cast<size_t>(a.rows()), seed}, a);
}

double lower_potential_gap(const Vector& eig, double l) {
  double s = 0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) s += 1.0 / (eig[i] - l);
  return s;
}

}  // namespace

LeverageSample residual_sample(const CsrMatrix& a, const DenseMatrix& u, const ResidualSampleConfig& cfg,
                               SampleAxis axis) {
  require(cfg.s > 0 && cfg.alpha > 0 && cfg.alpha <= 1, ErrorCode::BadParams, "residual sample: bad config");
  CsrMatrix at;
  const CsrMatrix* src = &a;
  if (axis == SampleAxis::Columns) {
    at = a.transpose();
    src = &at;
  }
  const CsrMatrix& b = *src;  // rows of b are the items sampled
  require(static_cast<size_t>(u.rows()) == b.n_cols(), ErrorCode::DimMismatch, "residual sample: basis dims");
  DenseMatrix bu = b.multiply(u);  // E = b - (b U) U^T
  ProductOperator op;
  op.rows = b.n_rows();
  op.cols = b.n_cols();
  op.apply = [&](const DenseMatrix& g) { return DenseMatrix(b.multiply(g) - bu * (u.transpose() * g)); };
  op.apply_rows = [&](const std::vector<size_t>& idx, const DenseMatrix& g) {
    DenseMatrix sub = b.select_rows(idx).multiply(g);
    DenseMatrix ug = u.transpose() * g;
    for (size_t p = 0; p < idx.size(); ++p) sub.row(p) -= bu.row(idx[p]) * ug;
    return sub;
  };
  TwoStageConfig tc;
  tc.gamma = cfg.gamma;
  tc.s = 16.0 * cfg.alpha * cfg.s;
  tc.seed = cfg.seed;
  double a2 = a.frobenius_norm();
  a2 *= a2;
  LeverageSample out;
  try {
    out = two_stage_sample(op, tc);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateNorm) throw;
    fail(ErrorCode::DegenerateResidual, "residual is zero");
  }
  require(out.frob_estimate > 1e-24 * a2, ErrorCode::DegenerateResidual, "residual is negligible");
  return out;
}

DualSetResult dual_set_sparsify(const DualSetInput& input) {
  const DenseMatrix& v = input.v_basis;
  const DenseMatrix& res = input.residual;
  size_t r = v.rows(), k = v.cols(), rp = input.target;
  require(static_cast<size_t>(res.rows()) == r, ErrorCode::DimMismatch, "dual set: row counts differ");
  require(k >= 1 && rp > k && r >= rp, ErrorCode::BadParams, "dual set needs k < target <= rows");

  double kd = static_cast<double>(k), rpd = static_cast<double>(rp);
  double shrink = 1.0 - std::sqrt(kd / rpd);
  Vector anorm = res.rowwise().squaredNorm();
  double fro = anorm.sum();
  double delta_u = fro > 0 ? fro / shrink : 1.0;
  const double delta_l = 1.0;
  std::vector<double> weight(r, 0.0);
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);

  for (size_t tau = 0; tau < rp; ++tau) {
    double l = static_cast<double>(tau) - std::sqrt(rpd * kd);
    double l_next = l + delta_l;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(acc);
    Vector eig = es.eigenvalues();
    const Eigen::MatrixXd& q = es.eigenvectors();
    double gap = lower_potential_gap(eig, l_next) - lower_potential_gap(eig, l);
    // For each candidate: L(v) = v^T (A - l' I)^{-2} v / gap - v^T (A - l' I)^{-1} v.
    DenseMatrix proj = v * q;  // coordinates in the eigenbasis
    size_t best = r;
    double best_margin = -INFINITY, best_l = 0, best_u = 0;
    for (size_t i = 0; i < r; ++i) {
      double m1 = 0, m2 = 0;
      for (size_t j = 0; j < k; ++j) {
        double inv = 1.0 / (eig[j] - l_next);
        double c2 = proj(i, j) * proj(i, j);
        m1 += c2 * inv;
        m2 += c2 * inv * inv;
      }
      double lower = m2 / gap - m1;
      double upper = anorm[i] / delta_u;
      if (lower > 0 && upper <= lower && lower - upper > best_margin) {
        best_margin = lower - upper;
        best = i;
        best_l = lower;
        best_u = upper;
      }
    }
    require(best < r, ErrorCode::BarrierStuck, "dual set sparsification: no row fits between barriers");
    double t = 1.0 / ((best_u + best_l) / 2.0);
    weight[best] += t;
    acc += t * v.row(best).transpose() * v.row(best);
  }
  DualSetResult out;
  double scale = shrink / rpd;
  for (size_t i = 0; i < r; ++i)
    if (weight[i] > 0) {
      out.indices.push_back(i);
      out.weights.push_back(weight[i] * scale);
    }
  return out;
}

SketchedRegression rank_k_sketched_regression(const DenseMatrix& m, const CsrMatrix& a, size_t k, double eps,
                                              uint64_t seed) {
  const Constants& c = constants();
  require(static_cast<size_t>(m.rows()) == a.n_rows(), ErrorCode::DimMismatch, "sketched regression: M rows");
  require(k >= 1 && eps > 0 && eps < 1, ErrorCode::BadParams, "sketched regression: bad k or eps");
  SketchedRegression out;
  double ke = static_cast<double>(k) / eps;
  out.t1_rows = ceil_size(c.lra_T1_const * ke * ke / (eps * eps));
  out.t2_cols = ceil_size(c.lra_T2_const * static_cast<double>(k * k) / (eps * eps));
  out.t1_identity = out.t1_rows >= a.n_rows();
  out.t2_identity = out.t2_cols >= a.n_cols();
  if (out.t1_identity) out.t1_rows = a.n_rows();
  if (out.t2_identity) out.t2_cols = a.n_cols();
  out.t1_seed = derive_seed(seed, 1);

  DenseMatrix p = left_countsketch(m, out.t1_rows, out.t1_seed);
  DenseMatrix t1a = left_countsketch(a.to_dense(), out.t1_rows, out.t1_seed);
  DenseMatrix b = right_countsketch(t1a, out.t2_cols, derive_seed(seed, 2));

  // X* = P^+ [P_col(P) B]_k.
  DenseMatrix up = orthonormal_basis(p);
  DenseMatrix proj = up * (up.transpose() * b);
  SvdResult svd = thin_svd(proj);
  require(static_cast<size_t>(svd.singular_values.size()) >= k, ErrorCode::RankCollapse,
          "sketched regression: fewer than k directions");
  double tol = RankTolerance{}.resolve(proj.rows(), proj.cols());
  require(svd.singular_values[k - 1] > tol * svd.singular_values[0], ErrorCode::RankCollapse,
          "sketched regression: projected problem has rank below k");
  out.x1 = pseudo_inverse(p) * (svd.u.leftCols(k) * svd.singular_values.head(k).asDiagonal());
  out.x2 = svd.vt.topRows(k);
  return out;
}

DenseMatrix left_factor(const CsrMatrix& a, size_t k, double eps, double gamma, uint64_t seed,
                        LeftFactorTrace* trace) {
  const Constants& c = constants();
  size_t n = a.n_rows(), d = a.n_cols();
  require(k >= 1 && k < std::min(n, d), ErrorCode::BadRank, "left_factor needs 1 <= k < min(n, d)");
  require(eps > 0 && eps < 1, ErrorCode::BadParams, "left_factor needs 0 < eps < 1");
  LeftFactorTrace tr;
  double kd = static_cast<double>(k);

  // Projection-cost-preserving column sketch, then a row sketch.
  tr.t_cols = std::min(d, ceil_size(c.lra_T_const * kd * kd));
  uint64_t t_seed = derive_seed(seed, 1);
  DenseMatrix at = right_countsketch(a, tr.t_cols, t_seed);
  tr.s_rows = std::min(n, ceil_size(c.lra_S_const * kd * kd * kd * kd));
  DenseMatrix sat = left_countsketch(at, tr.s_rows, derive_seed(seed, 2));

  // Column selection Omega by dual-set sparsification of S A T's columns.
  size_t target = std::min(ceil_size(c.lra_bss_factor * kd), static_cast<size_t>(sat.cols()));
  std::vector<size_t> omega;
  if (target <= k || target >= static_cast<size_t>(sat.cols())) {
    for (Eigen::Index j = 0; j < sat.cols(); ++j) omega.push_back(j);
  } else {
    SvdResult svd = thin_svd(sat);
    DualSetInput in;
    in.v_basis = svd.vt.topRows(k).transpose();
    DenseMatrix top = svd.u.leftCols(k) * svd.singular_values.head(k).asDiagonal() * svd.vt.topRows(k);
    in.residual = (sat - top).transpose();
    in.target = target;
    omega = dual_set_sparsify(in).indices;
  }
  tr.omega = omega.size();
  DenseMatrix at_omega(n, omega.size());
  for (size_t j = 0; j < omega.size(); ++j) at_omega.col(j) = at.col(omega[j]);
  DenseMatrix u = orthonormal_basis(at_omega);
  require(static_cast<size_t>(u.cols()) >= 1, ErrorCode::RankCollapse, "left_factor: A T Omega is zero");

  // Column residual sampling against colspan(U).
  ResidualSampleConfig rc;
  rc.s = std::ceil(c.lra_res_C * kd / eps);
  rc.gamma = gamma;
  rc.seed = derive_seed(seed, 3);
  std::vector<size_t> cols;
  try {
    cols = residual_sample(a, u, rc, SampleAxis::Columns).indices;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateResidual) throw;
  }
  tr.column_sample = cols.size();
  CsrMatrix as = a.transpose().select_rows(cols);
  DenseMatrix m(n, u.cols() + cols.size());
  m.leftCols(u.cols()) = u;
  if (!cols.empty()) m.rightCols(cols.size()) = as.to_dense().transpose();
  tr.m_cols = m.cols();

  SketchedRegression sr = rank_k_sketched_regression(m, a, k, eps, derive_seed(seed, 4));
  DenseMatrix v = orthonormal_basis(DenseMatrix(m * sr.x1));
  require(static_cast<size_t>(v.cols()) == k, ErrorCode::RankCollapse, "left_factor: M X1 lost rank k");
  tr.u = std::move(u);
  if (trace) *trace = std::move(tr);
  return v;
}

DenseMatrix right_factor(const CsrMatrix& a, const DenseMatrix& v, double eps, double gamma, uint64_t seed,
                         RightFactorTrace* trace) {
  const Constants& c = constants();
  size_t n = a.n_rows(), d = a.n_cols(), k = v.cols();
  require(static_cast<size_t>(v.rows()) == n, ErrorCode::DimMismatch, "right_factor: V rows != A rows");
  require(k >= 1 && eps > 0 && eps < 1, ErrorCode::BadParams, "right_factor: bad k or eps");
  RightFactorTrace tr;
  double kd = static_cast<double>(k);

  // Leverage sample of V's rows: p_i = ||V_i||^2 / k.
  double s_lev = std::ceil(c.lra_lev_const * kd * std::log2(std::max(kd, 2.0)));
  std::vector<size_t> lev;
  std::vector<double> lev_scale;
  uint64_t lev_seed = derive_seed(seed, 1);
  for (size_t i = 0; i < n; ++i) {
    double q = std::min(1.0, s_lev * v.row(i).squaredNorm() / kd);
    if (q > 0 && Stream(lev_seed, i).uniform() < q) {
      lev.push_back(i);
      lev_scale.push_back(1.0 / std::sqrt(q));
    }
  }
  tr.lev_rows = lev.size();
  require(!lev.empty(), ErrorCode::RankCollapse, "right_factor: empty leverage sample");
  CsrMatrix s_lev_a = a.select_rows(lev).scale_rows(lev_scale);
  DenseMatrix s_lev_v(lev.size(), k);
  for (size_t p = 0; p < lev.size(); ++p) s_lev_v.row(p) = lev_scale[p] * v.row(lev[p]);

  // Dual-set selection of 4k rows of S_lev A.
  size_t target = ceil_size(c.lra_bss_factor * kd);
  std::vector<size_t> chosen;
  if (lev.size() <= target) {
    for (size_t p = 0; p < lev.size(); ++p) chosen.push_back(p);
  } else {
    DualSetInput in;
    in.v_basis = orthonormal_basis(s_lev_v);
    require(static_cast<size_t>(in.v_basis.cols()) == k, ErrorCode::RankCollapse,
            "right_factor: leverage sample lost rank");
    size_t t_cols = std::min(d, ceil_size(c.lra_T_const * kd * kd));
    DenseMatrix slat = right_countsketch(s_lev_a, t_cols, derive_seed(seed, 2));
    DenseMatrix vt_at = v.transpose() * right_countsketch(a, t_cols, derive_seed(seed, 2));
    in.residual = slat - s_lev_v * vt_at;
    in.target = target;
    chosen = dual_set_sparsify(in).indices;
  }
  tr.bss_rows = chosen.size();
  DenseMatrix r1 = s_lev_a.select_rows(chosen).to_dense();
  DenseMatrix u = orthonormal_basis(DenseMatrix(r1.transpose()));  // d x <=4k

  // Row residual sampling against rowspace(R1).
  ResidualSampleConfig rc;
  rc.s = std::ceil(c.lra_res_C * kd / eps);
  rc.gamma = gamma;
  rc.seed = derive_seed(seed, 3);
  std::vector<size_t> rows;
  try {
    rows = residual_sample(a, u, rc, SampleAxis::Rows).indices;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateResidual) throw;
  }
  tr.row_sample = rows.size();
  DenseMatrix r(u.cols() + rows.size(), d);
  r.topRows(u.cols()) = u.transpose();
  if (!rows.empty()) r.bottomRows(rows.size()) = a.select_rows(rows).to_dense();
  tr.r_rows = r.rows();

  // X_T = (T1 V)^+ (T1 A T2) (R T2)^+, X = X_T R.
  double ke = kd / eps;
  size_t t1 = std::min(n, ceil_size(c.lra_T1_const * ke * ke / (eps * eps)));
  size_t t2 = std::min(d, ceil_size(c.lra_T2_const * kd * kd / (eps * eps)));
  uint64_t t1_seed = derive_seed(seed, 4), t2_seed = derive_seed(seed, 5);
  DenseMatrix t1v = left_countsketch(v, t1, t1_seed);
  DenseMatrix t1a = left_countsketch(a.to_dense(), t1, t1_seed);
  DenseMatrix t1at2 = right_countsketch(t1a, t2, t2_seed);
  DenseMatrix rt2 = right_countsketch(r, t2, t2_seed);
  DenseMatrix xt = pseudo_inverse(t1v) * t1at2 * pseudo_inverse(rt2);
  if (trace) *trace = tr;
  return xt * r;
}

LraResult low_rank(const CsrMatrix& a, size_t k, double eps, double gamma, uint64_t seed, bool oracle) {
  LraResult out;
  out.factors.v = left_factor(a, k, eps, gamma, derive_seed(seed, 0x4c), &out.report.left);
  out.factors.x = right_factor(a, out.factors.v, eps, gamma, derive_seed(seed, 0x52), &out.report.right);
  if (oracle) {
    DenseMatrix ad = a.to_dense();
    LraReport& rep = out.report;
    rep.oracle = true;
    rep.opt = rank_k_residual2(ad, k);
    double denom = rep.opt > 0 ? rep.opt : 1.0;
    const DenseMatrix& u = rep.left.u;
    const DenseMatrix& v = out.factors.v;
    rep.intermediate_ratio = (ad - u * (u.transpose() * ad)).squaredNorm() / denom;
    rep.left_ratio = (ad - v * (v.transpose() * ad)).squaredNorm() / denom;
    rep.final_ratio = (ad - v * out.factors.x).squaredNorm() / denom;
  }
  return out;
}

}  // namespace sketchkit
