#include "sketchkit/regression.hpp"

#include <cmath>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/fastembed.hpp"
#include "sketchkit/leverage.hpp"
#include "sketchkit/rng.hpp"

namespace sketchkit {

GdState gd_step(const GdState& state, const DenseMatrix& m, const Vector& b) {
  GdState next = state;
  Vector grad = m.transpose() * (m * state.x - b);
  next.x = state.x - state.step * grad;
  next.residual_norm = (m * next.x - b).norm();
  next.iteration = state.iteration + 1;
  return next;
}

double gd_step_size(const DenseMatrix& m, size_t power_iters, uint64_t seed) {
  Stream st(seed);
  Vector v(m.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = st.normal();
  v.normalize();
  DenseMatrix gram = m.transpose() * m;
  double lmax = 0;
  for (size_t it = 0; it < power_iters; ++it) {
    Vector w = gram * v;
    lmax = w.norm();
    if (lmax == 0) return 1.0;
    v = w / lmax;
  }
  // Power iteration on (lmax I - gram) for the smallest eigenvalue.
  double shift = lmax * 1.01;
  Vector u(m.cols());
  for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = st.normal();
  u.normalize();
  double mu = 0;
  for (size_t it = 0; it < power_iters; ++it) {
    Vector w = shift * u - gram * u;
    mu = w.norm();
    u = w / mu;
  }
  double lmin = std::max(0.0, shift - mu);
  return 2.0 / (lmax * 1.01 + lmin);
}

Vector warm_start(const DenseMatrix& sa_r, const Vector& sb) {
  require(sa_r.rows() == sb.size(), ErrorCode::DimMismatch, "warm_start: dims");
  return sa_r.transpose() * sb;
}

RegressionResult solve_regression(const RegressionProblem& prob) {
  const Constants& c = constants();
  const CsrMatrix& a = prob.a;
  size_t n = a.n_rows(), k = a.n_cols();
  require(static_cast<size_t>(prob.b.size()) == n, ErrorCode::DimMismatch, "regression: b length != rows of A");
  require(prob.eps > 0 && prob.eps < 1, ErrorCode::BadParams, "regression needs 0 < eps < 1");
  require(k >= 1 && n > k, ErrorCode::RankDeficient, "regression needs n > k >= 1");

  // [A b] as one sparse matrix.
  std::vector<Triplet> t;
  t.reserve(a.nnz() + n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t p = a.row_ptr()[i]; p < a.row_ptr()[i + 1]; ++p) t.push_back({i, a.col_idx()[p], a.values()[p]});
    if (prob.b[i] != 0.0) t.push_back({i, k, prob.b[i]});
  }
  CsrMatrix ab = CsrMatrix::from_triplets(n, k + 1, std::move(t));

  // Preconditioner and warm start from the fast embedding of [A b].
  FastEmbedSpec spec = build_fast_embed(n, k + 1, prob.gamma, derive_seed(prob.seed, 1));
  DenseMatrix s_ab = fast_embed_apply(spec, ab);
  DenseMatrix sa = s_ab.leftCols(k);
  Vector sb = s_ab.col(k);
  DenseMatrix r = preconditioner_from_sketch(sa, false);
  DenseMatrix sar = sa * r;
  Vector x = warm_start(sar, sb);

  // Leverage-score epsilon-embedding of [A b], rank deficiency allowed for
  // consistent systems.
  LeverageOptions lopt;
  lopt.allow_rank_deficient = true;
  lopt.rank_hint = k + 1;
  LeverageEmbedding lev = leverage_embedding(ab, prob.eps / c.reg_eps_split, prob.gamma, derive_seed(prob.seed, 2), lopt);
  DenseMatrix m = lev.s_lev_a.leftCols(k) * r;
  Vector mb = lev.s_lev_a.col(k);

  RegressionResult out;
  RegressionReport& rep = out.report;
  rep.d_cal = spec.calibration.d_cal;
  rep.sample_rows = lev.sample.indices.size();
  Vector sv = singular_values(m);
  rep.cond_sar = sv.size() && sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1] : INFINITY;

  GdState st;
  st.x = x;
  st.residual_norm = (m * x - mb).norm();
  st.step = gd_step_size(m, static_cast<size_t>(c.reg_power_iters), derive_seed(prob.seed, 3));
  rep.step = st.step;
  rep.warm_start_residual = st.residual_norm;
  rep.residual_history.push_back(st.residual_norm);
  rep.max_iters = static_cast<size_t>(
      std::ceil(c.reg_max_iter_const * std::log(1.0 / prob.eps) * rep.d_cal * rep.d_cal));
  double tol = prob.eps / c.reg_stop_div;
  double floor = 1e-14 * std::max(1.0, mb.norm());
  bool converged = st.residual_norm <= floor;
  while (!converged) {
    require(st.iteration < rep.max_iters, ErrorCode::NoConvergence,
            "gradient descent exceeded max_iters before reaching tolerance");
    GdState next = gd_step(st, m, mb);
    double improvement = (st.residual_norm - next.residual_norm) / std::max(st.residual_norm, floor);
    if (next.residual_norm <= st.residual_norm) st = next;
    else st.iteration = next.iteration;
    rep.residual_history.push_back(st.residual_norm);
    converged = improvement < tol || st.residual_norm <= floor;
  }
  rep.iterations = st.iteration;
  rep.sketched_residual = st.residual_norm;
  out.x = r * st.x;
  return out;
}

Vector regression_oracle(const CsrMatrix& a, const Vector& b) {
  DenseMatrix ad = a.to_dense();
  require(ad.rows() == b.size(), ErrorCode::DimMismatch, "regression oracle: dims");
  Eigen::MatrixXd gram = ad.transpose() * ad;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  require(ldlt.info() == Eigen::Success, ErrorCode::RankDeficient, "normal equations are singular");
  Vector rhs = ad.transpose() * b;
  return ldlt.solve(rhs);
}

}  // namespace sketchkit
