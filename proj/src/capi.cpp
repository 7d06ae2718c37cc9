#include "sketchkit/sketchkit.h"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <new>
#include <string>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/fastembed.hpp"
#include "sketchkit/leverage.hpp"
#include "sketchkit/linalg.hpp"
#include "sketchkit/lowrank.hpp"
#include "sketchkit/rankalg.hpp"
#include "sketchkit/regression.hpp"
#include "sketchkit/rng.hpp"

struct sk_matrix {
  sketchkit::CsrMatrix m;
};

struct sk_dense {
  sketchkit::DenseMatrix m;
};

namespace {

using namespace sketchkit;
using json = nlohmann::json;

thread_local std::string g_last_error;

template <class F>
int guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return SK_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return static_cast<int>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SK_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SK_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (!p) fail(ErrorCode::BadParams, std::string("null argument: ") + what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** report, const json& j) {
  if (report) *report = dup_string(j.dump());
}

class Timer {
 public:
  Timer() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

json stage(const char* name, double seconds, size_t nnz) {
  return json{{"stage", name}, {"seconds", seconds}, {"nnz", nnz}};
}

json distortion_json(const Distortion& d) { return json{{"sigma_min", d.sigma_min}, {"sigma_max", d.sigma_max}}; }

}  // namespace

extern "C" {

const char* sk_version(void) { return "0.1.0"; }

const char* sk_error_name(int code) {
  if (code == SK_ERR_USAGE) return "UsageError";
  return error_name(static_cast<ErrorCode>(code));
}

const char* sk_last_error(void) { return g_last_error.c_str(); }

void sk_string_free(char* s) { std::free(s); }

void sk_free(void* p) { std::free(p); }

int sk_set_constant(const char* name, double value) {
  return guarded([&] {
    need(name, "name");
    set_constant(name, value);
  });
}

int sk_get_constant(const char* name, double* value) {
  return guarded([&] {
    need(name, "name");
    need(value, "value");
    *value = get_constant(name);
  });
}

void sk_reset_constants(void) { reset_constants(); }

int sk_constants_json(char** out) {
  return guarded([&] {
    need(out, "out");
    json j = json::object();
    for (const auto& [name, value] : list_constants()) j[name] = value;
    *out = dup_string(j.dump());
  });
}

int sk_matrix_read_mm(const char* path, sk_matrix** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new sk_matrix{read_matrix_market(std::string(path))};
  });
}

int sk_matrix_write_mm(const sk_matrix* a, const char* path) {
  return guarded([&] {
    need(a, "a");
    need(path, "path");
    write_matrix_market(std::string(path), a->m);
  });
}

int sk_matrix_from_triplets(size_t rows, size_t cols, size_t nnz, const size_t* row_idx, const size_t* col_idx,
                            const double* values, sk_matrix** out) {
  return guarded([&] {
    need(out, "out");
    if (nnz > 0) {
      need(row_idx, "row_idx");
      need(col_idx, "col_idx");
      need(values, "values");
    }
    std::vector<Triplet> t(nnz);
    for (size_t i = 0; i < nnz; ++i) {
      require(row_idx[i] < rows && col_idx[i] < cols, ErrorCode::DimMismatch, "triplet index out of range");
      t[i] = {row_idx[i], col_idx[i], values[i]};
    }
    *out = new sk_matrix{CsrMatrix::from_triplets(rows, cols, std::move(t))};
  });
}

int sk_matrix_random(size_t rows, size_t cols, size_t nnz, uint64_t seed, sk_matrix** out) {
  return guarded([&] {
    need(out, "out");
    require(rows > 0 && cols > 0, ErrorCode::BadParams, "random matrix needs positive dims");
    // Distinct columns per row (Floyd's sampling); at least one entry per row.
    size_t per_row = std::min(cols, std::max<size_t>(1, nnz / rows));
    std::vector<Triplet> t;
    t.reserve(rows * per_row);
    std::vector<size_t> picked;
    for (size_t i = 0; i < rows; ++i) {
      Stream st(seed, i);
      picked.clear();
      for (size_t j = cols - per_row; j < cols; ++j) {
        size_t c = st.below(j + 1);
        if (std::find(picked.begin(), picked.end(), c) != picked.end()) c = j;
        picked.push_back(c);
      }
      for (size_t c : picked) t.push_back({i, c, st.normal()});
    }
    *out = new sk_matrix{CsrMatrix::from_triplets(rows, cols, std::move(t))};
  });
}

int sk_matrix_shape(const sk_matrix* a, size_t* rows, size_t* cols, size_t* nnz) {
  return guarded([&] {
    need(a, "a");
    if (rows) *rows = a->m.n_rows();
    if (cols) *cols = a->m.n_cols();
    if (nnz) *nnz = a->m.nnz();
  });
}

void sk_matrix_free(sk_matrix* a) { delete a; }

int sk_dense_read_mm(const char* path, sk_dense** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    std::ifstream in(path);
    require(static_cast<bool>(in), ErrorCode::IoError, std::string("cannot open ") + path);
    std::string header;
    std::getline(in, header);
    if (header.find("coordinate") != std::string::npos)
      *out = new sk_dense{read_matrix_market(std::string(path)).to_dense()};
    else
      *out = new sk_dense{read_matrix_market_dense(std::string(path))};
  });
}

int sk_dense_write_mm(const sk_dense* a, const char* path) {
  return guarded([&] {
    need(a, "a");
    need(path, "path");
    write_matrix_market_array(std::string(path), a->m);
  });
}

int sk_dense_create(size_t rows, size_t cols, const double* data, sk_dense** out) {
  return guarded([&] {
    need(out, "out");
    auto* d = new sk_dense{DenseMatrix::Zero(rows, cols)};
    if (data && rows * cols > 0) std::memcpy(d->m.data(), data, rows * cols * sizeof(double));
    *out = d;
  });
}

int sk_dense_shape(const sk_dense* a, size_t* rows, size_t* cols) {
  return guarded([&] {
    need(a, "a");
    if (rows) *rows = a->m.rows();
    if (cols) *cols = a->m.cols();
  });
}

const double* sk_dense_data(const sk_dense* a) { return a ? a->m.data() : nullptr; }

void sk_dense_free(sk_dense* a) { delete a; }

int sk_fast_embed(const sk_matrix* a, size_t k, double gamma, uint64_t seed, int oracle, sk_dense** sa,
                  char** report) {
  return guarded([&] {
    need(a, "a");
    const CsrMatrix& m = a->m;
    if (k == 0) k = m.n_cols();
    json j;
    json stages = json::array();
    Timer t_build;
    FastEmbedSpec spec = build_fast_embed(m.n_rows(), k, gamma, seed);
    stages.push_back(stage("build", t_build.seconds(), 0));
    Timer t_apply;
    DenseMatrix out = fast_embed_apply(spec, m);
    stages.push_back(stage("apply", t_apply.seconds(), m.nnz()));
    j["rows"] = m.n_rows();
    j["cols"] = m.n_cols();
    j["nnz"] = m.nnz();
    j["k"] = k;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["embed_rows"] = spec.rows();
    j["s1_rows"] = spec.s1_identity ? spec.n : spec.s1.m;
    j["s2_rows"] = spec.s2_identity ? spec.s1.m : spec.s2.m;
    j["flatten_blowup"] = spec.fmap.blowup();
    j["g_p"] = spec.g.p;
    j["kappa"] = spec.calibration.kappa;
    j["d_cal"] = spec.calibration.d_cal;
    if (oracle) {
      Timer t_or;
      DenseMatrix u = orthonormal_basis(m.to_dense());
      Distortion d = embedding_distortion(DenseMatrix(fast_embed_apply(spec, u)));
      json o = distortion_json(d);
      o["subspace_dim"] = u.cols();
      o["within_bracket"] = d.sigma_min >= 1.0 - 1e-12 && d.sigma_max <= spec.calibration.d_cal;
      j["oracle"] = o;
      stages.push_back(stage("oracle", t_or.seconds(), m.nnz()));
    }
    j["stages"] = stages;
    if (sa) *sa = new sk_dense{std::move(out)};
    emit(report, j);
  });
}

int sk_leverage_embedding(const sk_matrix* a, double eps, double gamma, uint64_t seed, int oracle,
                          sk_dense** s_lev_a, char** report) {
  return guarded([&] {
    need(a, "a");
    const CsrMatrix& m = a->m;
    json j;
    json stages = json::array();
    Timer t;
    LeverageEmbedding le = leverage_embedding(m, eps, gamma, seed);
    stages.push_back(stage("leverage", t.seconds(), m.nnz()));
    j["rows"] = m.n_rows();
    j["cols"] = m.n_cols();
    j["nnz"] = m.nnz();
    j["eps"] = eps;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["beta"] = le.precond.beta;
    j["rank"] = le.precond.rank;
    j["s_target"] = le.sample.s_target;
    j["first_stage_count"] = le.sample.first_stage_count;
    j["validity_clamps"] = le.sample.validity_clamps;
    j["indices"] = le.sample.indices;
    j["probs"] = le.sample.probs;
    if (oracle) {
      Timer t_or;
      DenseMatrix q = orthonormal_basis(m.to_dense());
      std::vector<double> sc = le.sample.rescale();
      DenseMatrix sq(le.sample.indices.size(), q.cols());
      for (size_t p = 0; p < le.sample.indices.size(); ++p) sq.row(p) = sc[p] * q.row(le.sample.indices[p]);
      Distortion d = embedding_distortion(sq);
      json o = distortion_json(d);
      o["within_bracket"] = d.sigma_min * d.sigma_min >= 1 - eps && d.sigma_max * d.sigma_max <= 1 + eps;
      j["oracle"] = o;
      stages.push_back(stage("oracle", t_or.seconds(), m.nnz()));
    }
    j["stages"] = stages;
    if (s_lev_a) *s_lev_a = new sk_dense{std::move(le.s_lev_a)};
    emit(report, j);
  });
}

int sk_solve_regression(const sk_matrix* a, const sk_dense* b, double eps, double gamma, uint64_t seed, int oracle,
                        sk_dense** x, char** report) {
  return guarded([&] {
    need(a, "a");
    need(b, "b");
    const CsrMatrix& m = a->m;
    require(static_cast<size_t>(b->m.rows()) == m.n_rows() && b->m.cols() == 1, ErrorCode::DimMismatch,
            "b must be an n x 1 vector");
    RegressionProblem prob{m, Vector(b->m.col(0)), eps, gamma, seed};
    Timer t;
    RegressionResult res = solve_regression(prob);
    json j;
    json stages = json::array();
    stages.push_back(stage("solve", t.seconds(), m.nnz()));
    double bn = prob.b.norm();
    double resid = (m.multiply(res.x) - prob.b).norm();
    j["rows"] = m.n_rows();
    j["cols"] = m.n_cols();
    j["nnz"] = m.nnz();
    j["eps"] = eps;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["residual"] = resid;
    j["b_norm"] = bn;
    j["iterations"] = res.report.iterations;
    j["max_iters"] = res.report.max_iters;
    j["step"] = res.report.step;
    j["cond_sar"] = res.report.cond_sar;
    j["d_cal"] = res.report.d_cal;
    j["sample_rows"] = res.report.sample_rows;
    j["warm_start_residual"] = res.report.warm_start_residual;
    j["residual_history"] = res.report.residual_history;
    if (oracle) {
      Timer t_or;
      Vector xo = regression_oracle(m, prob.b);
      double opt = (m.multiply(xo) - prob.b).norm();
      // Consistent systems have OPT ~ 0; judge those by the absolute residual.
      bool consistent = opt <= 1e-12 * bn;
      double ratio = consistent ? 1.0 : resid / opt;
      bool ok = consistent ? resid <= 1e-6 * bn : ratio <= 1 + 2 * eps;
      j["oracle"] = json{{"opt", opt}, {"ratio", ratio}, {"consistent", consistent}, {"within_bound", ok}};
      stages.push_back(stage("oracle", t_or.seconds(), m.nnz()));
    }
    j["stages"] = stages;
    if (x) *x = new sk_dense{DenseMatrix(res.x)};
    emit(report, j);
  });
}

int sk_compute_rank(const sk_matrix* a, uint64_t seed, int oracle, size_t* rank, char** report) {
  return guarded([&] {
    need(a, "a");
    const CsrMatrix& m = a->m;
    Timer t;
    RankTrace tr;
    size_t r = compute_rank(m, seed, &tr);
    json j;
    json stages = json::array();
    stages.push_back(stage("rank", t.seconds(), m.nnz()));
    j["rows"] = m.n_rows();
    j["cols"] = m.n_cols();
    j["nnz"] = m.nnz();
    j["seed"] = seed;
    j["rank"] = r;
    j["fast_path"] = tr.fast_path;
    j["z"] = tr.z;
    j["runs"] = tr.runs;
    j["disagreements"] = tr.disagreements;
    if (oracle) {
      Timer t_or;
      size_t ro = numerical_rank(m);
      j["oracle"] = json{{"rank", ro}, {"match", ro == r}};
      stages.push_back(stage("oracle", t_or.seconds(), m.nnz()));
    }
    j["stages"] = stages;
    if (rank) *rank = r;
    emit(report, j);
  });
}

int sk_independent_rows(const sk_matrix* a, uint64_t seed, size_t retries, int oracle, size_t** rows,
                        size_t* count, char** report) {
  return guarded([&] {
    need(a, "a");
    const CsrMatrix& m = a->m;
    Timer t;
    IndependentRowSet set = independent_rows(m, seed, retries);
    json j;
    json stages = json::array();
    stages.push_back(stage("independent_rows", t.seconds(), m.nnz()));
    j["rows"] = m.n_rows();
    j["cols"] = m.n_cols();
    j["nnz"] = m.nnz();
    j["seed"] = seed;
    j["retries"] = retries;
    j["rank"] = set.rank;
    j["attempts"] = set.attempts;
    j["indices"] = set.rows;
    json reds = json::array();
    for (const auto& r : set.reductions)
      reds.push_back(json{{"n_in", r.n_in}, {"n_out", r.kept_rows.size()}, {"nnz_in", r.nnz_in}, {"nnz_out", r.sub.nnz()}});
    j["reductions"] = reds;
    if (oracle) {
      Timer t_or;
      size_t sel = numerical_rank(m.select_rows(set.rows));
      j["oracle"] = json{{"selected_rank", sel}, {"verified", sel == set.rows.size() && sel == set.rank}};
      stages.push_back(stage("oracle", t_or.seconds(), m.nnz()));
    }
    j["stages"] = stages;
    if (rows) {
      *rows = static_cast<size_t*>(std::malloc(std::max<size_t>(1, set.rows.size()) * sizeof(size_t)));
      if (!*rows) throw std::bad_alloc();
      std::copy(set.rows.begin(), set.rows.end(), *rows);
    }
    if (count) *count = set.rows.size();
    emit(report, j);
  });
}

int sk_low_rank(const sk_matrix* a, size_t k, double eps, double gamma, uint64_t seed, int oracle, sk_dense** v,
                sk_dense** x, char** report) {
  return guarded([&] {
    need(a, "a");
    const CsrMatrix& m = a->m;
    Timer t;
    LraResult res = low_rank(m, k, eps, gamma, seed, oracle != 0);
    json j;
    json stages = json::array();
    stages.push_back(stage("low_rank", t.seconds(), m.nnz()));
    const LraReport& rep = res.report;
    j["rows"] = m.n_rows();
    j["cols"] = m.n_cols();
    j["nnz"] = m.nnz();
    j["k"] = k;
    j["eps"] = eps;
    j["gamma"] = gamma;
    j["seed"] = seed;
    j["left"] = json{{"t_cols", rep.left.t_cols}, {"s_rows", rep.left.s_rows}, {"omega", rep.left.omega},
                     {"column_sample", rep.left.column_sample}, {"m_cols", rep.left.m_cols}};
    j["right"] = json{{"lev_rows", rep.right.lev_rows}, {"bss_rows", rep.right.bss_rows},
                      {"row_sample", rep.right.row_sample}, {"r_rows", rep.right.r_rows}};
    if (oracle) {
      j["oracle"] = json{{"opt", rep.opt},
                         {"intermediate_ratio", rep.intermediate_ratio},
                         {"left_ratio", rep.left_ratio},
                         {"final_ratio", rep.final_ratio},
                         {"within_bound", rep.final_ratio <= 1 + 2 * eps}};
    }
    j["stages"] = stages;
    if (v) *v = new sk_dense{std::move(res.factors.v)};
    if (x) *x = new sk_dense{std::move(res.factors.x)};
    emit(report, j);
  });
}

}  // extern "C"
