#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sketchkit/sketchkit.h"

using json = nlohmann::json;

namespace {

struct CliError {
  int code;
  std::string stage;
  std::string message;
};

void check(int rc, const std::string& stage) {
  if (rc != SK_OK) throw CliError{rc, stage, sk_last_error()};
}

struct MatrixDeleter {
  void operator()(sk_matrix* m) const { sk_matrix_free(m); }
};
struct DenseDeleter {
  void operator()(sk_dense* m) const { sk_dense_free(m); }
};
using Matrix = std::unique_ptr<sk_matrix, MatrixDeleter>;
using Dense = std::unique_ptr<sk_dense, DenseDeleter>;

Matrix load_matrix(const std::string& path) {
  sk_matrix* m = nullptr;
  check(sk_matrix_read_mm(path.c_str(), &m), "read " + path);
  return Matrix(m);
}

Dense load_dense(const std::string& path) {
  sk_dense* m = nullptr;
  check(sk_dense_read_mm(path.c_str(), &m), "read " + path);
  return Dense(m);
}

void save_dense(const sk_dense* d, const std::string& path) {
  if (!path.empty()) check(sk_dense_write_mm(d, path.c_str()), "write " + path);
}

json take_report(char* s) {
  json j = json::parse(s);
  sk_string_free(s);
  return j;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Common {
  std::optional<uint64_t> seed;
  std::vector<std::string> sets;
  int threads = 1;
  std::string oracle = "auto";
  std::string report_path;
  size_t trials = 1;
};

struct Args {
  std::string input, rhs, output, v_out, x_out, csv;
  size_t k = 0;
  double eps = 0.25;
  double gamma = 0.5;
  size_t retries = 3;
  size_t rows = 50000, cols = 20, runs = 5;
  std::vector<double> nnz{1e5, 2e5, 4e5};
};

uint64_t resolve_seed(const Common& c) {
  if (c.seed) return *c.seed;
  if (const char* env = std::getenv("SKETCHKIT_SEED")) {
    char* end = nullptr;
    unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0' && end != env) return v;
    throw CliError{SK_ERR_USAGE, "config", std::string("SKETCHKIT_SEED is not an integer: ") + env};
  }
  return 0;
}

void apply_sets(const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    auto eq = s.find('=');
    if (eq == std::string::npos) throw CliError{SK_ERR_USAGE, "config", "--set expects name=value: " + s};
    double v = 0;
    try {
      v = std::stod(s.substr(eq + 1));
    } catch (const std::exception&) {
      throw CliError{SK_ERR_USAGE, "config", "--set value is not a number: " + s};
    }
    check(sk_set_constant(s.substr(0, eq).c_str(), v), "config");
  }
}

bool oracle_enabled(const Common& c, const sk_matrix* a) {
  if (c.oracle == "on") return true;
  if (c.oracle == "off") return false;
  size_t rows = 0, cols = 0;
  sk_matrix_shape(a, &rows, &cols, nullptr);
  double threshold = 0;
  sk_get_constant("oracle_auto_threshold", &threshold);
  return static_cast<double>(std::min(rows, cols)) <= threshold;
}

// Runs fn(seed_t) for each trial; the first trial writes artifacts.
template <class F>
void run_trials(json& rep, const Common& c, uint64_t seed, bool oracle, F&& fn) {
  json results = json::array();
  size_t ok = 0;
  for (size_t t = 0; t < c.trials; ++t) {
    json r = fn(seed + t, t == 0);
    if (oracle && r.contains("oracle")) {
      const json& o = r["oracle"];
      for (const char* key : {"within_bracket", "within_bound", "match", "verified"})
        if (o.contains(key) && o[key].get<bool>()) ++ok;
    }
    results.push_back(std::move(r));
  }
  rep["results"] = results;
  if (oracle)
    rep["success_fraction"] = static_cast<double>(ok) / static_cast<double>(c.trials);
  else
    rep["success_fraction"] = nullptr;
}

json run_bench(const Args& a, json& rep) {
  std::vector<json> rows;
  std::ofstream csv_file;
  std::ostream* csv = &std::cout;
  if (!a.csv.empty()) {
    csv_file.open(a.csv);
    if (!csv_file) throw CliError{SK_ERR_IO, "bench", "cannot open " + a.csv};
    csv = &csv_file;
  }
  *csv << "nnz,n,d,k,stage,seconds,time_ratio\n";
  size_t k = a.k ? a.k : a.cols;
  json warnings = json::array();
  for (const char* stage : {"embed", "leverage"}) {
    double prev_time = 0, prev_nnz = 0;
    for (double target : a.nnz) {
      sk_matrix* raw = nullptr;
      check(sk_matrix_random(a.rows, a.cols, static_cast<size_t>(target), 1234, &raw), "bench");
      Matrix m(raw);
      size_t nnz = 0;
      sk_matrix_shape(m.get(), nullptr, nullptr, &nnz);
      auto once = [&] {
        auto t0 = std::chrono::steady_clock::now();
        if (std::string(stage) == "embed")
          check(sk_fast_embed(m.get(), k, a.gamma, 7, 0, nullptr, nullptr), "bench embed");
        else
          check(sk_leverage_embedding(m.get(), a.eps, a.gamma, 7, 0, nullptr, nullptr), "bench leverage");
        return elapsed(t0);
      };
      once();  // warm-up: calibration is cached per shape
      std::vector<double> times;
      for (size_t r = 0; r < a.runs; ++r) times.push_back(once());
      double med = median(times);
      json row{{"nnz", nnz}, {"n", a.rows}, {"d", a.cols}, {"k", k}, {"stage", stage}, {"seconds", med}};
      *csv << nnz << ',' << a.rows << ',' << a.cols << ',' << k << ',' << stage << ',' << med << ',';
      if (prev_time > 0) {
        double ratio = med / prev_time;
        row["time_ratio"] = ratio;
        *csv << ratio;
        double nnz_ratio = static_cast<double>(nnz) / prev_nnz;
        if (nnz_ratio > 1.5 && nnz_ratio < 2.5 && ratio > 2.5) {
          std::string w = std::string("warning: ") + stage + " time grew " + std::to_string(ratio) +
                          "x when nnz doubled (soft limit 2.5x)";
          std::cerr << w << '\n';
          warnings.push_back(w);
        }
      } else {
        row["time_ratio"] = nullptr;
      }
      *csv << '\n';
      prev_time = med;
      prev_nnz = static_cast<double>(nnz);
      rows.push_back(row);
    }
  }
  rep["warnings"] = warnings;
  return json(rows);
}

void write_report(const json& rep, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << rep.dump(2) << '\n';
    return;
  }
  std::ofstream out(path);
  if (!out) {
    std::cerr << "cannot write report to " << path << '\n';
    return;
  }
  out << rep.dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"sketchkit: randomized sketching toolkit"};
  app.require_subcommand(1);
  Common c;
  Args a;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.seed, "RNG seed (fallback: SKETCHKIT_SEED, then 0)");
    sub->add_option("--set", c.sets, "Override a tunable constant, name=value");
    sub->add_option("--threads", c.threads, "Worker threads (recorded; execution is sequential)")
        ->check(CLI::PositiveNumber);
    sub->add_option("--oracle", c.oracle, "Dense oracle comparison")->check(CLI::IsMember({"on", "off", "auto"}));
    sub->add_option("--report", c.report_path, "JSON report path (default stdout)");
  };
  auto add_trials = [&](CLI::App* sub) {
    sub->add_option("--trials", c.trials, "Independent runs with seeds seed, seed+1, ...")
        ->check(CLI::PositiveNumber);
  };

  auto* embed = app.add_subcommand("embed", "Fast subspace embedding S*A");
  embed->add_option("input", a.input, "Matrix Market file")->required();
  embed->add_option("--k", a.k, "Subspace dimension (default: number of columns)");
  embed->add_option("--gamma", a.gamma, "Trade-off exponent in (0,1)");
  embed->add_option("-o,--output", a.output, "Write S*A (array Matrix Market)");
  add_common(embed);
  add_trials(embed);

  auto* lev = app.add_subcommand("leverage", "Leverage-score sampling embedding");
  lev->add_option("input", a.input, "Matrix Market file")->required();
  lev->add_option("--eps", a.eps, "Accuracy in (0,1)");
  lev->add_option("--gamma", a.gamma, "Trade-off exponent in (0,1)");
  lev->add_option("-o,--output", a.output, "Write S_lev*A (array Matrix Market)");
  add_common(lev);
  add_trials(lev);

  auto* reg = app.add_subcommand("regress", "Least-squares regression min ||Ax - b||");
  reg->add_option("input", a.input, "Matrix Market file for A")->required();
  reg->add_option("rhs", a.rhs, "Matrix Market file for b (n x 1)")->required();
  reg->add_option("--eps", a.eps, "Accuracy in (0,1)");
  reg->add_option("--gamma", a.gamma, "Trade-off exponent in (0,1)");
  reg->add_option("-o,--output", a.output, "Write x (array Matrix Market)");
  add_common(reg);
  add_trials(reg);

  auto* rank = app.add_subcommand("rank", "Rank via rank-preserving sketches");
  rank->add_option("input", a.input, "Matrix Market file")->required();
  add_common(rank);
  add_trials(rank);

  auto* indep = app.add_subcommand("indep-rows", "Select rank(A) linearly independent rows");
  indep->add_option("input", a.input, "Matrix Market file")->required();
  indep->add_option("--retries", a.retries, "Fresh-seed retries after a failed verification");
  add_common(indep);
  add_trials(indep);

  auto* lra = app.add_subcommand("lra", "Rank-k Frobenius low-rank approximation A ~ V X");
  lra->add_option("input", a.input, "Matrix Market file")->required();
  lra->add_option("--k", a.k, "Target rank")->required();
  lra->add_option("--eps", a.eps, "Accuracy in (0,1)");
  lra->add_option("--gamma", a.gamma, "Trade-off exponent in (0,1)");
  lra->add_option("--v-out", a.v_out, "Write V (array Matrix Market)");
  lra->add_option("--x-out", a.x_out, "Write X (array Matrix Market)");
  add_common(lra);
  add_trials(lra);

  auto* bench = app.add_subcommand("bench", "Scaling benchmark of the embed and leverage pipelines");
  bench->add_option("--rows", a.rows, "Rows of the synthetic matrix");
  bench->add_option("--cols", a.cols, "Columns of the synthetic matrix");
  bench->add_option("--k", a.k, "Subspace dimension (default: cols)");
  bench->add_option("--nnz", a.nnz, "nnz values to sweep");
  bench->add_option("--runs", a.runs, "Timed runs per point (median reported)")->check(CLI::PositiveNumber);
  bench->add_option("--eps", a.eps, "Leverage accuracy");
  bench->add_option("--gamma", a.gamma, "Trade-off exponent");
  bench->add_option("--csv", a.csv, "CSV output path (default stdout)");
  add_common(bench);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : SK_ERR_USAGE;
  }

  CLI::App* sub = app.get_subcommands().front();
  std::string command = sub->get_name();
  json rep;
  rep["command"] = command;
  rep["argv"] = std::vector<std::string>(argv, argv + argc);
  rep["version"] = sk_version();
  rep["threads"] = c.threads;
  rep["trials"] = c.trials;
  auto t0 = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    uint64_t seed = resolve_seed(c);
    rep["seed"] = seed;
    apply_sets(c.sets);
    char* consts = nullptr;
    check(sk_constants_json(&consts), "config");
    rep["constants"] = take_report(consts);

    if (command == "bench") {
      rep["oracle"] = false;
      rep["results"] = run_bench(a, rep);
      rep["success_fraction"] = nullptr;
    } else {
      Matrix m = load_matrix(a.input);
      bool oracle = oracle_enabled(c, m.get());
      rep["oracle"] = oracle;
      if (command == "embed") {
        run_trials(rep, c, seed, oracle, [&](uint64_t s, bool first) {
          sk_dense* out = nullptr;
          char* r = nullptr;
          check(sk_fast_embed(m.get(), a.k, a.gamma, s, oracle, &out, &r), "embed");
          Dense d(out);
          if (first) save_dense(d.get(), a.output);
          return take_report(r);
        });
      } else if (command == "leverage") {
        run_trials(rep, c, seed, oracle, [&](uint64_t s, bool first) {
          sk_dense* out = nullptr;
          char* r = nullptr;
          check(sk_leverage_embedding(m.get(), a.eps, a.gamma, s, oracle, &out, &r), "leverage");
          Dense d(out);
          if (first) save_dense(d.get(), a.output);
          return take_report(r);
        });
      } else if (command == "regress") {
        Dense b = load_dense(a.rhs);
        run_trials(rep, c, seed, oracle, [&](uint64_t s, bool first) {
          sk_dense* out = nullptr;
          char* r = nullptr;
          check(sk_solve_regression(m.get(), b.get(), a.eps, a.gamma, s, oracle, &out, &r), "regress");
          Dense d(out);
          if (first) save_dense(d.get(), a.output);
          return take_report(r);
        });
      } else if (command == "rank") {
        run_trials(rep, c, seed, oracle, [&](uint64_t s, bool) {
          size_t k = 0;
          char* r = nullptr;
          check(sk_compute_rank(m.get(), s, oracle, &k, &r), "rank");
          return take_report(r);
        });
        rep["rank"] = rep["results"][0]["rank"];
      } else if (command == "indep-rows") {
        run_trials(rep, c, seed, oracle, [&](uint64_t s, bool) {
          size_t* rows = nullptr;
          size_t count = 0;
          char* r = nullptr;
          check(sk_independent_rows(m.get(), s, a.retries, oracle, &rows, &count, &r), "indep-rows");
          sk_free(rows);
          return take_report(r);
        });
        rep["indices"] = rep["results"][0]["indices"];
      } else if (command == "lra") {
        run_trials(rep, c, seed, oracle, [&](uint64_t s, bool first) {
          sk_dense* v = nullptr;
          sk_dense* x = nullptr;
          char* r = nullptr;
          check(sk_low_rank(m.get(), a.k, a.eps, a.gamma, s, oracle, &v, &x, &r), "lra");
          Dense dv(v), dx(x);
          if (first) {
            save_dense(dv.get(), a.v_out);
            save_dense(dx.get(), a.x_out);
          }
          return take_report(r);
        });
      }
      if (command == "regress") rep["residual"] = rep["results"][0]["residual"];
    }
  } catch (const CliError& e) {
    rc = e.code;
    rep["error"] = json{{"code", e.code}, {"name", sk_error_name(e.code)}, {"stage", e.stage}, {"message", e.message}};
    std::cerr << "error [" << sk_error_name(e.code) << "] in " << e.stage << ": " << e.message << '\n';
  } catch (const std::exception& e) {
    rc = SK_ERR_INTERNAL;
    rep["error"] = json{{"code", rc}, {"name", sk_error_name(rc)}, {"stage", command}, {"message", e.what()}};
    std::cerr << "error: " << e.what() << '\n';
  }
  rep["total_seconds"] = elapsed(t0);
  write_report(rep, c.report_path);
  return rc;
}
