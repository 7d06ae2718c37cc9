#include "sketchkit/flatten.hpp"

#include <cmath>
#include <json.hpp>
#include <limits>

#include "sketchkit/constants.hpp"
#include "sketchkit/error.hpp"
#include "sketchkit/rng.hpp"

namespace sketchkit {

namespace {

void fwht(double* x, size_t n) {
  for (size_t h = 1; h < n; h <<= 1)
    for (size_t i = 0; i < n; i += h << 1)
      for (size_t j = i; j < i + h; ++j) {
        double u = x[j], v = x[j + h];
        x[j] = u + v;
        x[j + h] = u - v;
      }
  double s = 1.0 / std::sqrt(static_cast<double>(n));
  for (size_t i = 0; i < n; ++i) x[i] *= s;
}

size_t floor_pow2(size_t n) {
  size_t p = 1;
  while (p * 2 <= n) p *= 2;
  return p;
}

size_t ceil_div(size_t a, size_t b) { return (a + b - 1) / b; }

}  // namespace

ExtractorGraph::ExtractorGraph(size_t a_left, size_t b_right, size_t d, uint64_t seed)
    : a_(a_left), b_(b_right), d_(d), per_edge_(ceil_div(a_left, b_right)), seed_(seed) {
  unsigned bits = 2;
  while ((size_t{1} << bits) < a_) bits += 2;
  half_bits_ = bits / 2;
}

size_t ExtractorGraph::permute(size_t i, size_t t) const {
  const uint64_t mask = (uint64_t{1} << half_bits_) - 1;
  uint64_t x = i;
  do {
    uint64_t l = x >> half_bits_, r = x & mask;
    for (uint64_t round = 0; round < 4; ++round) {
      uint64_t f = mix64(r ^ derive_seed(seed_, t, round)) & mask;
      uint64_t nl = r;
      r = l ^ f;
      l = nl;
    }
    x = (l << half_bits_) | r;
  } while (x >= a_);
  return x;
}

size_t ExtractorGraph::neighbor(size_t i, size_t t) const { return permute(i, t) % b_; }

size_t ExtractorGraph::slot(size_t i, size_t t) const { return t * per_edge_ + permute(i, t) / b_; }

ExtractorGraph build_extractor(size_t n_in, size_t L, double kappa, size_t d, uint64_t seed) {
  require(n_in >= 4, ErrorCode::BadParams, "extractor needs n_in >= 4");
  require(kappa > 0 && kappa < 0.5, ErrorCode::BadParams, "extractor needs 0 < kappa < 1/2");
  require(d >= 1 && L >= 1, ErrorCode::BadParams, "extractor needs d >= 1 and L >= 1");
  size_t a = L * n_in;
  auto b = static_cast<size_t>(std::llround(std::pow(static_cast<double>(n_in), 0.5 - kappa)));
  b = std::max<size_t>(b, 1);
  return ExtractorGraph(a, b, d, seed);
}

IndykLevel build_level(size_t n_in, size_t L, double kappa, size_t d, uint64_t seed) {
  IndykLevel lv;
  lv.n_in = n_in;
  lv.blocks = L;
  lv.seed = seed;
  lv.graph = build_extractor(n_in, L, kappa, d, derive_seed(seed, 1));
  size_t a = lv.graph.a_left(), b = lv.graph.b_right();
  lv.out_scale = 1.0 / std::sqrt(static_cast<double>(L * d * b));
  lv.signs.resize(3 * L * n_in);
  for (size_t l = 0; l < L; ++l) {
    Stream st(seed, 2, l);
    for (size_t q = 0; q < 3 * n_in; ++q) lv.signs[l * 3 * n_in + q] = st.sign();
  }
  size_t delta = lv.graph.delta();
  require(static_cast<double>(b) * static_cast<double>(delta) < 4e9, ErrorCode::BlowupExceeded,
          "flatten level output too large");
  lv.position.resize(d * a);
  for (size_t t = 0; t < d; ++t)
    for (size_t i = 0; i < a; ++i)
      lv.position[t * a + i] = static_cast<uint32_t>(lv.graph.neighbor(i, t) * delta + lv.graph.slot(i, t));
  return lv;
}

void apply_mixer(const IndykLevel& level, size_t l, double* x) {
  size_t n = level.n_in;
  const double* s = level.signs.data() + l * 3 * n;
  size_t p = floor_pow2(n);
  for (size_t i = 0; i < n; ++i) x[i] *= s[i];
  fwht(x, p);
  if (p == n) return;
  for (size_t i = 0; i < n; ++i) x[i] *= s[n + i];
  fwht(x + (n - p), p);
  for (size_t i = 0; i < n; ++i) x[i] *= s[2 * n + i];
  fwht(x, p);
}

Vector apply_level(const IndykLevel& level, const Vector& x) {
  require(static_cast<size_t>(x.size()) == level.n_in, ErrorCode::DimMismatch, "apply_level: length");
  size_t n = level.n_in, a = level.graph.a_left(), d = level.graph.degree();
  Vector dx(a);
  for (size_t l = 0; l < level.blocks; ++l) {
    dx.segment(l * n, n) = x;
    apply_mixer(level, l, dx.data() + l * n);
  }
  Vector out = Vector::Zero(level.n_out());
  for (size_t t = 0; t < d; ++t)
    for (size_t i = 0; i < a; ++i) out[level.position[t * a + i]] = level.out_scale * dx[i];
  return out;
}

size_t default_flatten_depth(size_t n_in) {
  require(n_in >= 4, ErrorCode::BadParams, "flatten needs n_in >= 4");
  double ll = std::log2(std::log2(static_cast<double>(n_in)));
  return std::max<size_t>(1, static_cast<size_t>(std::ceil(ll - 1e-12)));
}

FlattenMap build_flatten_map(size_t n_in, size_t depth, double zeta, double kappa, uint64_t seed) {
  const Constants& c = constants();
  bool auto_depth = depth == 0;
  FlattenMap m;
  m.n_in = n_in;
  m.depth = auto_depth ? default_flatten_depth(n_in) : depth;
  m.zeta = zeta > 0 ? zeta : 1.0 / static_cast<double>(m.depth);
  m.kappa = kappa;
  m.L = static_cast<size_t>(c.flat_L);
  m.d = static_cast<size_t>(c.flat_d);
  m.seed = seed;
  require(n_in >= 4, ErrorCode::BadParams, "flatten needs n_in >= 4");
  size_t cur = n_in;
  double cap = c.flat_blowup_cap * static_cast<double>(n_in);
  for (size_t lvl = 0; lvl < m.depth; ++lvl) {
    require(cur >= 4, ErrorCode::BadParams, "flatten depth too large for n_in");
    m.levels.push_back(build_level(cur, m.L, kappa, m.d, derive_seed(seed, 0x666c6174ULL, lvl)));
    const IndykLevel& lv = m.levels.back();
    m.partitions *= lv.graph.b_right();
    cur = lv.graph.delta();
    require(static_cast<double>(m.partitions) * static_cast<double>(cur) <= cap, ErrorCode::BlowupExceeded,
            "flatten output exceeds configured blow-up cap");
  }
  m.m_out = m.partitions * cur;
  if (auto_depth)
    require(2 * m.partitions >= n_in, ErrorCode::BadParams, "flatten partition count below n/2");
  m.global_scale = std::sqrt(static_cast<double>(m.partitions));
  return m;
}

FlattenMap build_flatten_map(size_t n_in, uint64_t seed) {
  return build_flatten_map(n_in, 0, 0.0, constants().flat_kappa, seed);
}

Vector apply_flatten(const FlattenMap& map, const Vector& x) {
  require(static_cast<size_t>(x.size()) == map.n_in, ErrorCode::DimMismatch, "apply_flatten: length");
  Vector cur = x;
  size_t count = 1;
  for (const IndykLevel& lv : map.levels) {
    size_t in = lv.n_in, out = lv.n_out();
    Vector next(count * out);
    for (size_t blk = 0; blk < count; ++blk)
      next.segment(blk * out, out) = apply_level(lv, cur.segment(blk * in, in));
    cur.swap(next);
    count *= lv.graph.b_right();
  }
  cur *= map.global_scale;
  return cur;
}

DenseMatrix apply_flatten(const FlattenMap& map, const DenseMatrix& x) {
  require(static_cast<size_t>(x.rows()) == map.n_in, ErrorCode::DimMismatch, "apply_flatten: rows");
  DenseMatrix out(map.m_out, x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(j) = apply_flatten(map, Vector(x.col(j)));
  return out;
}

double default_eta(const FlattenMap& map) { return 0.5 / std::sqrt(static_cast<double>(map.m_out)); }

FlattenStats flatten_stats_of_output(const Vector& out, double eta) {
  FlattenStats s;
  s.eta = eta;
  s.l1_norm = out.lpNorm<1>();
  s.l2_norm = out.norm();
  for (Eigen::Index i = 0; i < out.size(); ++i)
    if (std::abs(out[i]) >= eta) ++s.large_count;
  return s;
}

FlattenStats flatten_stats(const FlattenMap& map, const Vector& x, double eta) {
  return flatten_stats_of_output(apply_flatten(map, x), eta);
}

std::string flatten_to_json(const FlattenMap& map) {
  nlohmann::json j = {{"n_in", map.n_in},   {"depth", map.depth},       {"zeta", map.zeta},
                      {"kappa", map.kappa}, {"L", map.L},               {"d", map.d},
                      {"seed", map.seed},   {"partitions", map.partitions}, {"m_out", map.m_out}};
  return j.dump();
}

FlattenMap flatten_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    size_t L = j.at("L"), d = j.at("d");
    require(L == static_cast<size_t>(constants().flat_L) && d == static_cast<size_t>(constants().flat_d),
            ErrorCode::BadParams, "flatten descriptor built with different L/d constants");
    return build_flatten_map(j.at("n_in"), j.at("depth"), j.at("zeta"), j.at("kappa"), j.at("seed"));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::ParseError, std::string("flatten descriptor: ") + e.what());
  }
}

}  // namespace sketchkit
