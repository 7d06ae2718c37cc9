#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sketchkit/linalg.hpp"

namespace sketchkit {

// Seeded pseudorandom left-d-regular bipartite graph on [a_left] x [b_right].
// For each t < d a keyed bijection pi_t of [a_left] is fixed and
// neighbor(i, t) = pi_t(i) mod b_right, so right degrees are balanced.
class ExtractorGraph {
 public:
  ExtractorGraph() = default;
  ExtractorGraph(size_t a_left, size_t b_right, size_t d, uint64_t seed);

  size_t a_left() const { return a_; }
  size_t b_right() const { return b_; }
  size_t degree() const { return d_; }
  uint64_t seed() const { return seed_; }
  // Upper bound on right degree; also the padded partition size.
  size_t delta() const { return d_ * per_edge_; }

  size_t neighbor(size_t i, size_t t) const;
  // Coordinate inside the right node's partition used by edge (i, t).
  size_t slot(size_t i, size_t t) const;
  size_t permute(size_t i, size_t t) const;

 private:
  size_t a_ = 0, b_ = 0, d_ = 0, per_edge_ = 0;
  uint64_t seed_ = 0;
  unsigned half_bits_ = 1;
};

ExtractorGraph build_extractor(size_t n_in, size_t L, double kappa, size_t d, uint64_t seed);

struct IndykLevel {
  size_t n_in = 0;
  size_t blocks = 1;  // L
  ExtractorGraph graph;
  uint64_t seed = 0;
  double out_scale = 1.0;
  // Random signs of the L mixers, three stages each, flattened.
  std::vector<double> signs;
  // Output coordinate for every edge, index t * a_left + i.
  std::vector<uint32_t> position;

  size_t n_out() const { return graph.b_right() * graph.delta(); }
};

IndykLevel build_level(size_t n_in, size_t L, double kappa, size_t d, uint64_t seed);

// x -> concatenation over right nodes j of (Dx) restricted to Gamma(j),
// zero-padded to delta and scaled so that ||out||^2 = ||x||^2 / b.
Vector apply_level(const IndykLevel& level, const Vector& x);

// Exactly orthonormal mixer of block l: sign flips interleaved with
// normalized Walsh-Hadamard transforms.
void apply_mixer(const IndykLevel& level, size_t l, double* x);

struct FlattenMap {
  size_t n_in = 0;
  size_t depth = 0;
  double zeta = 1.0;
  double kappa = 0.1;
  size_t L = 1;
  size_t d = 2;
  uint64_t seed = 0;
  std::vector<IndykLevel> levels;
  size_t partitions = 1;  // B
  size_t m_out = 0;
  double global_scale = 1.0;

  double blowup() const { return static_cast<double>(m_out) / static_cast<double>(n_in); }
};

size_t default_flatten_depth(size_t n_in);

// depth == 0 selects the default depth and enforces B >= n_in/2.
FlattenMap build_flatten_map(size_t n_in, size_t depth, double zeta, double kappa, uint64_t seed);
FlattenMap build_flatten_map(size_t n_in, uint64_t seed);

Vector apply_flatten(const FlattenMap& map, const Vector& x);
DenseMatrix apply_flatten(const FlattenMap& map, const DenseMatrix& x);

struct FlattenStats {
  double l1_norm = 0;
  double l2_norm = 0;
  size_t large_count = 0;
  double eta = 0;
};

double default_eta(const FlattenMap& map);
FlattenStats flatten_stats(const FlattenMap& map, const Vector& x, double eta);
FlattenStats flatten_stats_of_output(const Vector& out, double eta);

std::string flatten_to_json(const FlattenMap& map);
FlattenMap flatten_from_json(const std::string& text);

}  // namespace sketchkit
