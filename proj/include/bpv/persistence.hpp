#pragma once

#include <cstddef>
#include <limits>
#include <vector>

#include "bpv/types.hpp"

namespace bpv {

enum class FiltrationKind { Sublevel, Rips };

struct PdPoint {
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();
  // Set when the death was assigned by truncating the filtration rather than
  // observed as an actual pairing.
  bool truncated = false;
};

struct PersistenceDiagram {
  std::vector<PdPoint> points;
  int dim = 0;
  FiltrationKind kind = FiltrationKind::Sublevel;
  // Natural finite cap for this diagram: the global max of the signal for
  // sublevel filtrations, the enclosing radius for Rips.
  double cap_hint = std::numeric_limits<double>::quiet_NaN();

  bool has_infinite() const;
};

// Dimension-0 persistence of the sublevel-set filtration of a piecewise
// linear signal. Components are born at local minima and merge at local
// maxima following the elder rule (lower birth survives; on equal births the
// earlier index survives). Zero-persistence points are omitted. Exactly one
// point has infinite death: the global minimum.
PersistenceDiagram sublevel_pd0(const TimeSeries& x);

// Delay-embedded point cloud, row-major: point n is
// [x_n, x_{n+tau}, ..., x_{n+(d-1)tau}] for n = 0 .. N-(d-1)tau-1.
struct PointCloud {
  std::vector<double> coords;
  int dim = 0;

  std::size_t size() const {
    return dim == 0 ? 0 : coords.size() / static_cast<std::size_t>(dim);
  }
  const double* point(std::size_t i) const {
    return coords.data() + i * static_cast<std::size_t>(dim);
  }
};

PointCloud takens_embed(const TimeSeries& x, int d, int tau_samples);

// Greedy farthest-point (maxmin) subsampling. Starts from seed_index; each
// round picks the point with the largest distance to the selected set,
// breaking ties toward the lowest index. Returns min(k, n) points in
// selection order.
PointCloud maxmin_subsample(const PointCloud& pc, std::size_t k,
                            std::size_t seed_index = 0);

double euclidean_distance(const PointCloud& pc, std::size_t i, std::size_t j);

// Largest pairwise distance (0 for a single point).
double enclosing_radius(const PointCloud& pc);

// Vietoris-Rips persistence in dimensions 0..max_dim (max_dim is 0 or 1).
// Dimension 0: births at 0, deaths at the minimum-spanning-tree edge
// weights, plus one (0, inf) point. Dimension 1: boundary-matrix reduction
// over the edge/triangle filtration ordered by (value, dimension, vertex
// lexicographic); classes unpaired at the enclosing radius get that value as
// death and are flagged truncated. Zero-persistence points are omitted.
// Clouds larger than n_cap are rejected (subsample first).
std::vector<PersistenceDiagram> rips_pd(const PointCloud& pc, int max_dim,
                                        std::size_t n_cap = 256);

}  // namespace bpv
