#include "bpv/persistence.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <unordered_map>

namespace bpv {

namespace {

struct UnionFind {
  std::vector<std::int32_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::int32_t find(std::int32_t i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void link(std::int32_t root_child, std::int32_t root_parent) {
    parent[static_cast<std::size_t>(root_child)] = root_parent;
  }
};

}  // namespace

bool PersistenceDiagram::has_infinite() const {
  for (const auto& p : points)
    if (std::isinf(p.death)) return true;
  return false;
}

PersistenceDiagram sublevel_pd0(const TimeSeries& x) {
  const std::size_t n = x.size();
  PersistenceDiagram pd;
  pd.dim = 0;
  pd.kind = FiltrationKind::Sublevel;

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (x.samples[a] != x.samples[b]) return x.samples[a] < x.samples[b];
    return a < b;
  });

  UnionFind uf(n);
  // Birth value and index of the oldest minimum in each component, indexed
  // by component root.
  std::vector<double> birth_val(n);
  std::vector<std::size_t> birth_idx(n);
  std::vector<char> active(n, 0);

  double global_min = x.samples[order[0]];
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t i = order[step];
    const double v = x.samples[i];
    const bool left = i > 0 && active[i - 1];
    const bool right = i + 1 < n && active[i + 1];
    active[i] = 1;
    birth_val[i] = v;
    birth_idx[i] = i;

    if (left && right) {
      const std::int32_t a = uf.find(static_cast<std::int32_t>(i - 1));
      const std::int32_t b = uf.find(static_cast<std::int32_t>(i + 1));
      // Elder rule: the component with the larger birth dies; on equal
      // births the later-index one dies.
      std::int32_t older = a, younger = b;
      const auto key = [&](std::int32_t r) {
        return std::pair<double, std::size_t>(
            birth_val[static_cast<std::size_t>(r)],
            birth_idx[static_cast<std::size_t>(r)]);
      };
      if (key(a) > key(b)) std::swap(older, younger);
      const double yb = birth_val[static_cast<std::size_t>(younger)];
      if (v > yb) pd.points.push_back({yb, v, false});
      uf.link(younger, older);
      uf.link(static_cast<std::int32_t>(i), older);
    } else if (left || right) {
      const std::size_t nb = left ? i - 1 : i + 1;
      const std::int32_t r = uf.find(static_cast<std::int32_t>(nb));
      uf.link(static_cast<std::int32_t>(i), r);
    }
  }

  pd.points.push_back(
      {global_min, std::numeric_limits<double>::infinity(), false});
  double cap = x.samples[0];
  for (double v : x.samples) cap = std::max(cap, v);
  pd.cap_hint = cap;
  return pd;
}

PointCloud takens_embed(const TimeSeries& x, int d, int tau_samples) {
  if (d < 1) throw InvalidInput("takens_embed dimension must be >= 1");
  if (tau_samples < 1) throw InvalidInput("takens_embed delay must be >= 1");
  const std::size_t span =
      static_cast<std::size_t>(d - 1) * static_cast<std::size_t>(tau_samples);
  if (x.size() <= span)
    throw InvalidInput("takens_embed: signal shorter than embedding span");

  const std::size_t count = x.size() - span;
  PointCloud pc;
  pc.dim = d;
  pc.coords.resize(count * static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < count; ++i)
    for (int j = 0; j < d; ++j)
      pc.coords[i * static_cast<std::size_t>(d) + static_cast<std::size_t>(j)] =
          x.samples[i + static_cast<std::size_t>(j) *
                            static_cast<std::size_t>(tau_samples)];
  return pc;
}

double euclidean_distance(const PointCloud& pc, std::size_t i,
                          std::size_t j) {
  const double* a = pc.point(i);
  const double* b = pc.point(j);
  double s = 0.0;
  for (int k = 0; k < pc.dim; ++k) {
    const double d = a[k] - b[k];
    s += d * d;
  }
  return std::sqrt(s);
}

double enclosing_radius(const PointCloud& pc) {
  const std::size_t n = pc.size();
  double r = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      r = std::max(r, euclidean_distance(pc, i, j));
  return r;
}

PointCloud maxmin_subsample(const PointCloud& pc, std::size_t k,
                            std::size_t seed_index) {
  const std::size_t n = pc.size();
  if (n == 0) throw InvalidInput("maxmin_subsample: empty cloud");
  if (k == 0) throw InvalidInput("maxmin_subsample: k must be >= 1");
  if (seed_index >= n)
    throw InvalidInput("maxmin_subsample: seed index out of range");

  const std::size_t target = std::min(k, n);
  std::vector<std::size_t> chosen;
  chosen.reserve(target);
  std::vector<char> selected(n, 0);
  std::vector<double> mindist(n, std::numeric_limits<double>::infinity());

  std::size_t current = seed_index;
  chosen.push_back(current);
  selected[current] = 1;
  while (chosen.size() < target) {
    std::size_t best = n;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (selected[i]) continue;
      const double d = euclidean_distance(pc, i, current);
      if (d < mindist[i]) mindist[i] = d;
      if (mindist[i] > best_d) {
        best_d = mindist[i];
        best = i;
      }
    }
    if (best == n) break;
    chosen.push_back(best);
    selected[best] = 1;
    current = best;
  }

  PointCloud out;
  out.dim = pc.dim;
  out.coords.reserve(chosen.size() * static_cast<std::size_t>(pc.dim));
  for (std::size_t idx : chosen)
    out.coords.insert(out.coords.end(), pc.point(idx),
                      pc.point(idx) + pc.dim);
  return out;
}

namespace {

struct Edge {
  double w;
  std::int32_t i, j;  // i < j
};

// A triangle entry of a coboundary column, ordered by filtration position
// (weight, then lexicographic vertices a < b < c packed into one word).
struct Cofacet {
  double w;
  std::uint32_t abc;

  friend bool operator<(const Cofacet& x, const Cofacet& y) {
    if (x.w != y.w) return x.w < y.w;
    return x.abc < y.abc;
  }
};

// 10 bits per vertex: supports clouds up to 1024 points, far above n_cap.
std::uint32_t pack3(std::int32_t a, std::int32_t b, std::int32_t c) {
  if (a > b) std::swap(a, b);
  if (b > c) std::swap(b, c);
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint32_t>(a) << 20) |
         (static_cast<std::uint32_t>(b) << 10) | static_cast<std::uint32_t>(c);
}

}  // namespace

std::vector<PersistenceDiagram> rips_pd(const PointCloud& pc, int max_dim,
                                        std::size_t n_cap) {
  if (max_dim < 0 || max_dim > 1)
    throw InvalidInput("rips_pd supports dimensions 0 and 1 only");
  const std::size_t n = pc.size();
  if (n == 0) throw InvalidInput("rips_pd: empty cloud");
  if (n > n_cap)
    throw TooLarge("rips_pd: cloud exceeds the size cap; subsample first");

  std::vector<double> dist(n * n, 0.0);
  double radius = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = euclidean_distance(pc, i, j);
      dist[i * n + j] = d;
      dist[j * n + i] = d;
      radius = std::max(radius, d);
    }
  }

  std::vector<Edge> edges;
  edges.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      edges.push_back({dist[i * n + j], static_cast<std::int32_t>(i),
                       static_cast<std::int32_t>(j)});
  std::sort(edges.begin(), edges.end(), [](const Edge& a, const Edge& b) {
    if (a.w != b.w) return a.w < b.w;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  std::vector<PersistenceDiagram> out;
  PersistenceDiagram pd0;
  pd0.dim = 0;
  pd0.kind = FiltrationKind::Rips;
  pd0.cap_hint = radius;

  UnionFind uf(n);
  std::vector<char> edge_negative(edges.size(), 0);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const std::int32_t a = uf.find(edges[e].i);
    const std::int32_t b = uf.find(edges[e].j);
    if (a == b) continue;
    uf.link(a, b);
    edge_negative[e] = 1;
    if (edges[e].w > 0.0) pd0.points.push_back({0.0, edges[e].w, false});
  }
  pd0.points.push_back(
      {0.0, std::numeric_limits<double>::infinity(), false});
  out.push_back(std::move(pd0));
  if (max_dim < 1) return out;

  PersistenceDiagram pd1;
  pd1.dim = 1;
  pd1.kind = FiltrationKind::Rips;
  pd1.cap_hint = radius;

  if (n >= 3) {
    // Persistent cohomology: reduce edge coboundary columns in decreasing
    // edge order instead of triangle boundary columns in increasing order.
    // The anti-transposed matrix yields the same diagram, but with ~n^2/2
    // columns instead of ~n^3/6, and almost every column pairs on first
    // touch, so the triangle list is never materialized. Clearing shortcut:
    // edges negative in dimension 0 (tree edges) cannot carry a dim-1 pair
    // and are skipped outright.
    //
    // A column holds the triangles containing its edge, ascending by
    // filtration position; the pivot is the front (earliest triangle).
    std::unordered_map<std::uint32_t, std::int32_t> pivot_owner;
    pivot_owner.reserve(edges.size());
    std::vector<std::vector<Cofacet>> stored(edges.size());
    std::vector<double> pair_death(edges.size(),
                                   std::numeric_limits<double>::quiet_NaN());

    std::vector<Cofacet> col, merged;
    for (std::size_t e_rev = edges.size(); e_rev-- > 0;) {
      if (edge_negative[e_rev]) continue;
      const Edge& e = edges[e_rev];
      col.clear();
      for (std::size_t v = 0; v < n; ++v) {
        if (static_cast<std::int32_t>(v) == e.i ||
            static_cast<std::int32_t>(v) == e.j)
          continue;
        const double w =
            std::max({e.w, dist[static_cast<std::size_t>(e.i) * n + v],
                      dist[static_cast<std::size_t>(e.j) * n + v]});
        col.push_back({w, pack3(e.i, e.j, static_cast<std::int32_t>(v))});
      }
      std::sort(col.begin(), col.end());

      while (!col.empty()) {
        const Cofacet pivot = col.front();
        const auto owner = pivot_owner.find(pivot.abc);
        if (owner == pivot_owner.end()) {
          pivot_owner.emplace(pivot.abc, static_cast<std::int32_t>(e_rev));
          stored[e_rev] = col;
          pair_death[e_rev] = pivot.w;
          break;
        }
        // Symmetric difference with the column owning this pivot.
        const std::vector<Cofacet>& other =
            stored[static_cast<std::size_t>(owner->second)];
        merged.clear();
        std::size_t a = 0, b = 0;
        while (a < col.size() && b < other.size()) {
          if (col[a].abc == other[b].abc) {
            ++a;
            ++b;
          } else if (col[a] < other[b]) {
            merged.push_back(col[a++]);
          } else {
            merged.push_back(other[b++]);
          }
        }
        while (a < col.size()) merged.push_back(col[a++]);
        while (b < other.size()) merged.push_back(other[b++]);
        col.swap(merged);
      }
    }

    for (std::size_t e = 0; e < edges.size(); ++e) {
      if (edge_negative[e]) continue;
      const double birth = edges[e].w;
      const double death = pair_death[e];
      if (std::isnan(death)) {
        if (radius > birth) pd1.points.push_back({birth, radius, true});
      } else if (death > birth) {
        pd1.points.push_back({birth, death, false});
      }
    }
  }

  out.push_back(std::move(pd1));
  return out;
}

}  // namespace bpv
