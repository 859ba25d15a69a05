#include "bpv/vectorize.hpp"

#include <algorithm>
#include <cmath>

namespace bpv {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Moments {
  double mean = 0.0, stddev = 0.0, skew = 0.0, kurt = 0.0;
};

Moments population_moments(const std::vector<double>& v) {
  Moments m;
  const double n = static_cast<double>(v.size());
  for (double x : v) m.mean += x;
  m.mean /= n;
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : v) {
    const double d = x - m.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  m.stddev = std::sqrt(m2);
  if (m2 > 0.0) {
    m.skew = m3 / std::pow(m2, 1.5);
    m.kurt = m4 / (m2 * m2);
  }
  return m;
}

void require_finite(const PersistenceDiagram& pd, const char* who) {
  if (pd.has_infinite())
    throw InvalidInput(std::string(who) +
                       ": diagram has infinite deaths; finitize first");
}

}  // namespace

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * kPi);
}

double normal_cdf(double x) {
  return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

PersistenceDiagram finitize(const PersistenceDiagram& pd, double cap) {
  if (!std::isfinite(cap)) throw InvalidInput("finitize: cap must be finite");
  PersistenceDiagram out;
  out.dim = pd.dim;
  out.kind = pd.kind;
  out.cap_hint = pd.cap_hint;
  for (const auto& p : pd.points) {
    if (std::isinf(p.death)) {
      if (cap < p.birth)
        throw InvalidInput("finitize: cap below the birth of an infinite point");
      if (cap > p.birth) out.points.push_back({p.birth, cap, true});
    } else {
      if (cap < p.death)
        throw InvalidInput("finitize: cap below a finite death");
      if (p.death > p.birth) out.points.push_back(p);
    }
  }
  return out;
}

PsResult persistence_stats(const PersistenceDiagram& pd,
                           const PsOptions& opts) {
  require_finite(pd, "persistence_stats");
  PsResult r;
  if (pd.points.empty()) {
    r.degenerate = true;
    return r;
  }

  // Accumulate over points in (birth, death) order so the result does not
  // depend on how the diagram happens to be ordered.
  std::vector<PdPoint> pts = pd.points;
  std::sort(pts.begin(), pts.end(), [](const PdPoint& a, const PdPoint& b) {
    if (a.birth != b.birth) return a.birth < b.birth;
    return a.death < b.death;
  });

  const std::size_t n = pts.size();
  std::vector<double> mid(n), life(n);
  for (std::size_t i = 0; i < n; ++i) {
    mid[i] = 0.5 * (pts[i].death + pts[i].birth);
    life[i] = pts[i].death - pts[i].birth;
  }

  const Moments mm = population_moments(mid);
  const Moments ml = population_moments(life);

  double life_total = 0.0, mid_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    life_total += life[i];
    mid_total += mid[i];
  }

  // Midlife entropy. Midlives (unlike lifespans) can be non-positive for
  // sublevel diagrams, where the formula's log is undefined; such terms
  // contribute zero, extending the usual 0*log(0) = 0 convention.
  double epy_m = 0.0;
  if (mid_total != 0.0) {
    for (std::size_t i = 0; i < n; ++i) {
      const double w = mid[i] / mid_total;
      const double arg = opts.epy_m_literal ? life[i] / mid_total : w;
      if (w > 0.0 && arg > 0.0) epy_m -= w * std::log(arg);
    }
  }

  double epy_l = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = life[i] / life_total;
    if (w > 0.0) epy_l -= w * std::log(w);
  }

  const double s = opts.gpc_sigma;
  double gpc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = life[i] / (std::sqrt(2.0) * s);
    gpc += life[i] * normal_cdf(u) + std::sqrt(2.0) * s * normal_pdf(u);
  }

  r.values = {mm.mean, mm.stddev, mm.skew, mm.kurt, epy_m,
              ml.mean, ml.stddev, ml.skew, ml.kurt, epy_l,
              gpc};
  return r;
}

double entropy_curve(const PersistenceDiagram& pd, double x) {
  require_finite(pd, "entropy_curve");
  double life_total = 0.0;
  for (const auto& p : pd.points) life_total += p.death - p.birth;
  if (life_total <= 0.0) return 0.0;
  double v = 0.0;
  for (const auto& p : pd.points) {
    if (!(p.birth <= x && x < p.death)) continue;
    const double w = (p.death - p.birth) / life_total;
    v -= w * std::log(w);
  }
  return v;
}

void hermite_functions(double x, int nmax, double* out) {
  out[0] = std::pow(kPi, -0.25) * std::exp(-0.5 * x * x);
  if (nmax == 0) return;
  out[1] = std::sqrt(2.0) * x * out[0];
  for (int n = 1; n < nmax; ++n) {
    out[n + 1] = x * std::sqrt(2.0 / (n + 1.0)) * out[n] -
                 std::sqrt(n / (n + 1.0)) * out[n - 1];
  }
}

HepcResult hepc(const PersistenceDiagram& pd) {
  require_finite(pd, "hepc");
  HepcResult r;
  if (pd.points.empty()) {
    r.degenerate = true;
    return r;
  }

  double life_total = 0.0;
  for (const auto& p : pd.points) life_total += p.death - p.birth;

  const std::size_t n = pd.points.size();
  std::vector<double> psi(n);
  std::vector<std::array<double, kHepcDim>> hb(n), hd(n);
  double alpha0 = 0.0, alpha1 = 0.0;
  const double pi4 = std::pow(kPi, 0.25);
  for (std::size_t i = 0; i < n; ++i) {
    const double b = pd.points[i].birth;
    const double d = pd.points[i].death;
    const double w = (d - b) / life_total;
    psi[i] = w > 0.0 ? -w * std::log(w) : 0.0;
    hermite_functions(b, kHepcDim - 1, hb[i].data());
    hermite_functions(d, kHepcDim - 1, hd[i].data());
    alpha0 += std::sqrt(2.0) * pi4 * psi[i] * (normal_cdf(d) - normal_cdf(b));
    alpha1 += 2.0 * pi4 * psi[i] * (normal_pdf(b) - normal_pdf(d));
  }

  r.values[0] = alpha0;
  r.values[1] = alpha1;
  for (int k = 1; k + 1 < kHepcDim; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      s += psi[i] * (hb[i][static_cast<std::size_t>(k)] -
                     hd[i][static_cast<std::size_t>(k)]);
    r.values[static_cast<std::size_t>(k) + 1] =
        std::sqrt(2.0 / (k + 1.0)) * s +
        std::sqrt(k / (k + 1.0)) * r.values[static_cast<std::size_t>(k) - 1];
  }
  return r;
}

}  // namespace bpv
