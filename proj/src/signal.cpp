#include "bpv/signal.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

namespace bpv {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Zpk {
  std::vector<std::complex<double>> z;
  std::vector<std::complex<double>> p;
  double k = 1.0;
};

Zpk butter_prototype(int order) {
  Zpk out;
  out.p.reserve(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) {
    const double theta = kPi * (2.0 * i + order + 1.0) / (2.0 * order);
    out.p.emplace_back(std::cos(theta), std::sin(theta));
  }
  out.k = 1.0;
  return out;
}

Zpk lp2lp(const Zpk& in, double wc) {
  Zpk out;
  const int degree =
      static_cast<int>(in.p.size()) - static_cast<int>(in.z.size());
  for (const auto& z : in.z) out.z.push_back(z * wc);
  for (const auto& p : in.p) out.p.push_back(p * wc);
  out.k = in.k * std::pow(wc, degree);
  return out;
}

Zpk lp2bp(const Zpk& in, double w0, double bw) {
  Zpk out;
  const int degree =
      static_cast<int>(in.p.size()) - static_cast<int>(in.z.size());
  auto transform = [&](const std::complex<double>& s) {
    const std::complex<double> half = s * (bw / 2.0);
    const std::complex<double> disc = std::sqrt(half * half - w0 * w0);
    return std::pair{half + disc, half - disc};
  };
  for (const auto& z : in.z) {
    auto [a, b] = transform(z);
    out.z.push_back(a);
    out.z.push_back(b);
  }
  for (const auto& p : in.p) {
    auto [a, b] = transform(p);
    out.p.push_back(a);
    out.p.push_back(b);
  }
  for (int i = 0; i < degree; ++i) out.z.emplace_back(0.0, 0.0);
  out.k = in.k * std::pow(bw, degree);
  return out;
}

Zpk bilinear(const Zpk& in, double fs) {
  Zpk out;
  const double fs2 = 2.0 * fs;
  const int degree =
      static_cast<int>(in.p.size()) - static_cast<int>(in.z.size());
  std::complex<double> num(1.0, 0.0), den(1.0, 0.0);
  for (const auto& z : in.z) {
    out.z.push_back((fs2 + z) / (fs2 - z));
    num *= (fs2 - z);
  }
  for (const auto& p : in.p) {
    out.p.push_back((fs2 + p) / (fs2 - p));
    den *= (fs2 - p);
  }
  for (int i = 0; i < degree; ++i) out.z.emplace_back(-1.0, 0.0);
  out.k = in.k * (num / den).real();
  return out;
}

std::vector<double> poly_from_roots(
    const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> coeffs{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(coeffs.size() + 1, 0.0);
    for (std::size_t i = 0; i < coeffs.size(); ++i) {
      next[i] += coeffs[i];
      next[i + 1] -= coeffs[i] * r;
    }
    coeffs = std::move(next);
  }
  std::vector<double> out(coeffs.size());
  for (std::size_t i = 0; i < coeffs.size(); ++i) out[i] = coeffs[i].real();
  return out;
}

struct IirCoeffs {
  std::vector<double> b;
  std::vector<double> a;
};

IirCoeffs zpk_to_coeffs(const Zpk& zpk) {
  IirCoeffs c;
  c.b = poly_from_roots(zpk.z);
  for (double& v : c.b) v *= zpk.k;
  c.a = poly_from_roots(zpk.p);
  return c;
}

double digital_gain_at(const IirCoeffs& c, double omega) {
  std::complex<double> zinv = std::exp(std::complex<double>(0.0, -omega));
  std::complex<double> num(0.0, 0.0), den(0.0, 0.0);
  std::complex<double> zk(1.0, 0.0);
  for (std::size_t i = 0; i < c.b.size() || i < c.a.size(); ++i) {
    if (i < c.b.size()) num += c.b[i] * zk;
    if (i < c.a.size()) den += c.a[i] * zk;
    zk *= zinv;
  }
  return std::abs(num / den);
}

IirCoeffs butter_lowpass_coeffs(double cutoff_hz, double fs, int order) {
  const double warped = 2.0 * fs * std::tan(kPi * cutoff_hz / fs);
  Zpk zpk = bilinear(lp2lp(butter_prototype(order), warped), fs);
  IirCoeffs c = zpk_to_coeffs(zpk);
  // Pin the DC gain to exactly one; polynomial expansion drifts a few ulps.
  double sb = 0.0, sa = 0.0;
  for (double v : c.b) sb += v;
  for (double v : c.a) sa += v;
  const double scale = sa / sb;
  for (double& v : c.b) v *= scale;
  return c;
}

IirCoeffs butter_bandpass_coeffs(double low_hz, double high_hz, double fs,
                                 int order) {
  const double w1 = 2.0 * fs * std::tan(kPi * low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(kPi * high_hz / fs);
  const double w0 = std::sqrt(w1 * w2);
  Zpk zpk = bilinear(lp2bp(butter_prototype(order), w0, w2 - w1), fs);
  IirCoeffs c = zpk_to_coeffs(zpk);
  // Pin unit gain at the (warped) centre frequency.
  const double omega0 = 2.0 * std::atan(w0 / (2.0 * fs));
  const double g = digital_gain_at(c, omega0);
  for (double& v : c.b) v /= g;
  return c;
}

// Steady-state filter state for a constant input of 1, direct form II
// transposed: solves (I - A^T) zi = B with the companion-form A.
std::vector<double> lfilter_zi(const IirCoeffs& c) {
  const std::size_t n = c.a.size() - 1;
  std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
  std::vector<double> rhs(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double aij = 0.0;
      if (j == 0) aij = -c.a[i + 1];
      if (j == i + 1) aij += 1.0;
      m[i][j] = (i == j ? 1.0 : 0.0) - aij;
    }
    rhs[i] = c.b[i + 1] - c.a[i + 1] * c.b[0];
  }
  // Gaussian elimination with partial pivoting; n <= 10.
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
    std::swap(m[col], m[piv]);
    std::swap(rhs[col], rhs[piv]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = m[r][col] / m[col][col];
      for (std::size_t j = col; j < n; ++j) m[r][j] -= f * m[col][j];
      rhs[r] -= f * rhs[col];
    }
  }
  std::vector<double> zi(n, 0.0);
  for (std::size_t i = n; i-- > 0;) {
    double s = rhs[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m[i][j] * zi[j];
    zi[i] = s / m[i][i];
  }
  return zi;
}

std::vector<double> lfilter(const IirCoeffs& c, const std::vector<double>& x,
                            const std::vector<double>& zi) {
  const std::size_t n = c.a.size() - 1;
  std::vector<double> z = zi;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    const double yi = c.b[0] * xi + z[0];
    for (std::size_t j = 0; j + 1 < n; ++j)
      z[j] = c.b[j + 1] * xi + z[j + 1] - c.a[j + 1] * yi;
    z[n - 1] = c.b[n] * xi - c.a[n] * yi;
    y[i] = yi;
  }
  return y;
}

std::vector<double> filtfilt(const IirCoeffs& c,
                             const std::vector<double>& x) {
  const std::size_t order = c.a.size() - 1;
  std::size_t pad = 3 * order;
  if (x.size() <= pad) pad = x.size() - 1;
  const std::size_t n = x.size();

  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t j = pad; j >= 1; --j) ext.push_back(2.0 * x[0] - x[j]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t j = 1; j <= pad; ++j)
    ext.push_back(2.0 * x[n - 1] - x[n - 1 - j]);

  const std::vector<double> zi = lfilter_zi(c);
  std::vector<double> state(zi.size());

  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * ext.front();
  std::vector<double> fwd = lfilter(c, ext, state);

  std::reverse(fwd.begin(), fwd.end());
  for (std::size_t i = 0; i < zi.size(); ++i) state[i] = zi[i] * fwd.front();
  std::vector<double> bwd = lfilter(c, fwd, state);
  std::reverse(bwd.begin(), bwd.end());

  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad),
          bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

TimeSeries with_samples(const TimeSeries& ref, std::vector<double> samples) {
  TimeSeries out;
  out.samples = std::move(samples);
  out.rate_hz = ref.rate_hz;
  out.start_time_s = ref.start_time_s;
  return out;
}

// FFTW plan creation is not thread-safe; execution of a given plan is only
// safe on its own buffers, so the whole transform is serialized. Transforms
// here are a negligible share of the pipeline cost.
std::mutex g_fftw_mutex;

}  // namespace

TimeSeries linear_detrend(const TimeSeries& x) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("linear_detrend requires at least 2 samples");
  const double nn = static_cast<double>(n);
  const double tbar = (nn - 1.0) / 2.0;
  double xbar = 0.0;
  for (double v : x.samples) xbar += v;
  xbar /= nn;
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = static_cast<double>(i) - tbar;
    num += dt * (x.samples[i] - xbar);
    den += dt * dt;
  }
  const double slope = num / den;
  const double intercept = xbar - slope * tbar;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = x.samples[i] - (intercept + slope * static_cast<double>(i));
  return with_samples(x, std::move(out));
}

TimeSeries butter_lowpass(const TimeSeries& x, double cutoff_hz, int order) {
  if (order < 1 || order > 10)
    throw InvalidInput("butter_lowpass order must be in [1, 10]");
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < x.rate_hz / 2.0))
    throw InvalidInput("butter_lowpass cutoff must lie in (0, rate/2)");
  if (x.size() < 2)
    throw InvalidInput("butter_lowpass requires at least 2 samples");
  const IirCoeffs c = butter_lowpass_coeffs(cutoff_hz, x.rate_hz, order);
  return with_samples(x, filtfilt(c, x.samples));
}

TimeSeries butter_bandpass(const TimeSeries& x, double low_hz, double high_hz,
                           int order) {
  if (order < 1 || order > 10)
    throw InvalidInput("butter_bandpass order must be in [1, 10]");
  if (!(low_hz > 0.0) || !(low_hz < high_hz) || !(high_hz < x.rate_hz / 2.0))
    throw InvalidInput(
        "butter_bandpass band must satisfy 0 < low < high < rate/2");
  if (x.size() < 2)
    throw InvalidInput("butter_bandpass requires at least 2 samples");
  const IirCoeffs c =
      butter_bandpass_coeffs(low_hz, high_hz, x.rate_hz, order);
  return with_samples(x, filtfilt(c, x.samples));
}

Spectrum power_spectrum(const TimeSeries& x) {
  const std::size_t n = x.size();
  if (n < 2) throw InvalidInput("power_spectrum requires at least 2 samples");

  std::lock_guard<std::mutex> lock(g_fftw_mutex);
  double* in = fftw_alloc_real(n);
  fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
  fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out,
                                        FFTW_ESTIMATE);
  std::copy(x.samples.begin(), x.samples.end(), in);
  fftw_execute(plan);

  Spectrum s;
  s.bin_hz = x.rate_hz / static_cast<double>(n);
  s.power.resize(n / 2 + 1);
  for (std::size_t l = 0; l < s.power.size(); ++l)
    s.power[l] = out[l][0] * out[l][0] + out[l][1] * out[l][1];

  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(out);
  return s;
}

}  // namespace bpv
