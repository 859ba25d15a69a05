#include "bpv/respiration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "bpv/signal.hpp"

namespace bpv {

namespace {

constexpr double kSqiBandLow = 0.1;
constexpr double kSqiBandHigh = 0.75;
constexpr int kSqiBandOrder = 3;

// Fritsch-Carlson tangents for monotone cubic Hermite interpolation.
std::vector<double> monotone_tangents(const std::vector<double>& t,
                                      const std::vector<double>& v) {
  const std::size_t k = t.size();
  std::vector<double> delta(k - 1);
  for (std::size_t i = 0; i + 1 < k; ++i)
    delta[i] = (v[i + 1] - v[i]) / (t[i + 1] - t[i]);

  std::vector<double> m(k);
  m[0] = delta[0];
  m[k - 1] = delta[k - 2];
  for (std::size_t i = 1; i + 1 < k; ++i) {
    if (delta[i - 1] * delta[i] <= 0.0)
      m[i] = 0.0;
    else
      m[i] = 0.5 * (delta[i - 1] + delta[i]);
  }
  for (std::size_t i = 0; i + 1 < k; ++i) {
    if (delta[i] == 0.0) {
      m[i] = 0.0;
      m[i + 1] = 0.0;
      continue;
    }
    const double alpha = m[i] / delta[i];
    const double beta = m[i + 1] / delta[i];
    const double s = alpha * alpha + beta * beta;
    if (s > 9.0) {
      const double tau = 3.0 / std::sqrt(s);
      m[i] = tau * alpha * delta[i];
      m[i + 1] = tau * beta * delta[i];
    }
  }
  return m;
}

double hermite_eval(double t0, double t1, double v0, double v1, double m0,
                    double m1, double x) {
  const double h = t1 - t0;
  const double s = (x - t0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
  const double h10 = s3 - 2.0 * s2 + s;
  const double h01 = -2.0 * s3 + 3.0 * s2;
  const double h11 = s3 - s2;
  return h00 * v0 + h10 * h * m0 + h01 * v1 + h11 * h * m1;
}

}  // namespace

BreathCycles detect_breath_cycles(const TimeSeries& airflow,
                                  const BreathDetectConfig& cfg) {
  if (airflow.duration_s() < 10.0)
    throw InvalidInput("breath detection requires at least 10 s of signal");
  if (!(cfg.min_cycle_s > 0.0) || !(cfg.amp_frac >= 0.0))
    throw InvalidInput("invalid breath detection parameters");

  const TimeSeries y = butter_lowpass(linear_detrend(airflow), cfg.lowpass_hz,
                                      cfg.lowpass_order);

  double sumsq = 0.0;
  for (double v : y.samples) sumsq += v * v;
  const double rms = std::sqrt(sumsq / static_cast<double>(y.size()));
  const double amp_threshold = cfg.amp_frac * rms;

  BreathCycles out;
  double run_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < y.size(); ++i) {
    run_max = std::max(run_max, y.samples[i]);
    if (!(y.samples[i] > 0.0 && y.samples[i + 1] <= 0.0)) continue;
    const double frac = y.samples[i] / (y.samples[i] - y.samples[i + 1]);
    const double t =
        y.start_time_s + (static_cast<double>(i) + frac) / y.rate_hz;
    const bool gap_ok =
        out.onsets_s.empty() || t - out.onsets_s.back() >= cfg.min_cycle_s;
    if (gap_ok && run_max >= amp_threshold) {
      out.onsets_s.push_back(t);
      run_max = -std::numeric_limits<double>::infinity();
    }
  }

  if (out.onsets_s.size() < 3)
    throw InsufficientBreaths("fewer than 3 breath cycles detected");
  return out;
}

TimeSeries build_irr(const BreathCycles& cycles, double duration_s) {
  const std::size_t n = cycles.onsets_s.size();
  if (n < 3) throw InvalidInput("IRR requires at least 3 breath onsets");
  if (!(duration_s > 0.0)) throw InvalidInput("IRR duration must be positive");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(cycles.onsets_s[i] > cycles.onsets_s[i - 1]))
      throw InvalidInput("breath onsets must be strictly increasing");
  }

  std::vector<double> kt(n - 1), kv(n - 1);
  for (std::size_t i = 1; i < n; ++i) {
    kt[i - 1] = cycles.onsets_s[i];
    kv[i - 1] = 60.0 / (cycles.onsets_s[i] - cycles.onsets_s[i - 1]);
  }

  const std::size_t n_out =
      static_cast<std::size_t>(std::llround(duration_s * 4.0));
  std::vector<double> samples(n_out);

  if (kt.size() == 1) {
    std::fill(samples.begin(), samples.end(), kv[0]);
    return TimeSeries(std::move(samples), 4.0, 0.0);
  }

  const std::vector<double> m = monotone_tangents(kt, kv);
  std::size_t seg = 0;
  for (std::size_t k = 0; k < n_out; ++k) {
    const double x = static_cast<double>(k) / 4.0;
    if (x <= kt.front()) {
      samples[k] = kv.front();
      continue;
    }
    if (x >= kt.back()) {
      samples[k] = kv.back();
      continue;
    }
    while (kt[seg + 1] < x) ++seg;
    samples[k] =
        hermite_eval(kt[seg], kt[seg + 1], kv[seg], kv[seg + 1], m[seg],
                     m[seg + 1], x);
  }
  return TimeSeries(std::move(samples), 4.0, 0.0);
}

SqiResult sqi(const TimeSeries& airflow_window) {
  const TimeSeries bp =
      butter_bandpass(airflow_window, kSqiBandLow, kSqiBandHigh,
                      kSqiBandOrder);
  const Spectrum s = power_spectrum(bp);

  const std::size_t nbins = s.size();
  std::size_t peak = 0;
  bool found = false;
  for (std::size_t l = 1; l < nbins; ++l) {
    const double f = s.freq_at(l);
    if (f < kSqiBandLow || f > kSqiBandHigh) continue;
    if (!found || s.power[l] > s.power[peak]) {
      peak = l;
      found = true;
    }
  }

  double total = 0.0;
  for (std::size_t l = 1; l < nbins; ++l) total += s.power[l];
  if (!found || total <= 0.0) return {0.0, true};

  const std::size_t lo = peak > 2 ? peak - 2 : 1;
  const std::size_t hi = std::min(peak + 2, nbins - 1);
  double num = 0.0;
  for (std::size_t l = lo; l <= hi; ++l) num += s.power[l];
  return {num / total, false};
}

}  // namespace bpv
