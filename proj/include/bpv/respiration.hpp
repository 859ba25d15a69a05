#pragma once

#include "bpv/types.hpp"

namespace bpv {

// Exhalation onset times, strictly increasing, in seconds.
struct BreathCycles {
  std::vector<double> onsets_s;
};

struct BreathDetectConfig {
  double min_cycle_s = 1.0;  // refractory gap between accepted onsets
  double amp_frac = 0.1;     // required positive excursion, fraction of RMS
  double lowpass_hz = 2.0;
  int lowpass_order = 5;
};

// Detects exhalation onsets as downward zero crossings of the detrended,
// low-passed airflow. A candidate crossing is accepted when at least
// min_cycle_s has elapsed since the previous onset and the intervening
// positive excursion exceeds amp_frac times the window RMS. The crossing
// time is linearly interpolated between samples. The gating is relative,
// so detection is invariant under amplitude scaling.
BreathCycles detect_breath_cycles(const TimeSeries& airflow,
                                  const BreathDetectConfig& cfg = {});

// Instantaneous respiratory rate in cycles/min: knots (t_i, 60/(t_i-t_{i-1}))
// for i = 2..N over onsets t_1..t_N, interpolated with a Fritsch-Carlson
// monotone cubic and sampled at 4 Hz over [0, duration_s). Outside the knot
// span the nearest knot value is held constant.
TimeSeries build_irr(const BreathCycles& cycles, double duration_s);

struct SqiResult {
  double value = 0.0;
  bool degenerate = false;
};

// Spectral quality index of an airflow window: band-pass [0.1, 0.75] Hz
// (order 3), take the power spectrum, locate the peak bin in the band, and
// return the power in the peak bin +-2 bins divided by the total non-DC
// power. Lies in [0, 1] and is invariant under amplitude scaling.
SqiResult sqi(const TimeSeries& airflow_window);

}  // namespace bpv
