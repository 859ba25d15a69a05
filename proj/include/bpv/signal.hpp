#pragma once

#include "bpv/types.hpp"

namespace bpv {

// Removes the least-squares affine trend. Output has (numerically) zero mean
// and zero linear slope.
TimeSeries linear_detrend(const TimeSeries& x);

// Zero-phase Butterworth filters: the designed IIR filter is applied forward
// and backward (so the amplitude response is applied twice and the phase
// cancels). Edge transients are handled by odd-reflective padding of three
// times the filter order together with steady-state initial conditions.
TimeSeries butter_lowpass(const TimeSeries& x, double cutoff_hz, int order);
TimeSeries butter_bandpass(const TimeSeries& x, double low_hz, double high_hz,
                           int order);

// One-sided power spectrum with a rectangular window: power[l] = |X_l|^2 for
// l = 0 .. floor(N/2), where X is the DFT of the samples.
Spectrum power_spectrum(const TimeSeries& x);

}  // namespace bpv
