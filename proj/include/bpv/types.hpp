#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace bpv {

// Error hierarchy. Every failure mode in the library throws one of these;
// the CLI maps them to nonzero exit codes with the message on stderr.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidInput : Error {
  using Error::Error;
};
struct InsufficientBreaths : Error {
  using Error::Error;
};
struct TooLarge : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct EmptyTrainingSet : Error {
  using Error::Error;
};
struct DegenerateModel : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

// Three-class sleep staging target. Class order is fixed: ties in argmax
// resolve toward the smaller enum value.
enum class Stage { Wake = 0, REM = 1, NREM = 2, Unknown = 3 };

// Raw hypnogram labels as they appear in stage files.
enum class StageRaw { W, R, N1, N2, N3 };

constexpr int kNumClasses = 3;

const char* stage_name(Stage s);
Stage stage_from_name(const std::string& name);
Stage map_stage(StageRaw raw);
const char* stage_raw_name(StageRaw s);
StageRaw stage_raw_from_name(const std::string& name);

// Uniformly sampled real-valued signal.
struct TimeSeries {
  std::vector<double> samples;
  double rate_hz = 1.0;
  double start_time_s = 0.0;

  TimeSeries() = default;
  TimeSeries(std::vector<double> s, double rate, double start = 0.0);

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / rate_hz;
  }
  double time_at(std::size_t i) const {
    return start_time_s + static_cast<double>(i) / rate_hz;
  }
  TimeSeries slice(std::size_t begin, std::size_t count) const;
};

// One-sided power spectrum, bins l = 0 .. floor(N/2), power[l] = |X_l|^2.
struct Spectrum {
  std::vector<double> power;
  double bin_hz = 0.0;

  std::size_t size() const { return power.size(); }
  double freq_at(std::size_t l) const {
    return static_cast<double>(l) * bin_hz;
  }
};

}  // namespace bpv
