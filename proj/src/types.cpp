#include "bpv/types.hpp"

#include <cmath>

namespace bpv {

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Wake:
      return "Wake";
    case Stage::REM:
      return "REM";
    case Stage::NREM:
      return "NREM";
    default:
      return "Unknown";
  }
}

Stage stage_from_name(const std::string& name) {
  if (name == "Wake") return Stage::Wake;
  if (name == "REM") return Stage::REM;
  if (name == "NREM") return Stage::NREM;
  if (name == "Unknown") return Stage::Unknown;
  throw ParseError("unknown stage label '" + name + "'");
}

Stage map_stage(StageRaw raw) {
  switch (raw) {
    case StageRaw::W:
      return Stage::Wake;
    case StageRaw::R:
      return Stage::REM;
    default:
      return Stage::NREM;
  }
}

const char* stage_raw_name(StageRaw s) {
  switch (s) {
    case StageRaw::W:
      return "W";
    case StageRaw::R:
      return "R";
    case StageRaw::N1:
      return "N1";
    case StageRaw::N2:
      return "N2";
    default:
      return "N3";
  }
}

StageRaw stage_raw_from_name(const std::string& name) {
  if (name == "W") return StageRaw::W;
  if (name == "R") return StageRaw::R;
  if (name == "N1") return StageRaw::N1;
  if (name == "N2") return StageRaw::N2;
  if (name == "N3") return StageRaw::N3;
  throw ParseError("unknown raw stage label '" + name + "'");
}

TimeSeries::TimeSeries(std::vector<double> s, double rate, double start)
    : samples(std::move(s)), rate_hz(rate), start_time_s(start) {
  if (!(rate_hz > 0.0) || !std::isfinite(rate_hz))
    throw InvalidInput("time series rate must be positive and finite");
  if (samples.empty()) throw InvalidInput("time series must be non-empty");
  for (double v : samples) {
    if (!std::isfinite(v))
      throw InvalidInput("time series contains a non-finite sample");
  }
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > samples.size())
    throw InvalidInput("slice range out of bounds");
  if (count == 0) throw InvalidInput("slice must be non-empty");
  TimeSeries out;
  out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     samples.begin() + static_cast<std::ptrdiff_t>(begin + count));
  out.rate_hz = rate_hz;
  out.start_time_s = start_time_s + static_cast<double>(begin) / rate_hz;
  return out;
}

}  // namespace bpv
