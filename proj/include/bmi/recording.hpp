#pragma once

// `.bsr` body-signal recordings.
//
// Line 1 is a JSON header object:
//   {"format":"bsr","version":1,"layout":{...},"sample_rate":100,"params_hash":"..."}
// Every following line is one frame, `t,v0,v1,...,v{n-1}`, printed with 17
// significant digits so a write/read cycle reproduces every double exactly.

#include "bmi/sensor.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace bmi {

struct Recording {
  ChannelLayout layout = ChannelLayout::default_shirt();
  double sample_rate = 100.0;
  std::string params_hash;
  std::vector<SensorFrame> frames;
};

std::string format_recording(const Recording& rec);

/// Throws MalformedHeaderError, ChannelCountError or NonMonotonicTimestampError
/// (1-based data row) on bad input.
Recording parse_recording(std::string_view text);

void write_recording(const std::string& path, const Recording& rec);
Recording read_recording(const std::string& path);

}  // namespace bmi
