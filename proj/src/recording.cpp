#include "bmi/recording.hpp"

#include "bmi/error.hpp"
#include "bmi/json_io.hpp"
#include "bmi/util.hpp"

#include <cmath>

namespace bmi {

std::string format_recording(const Recording& rec) {
  const json header = {{"format", "bsr"},
                       {"version", 1},
                       {"layout", to_json(rec.layout)},
                       {"sample_rate", rec.sample_rate},
                       {"params_hash", rec.params_hash}};
  std::string out = header.dump() + "\n";
  for (const auto& f : rec.frames) {
    if (f.values.size() != static_cast<Eigen::Index>(rec.layout.total_channels))
      throw ChannelCountError("frame at t=" + format_double(f.t) + " has " +
                              std::to_string(f.values.size()) + " values, layout has " +
                              std::to_string(rec.layout.total_channels));
    out += format_double(f.t);
    for (Eigen::Index c = 0; c < f.values.size(); ++c) {
      out += ',';
      out += format_double(f.values[c]);
    }
    out += '\n';
  }
  return out;
}

Recording parse_recording(std::string_view text) {
  const auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]).empty()) throw MalformedHeaderError("recording has no header line");
  Recording rec;
  try {
    const json header = json::parse(trim(lines[0]));
    if (!header.is_object() || header.value("format", "") != "bsr")
      throw MalformedHeaderError("recording header is not a bsr header object");
    rec.layout = layout_from_json(header.at("layout"));
    rec.sample_rate = header.at("sample_rate").get<double>();
    rec.params_hash = header.value("params_hash", "");
  } catch (const json::exception& e) {
    throw MalformedHeaderError(std::string("malformed recording header: ") + e.what());
  } catch (const FormatError& e) {
    throw MalformedHeaderError(std::string("malformed recording header: ") + e.what());
  } catch (const ValidationError& e) {
    throw MalformedHeaderError(std::string("malformed recording header: ") + e.what());
  }

  const std::size_t expected = rec.layout.total_channels + 1;
  std::size_t row = 0;
  for (std::size_t li = 1; li < lines.size(); ++li) {
    const auto line = trim(lines[li]);
    if (line.empty()) continue;
    ++row;
    const auto cells = split(line, ',');
    if (cells.size() != expected)
      throw ChannelCountError("recording row " + std::to_string(row) + " has " +
                              std::to_string(cells.size() - 1) + " channels, header declares " +
                              std::to_string(rec.layout.total_channels));
    SensorFrame f;
    f.t = parse_double(cells[0]);
    f.values.resize(static_cast<Eigen::Index>(rec.layout.total_channels));
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const double v = parse_double(cells[c]);
      if (!std::isfinite(v))
        throw FormatError("recording row " + std::to_string(row) + " has a non-finite value");
      f.values[static_cast<Eigen::Index>(c - 1)] = v;
    }
    if (!rec.frames.empty() && !(f.t > rec.frames.back().t))
      throw NonMonotonicTimestampError("recording timestamps not increasing at row " + std::to_string(row),
                                       row);
    rec.frames.push_back(std::move(f));
  }
  return rec;
}

void write_recording(const std::string& path, const Recording& rec) {
  write_file_atomic(path, format_recording(rec));
}

Recording read_recording(const std::string& path) { return parse_recording(read_file(path)); }

}  // namespace bmi
