#include "drivestyle/datasets/csv.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace drivestyle::datasets {

const std::vector<std::string> kCsvColumns = {
    "vehicle_id", "frame_id",     "position",     "velocity",      "acceleration",
    "lane_id",    "space_headway", "preceding_id", "vehicle_length"};

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, std::size_t line_no, const std::string& column) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": cannot parse '" + s +
                             "' as number for column " + column);
  }
  return v;
}

long parse_long(const std::string& s, std::size_t line_no, const std::string& column) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw std::runtime_error("csv line " + std::to_string(line_no) + ": cannot parse '" + s +
                             "' as integer for column " + column);
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::vector<RawTrajectory> ingest_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("ingest_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("ingest_csv: '" + path + "' is empty");

  const std::vector<std::string> header = split_csv_line(line);
  std::map<std::string, std::size_t> col;
  for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;
  for (const std::string& name : kCsvColumns) {
    if (!col.count(name)) {
      throw std::runtime_error("ingest_csv: missing column '" + name + "' in '" + path + "'");
    }
  }

  std::map<long, std::vector<RawRecord>> by_vehicle;
  std::size_t line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw std::runtime_error("csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " fields, got " +
                               std::to_string(f.size()));
    }
    RawRecord r;
    r.vehicle_id = parse_long(f[col["vehicle_id"]], line_no, "vehicle_id");
    r.frame_id = parse_long(f[col["frame_id"]], line_no, "frame_id");
    r.position = parse_double(f[col["position"]], line_no, "position");
    r.velocity = parse_double(f[col["velocity"]], line_no, "velocity");
    r.acceleration = parse_double(f[col["acceleration"]], line_no, "acceleration");
    r.lane_id = static_cast<int>(parse_long(f[col["lane_id"]], line_no, "lane_id"));
    r.space_headway = parse_double(f[col["space_headway"]], line_no, "space_headway");
    r.preceding_id = parse_long(f[col["preceding_id"]], line_no, "preceding_id");
    r.vehicle_length = parse_double(f[col["vehicle_length"]], line_no, "vehicle_length");
    by_vehicle[r.vehicle_id].push_back(r);
  }

  std::vector<RawTrajectory> out;
  out.reserve(by_vehicle.size());
  for (auto& [vid, records] : by_vehicle) {
    std::sort(records.begin(), records.end(),
              [](const RawRecord& a, const RawRecord& b) { return a.frame_id < b.frame_id; });
    for (std::size_t i = 1; i < records.size(); ++i) {
      if (records[i].frame_id <= records[i - 1].frame_id) {
        throw std::runtime_error("ingest_csv: vehicle " + std::to_string(vid) +
                                 " has non-increasing frame ids");
      }
    }
    out.push_back(RawTrajectory{vid, std::move(records)});
  }
  return out;
}

void write_raw_csv(const std::string& path, const std::vector<RawTrajectory>& trajectories) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("write_raw_csv: cannot open '" + path + "'");
  for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
    if (i) os << ",";
    os << kCsvColumns[i];
  }
  os << "\n";
  for (const RawTrajectory& t : trajectories) {
    for (const RawRecord& r : t.records) {
      os << r.vehicle_id << "," << r.frame_id << "," << format_double(r.position) << ","
         << format_double(r.velocity) << "," << format_double(r.acceleration) << "," << r.lane_id
         << "," << format_double(r.space_headway) << "," << r.preceding_id << ","
         << format_double(r.vehicle_length) << "\n";
    }
  }
}

}  // namespace drivestyle::datasets
