#include "rfap/highd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include "rfap/common.hpp"

namespace rfap::scenario {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

struct TrackRow {
  long frame = 0;
  double x = 0, y = 0, width = 0, height = 0;
  long lane = 0;
  long preceding_id = 0;
  double thw = 0;
  double cx() const { return x + width / 2.0; }
  double cy() const { return y + height / 2.0; }
};

struct Columns {
  int frame = -1, id = -1, x = -1, y = -1, width = -1, height = -1;
  int lane = -1, preceding = -1, thw = -1;
};

Columns resolve_columns(const std::vector<std::string>& header) {
  auto find = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  Columns c;
  c.frame = find("frame");
  c.id = find("id");
  c.x = find("x");
  c.y = find("y");
  c.width = find("width");
  c.height = find("height");
  c.lane = find("laneId");
  c.preceding = find("precedingId");
  c.thw = find("thw");
  const char* required[] = {"frame", "id", "x", "y", "width", "height", "laneId",
                            "precedingId", "thw"};
  const int got[] = {c.frame, c.id, c.x, c.y, c.width, c.height, c.lane, c.preceding, c.thw};
  for (int i = 0; i < 9; ++i)
    if (got[i] < 0)
      throw DataError(std::string("highD tracks: missing required column '") + required[i] + "'");
  return c;
}

double parse_double(const std::string& s, std::size_t line_no, const char* what) {
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing junk");
    return v;
  } catch (const std::exception&) {
    throw DataError("highD tracks line " + std::to_string(line_no) + ": malformed " +
                    std::string(what) + " value '" + s + "'");
  }
}

long parse_long(const std::string& s, std::size_t line_no, const char* what) {
  const double v = parse_double(s, line_no, what);
  return static_cast<long>(std::llround(v));
}

double read_frame_rate(const std::string& meta_file) {
  std::ifstream in(meta_file);
  if (!in) throw DataError("cannot open recording meta file: " + meta_file);
  std::string header_line, data_line;
  if (!std::getline(in, header_line)) throw DataError("recording meta file is empty");
  const auto header = split_csv_line(header_line);
  int col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "frameRate") col = static_cast<int>(i);
  if (col < 0) throw DataError("highD meta: missing required column 'frameRate'");
  if (!std::getline(in, data_line)) throw DataError("highD meta: no data row");
  const auto fields = split_csv_line(data_line);
  if (static_cast<int>(fields.size()) <= col)
    throw DataError("highD meta line 2: too few fields");
  const double rate = parse_double(fields[col], 2, "frameRate");
  if (rate <= 0) throw DataError("highD meta: frameRate must be positive");
  return rate;
}

}  // namespace

IngestResult ingest_highd(const std::string& tracks_file, const std::string& recording_meta_file,
                          const GridConfig& config, double thw_threshold) {
  config.validate();
  if (thw_threshold <= 0) throw ConfigError("thw_threshold must be positive");

  IngestResult result;
  result.dataset.grid = config;

  std::ifstream in(tracks_file);
  if (!in) throw DataError("cannot open tracks file: " + tracks_file);
  std::string line;
  if (!std::getline(in, line)) return result;  // empty file: empty dataset
  const Columns cols = resolve_columns(split_csv_line(line));

  const double frame_rate = read_frame_rate(recording_meta_file);

  // track id -> frame -> row; ordered maps keep iteration deterministic.
  std::map<long, std::map<long, TrackRow>> tracks;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    const int max_col = std::max({cols.frame, cols.id, cols.x, cols.y, cols.width, cols.height,
                                  cols.lane, cols.preceding, cols.thw});
    if (static_cast<int>(fields.size()) <= max_col)
      throw DataError("highD tracks line " + std::to_string(line_no) + ": too few fields");
    TrackRow row;
    row.frame = parse_long(fields[cols.frame], line_no, "frame");
    const long id = parse_long(fields[cols.id], line_no, "id");
    row.x = parse_double(fields[cols.x], line_no, "x");
    row.y = parse_double(fields[cols.y], line_no, "y");
    row.width = parse_double(fields[cols.width], line_no, "width");
    row.height = parse_double(fields[cols.height], line_no, "height");
    row.lane = parse_long(fields[cols.lane], line_no, "laneId");
    row.preceding_id = parse_long(fields[cols.preceding], line_no, "precedingId");
    row.thw = parse_double(fields[cols.thw], line_no, "thw");
    tracks[id][row.frame] = row;
  }

  // Frame offsets for t_0 - k*dt, k = N_ts-1 .. 0.
  std::vector<long> offsets;
  for (int k = config.n_timesteps - 1; k >= 0; --k)
    offsets.push_back(std::lround(k * config.dt * frame_rate));

  for (const auto& [ego_id, rows] : tracks) {
    // First qualifying frame: leader present and THW strictly below threshold.
    long t0 = -1;
    for (const auto& [frame, row] : rows) {
      if (row.preceding_id > 0 && row.thw > 0 && row.thw < thw_threshold) {
        t0 = frame;
        break;
      }
    }
    if (t0 < 0) continue;

    bool has_history = true;
    for (long off : offsets)
      if (!rows.count(t0 - off)) has_history = false;
    if (!has_history) {
      ++result.skipped;
      continue;
    }

    // Direction of travel from the ego's longitudinal displacement.
    const double dx = rows.rbegin()->second.cx() - rows.begin()->second.cx();
    const double dir = dx < 0 ? -1.0 : 1.0;

    ScenarioTensor tensor;
    for (long off : offsets) {
      const long f = t0 - off;
      const TrackRow& ego = rows.at(f);
      std::vector<ObjectBox> boxes;
      for (const auto& [other_id, other_rows] : tracks) {
        auto it = other_rows.find(f);
        if (it == other_rows.end()) continue;
        const TrackRow& obj = it->second;
        ObjectBox box;
        box.lon = (obj.cx() - ego.cx()) * dir;
        box.lat = (ego.cy() - obj.cy()) * dir;
        box.length = obj.width;
        box.width = obj.height;
        boxes.push_back(box);
      }
      tensor.frames.push_back(build_grid_frame(boxes, EgoPose{0.0, 0.0}, config));
    }
    result.dataset.unlabeled.push_back(std::move(tensor));
    ++result.triggered;
  }
  return result;
}

}  // namespace rfap::scenario
