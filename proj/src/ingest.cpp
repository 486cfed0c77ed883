#include "affect/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "affect/csv.hpp"

namespace affect::ingest {

double Recording::duration() const {
  if (frames.empty() || frame_rate <= 0.0) return 0.0;
  return frames.back().timestamp - frames.front().timestamp + 1.0 / frame_rate;
}

namespace {

std::size_t require_column(const std::vector<std::string>& header, const std::string& name,
                           const std::string& path) {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end())
    raise(errc::missing_column, "column '" + name + "' not found in " + path);
  return static_cast<std::size_t>(it - header.begin());
}

double require_finite(const std::string& field, const std::string& what, std::size_t row) {
  auto v = csv::parse_double(field);
  if (!v || !std::isfinite(*v))
    raise(errc::non_finite_value, what + " = '" + field + "' at row " + std::to_string(row), row);
  return *v;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::io_error, "cannot write " + path);
  return out;
}

std::string stem_of(const std::string& path) {
  auto slash = path.find_last_of("/\\");
  std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
  auto dot = name.find_last_of('.');
  return dot == std::string::npos ? name : name.substr(0, dot);
}

}  // namespace

Recording parse_gaze_csv(const std::string& path, std::optional<double> declared_frame_rate,
                         const WarningSink& warn) {
  auto lines = csv::read_lines(path);
  if (lines.empty()) raise(errc::empty_file, path + " is empty");

  auto header = csv::split_fields(lines[0]);
  const std::size_t c_t = require_column(header, "timestamp", path);
  const std::size_t c_x = require_column(header, "gaze_x", path);
  const std::size_t c_y = require_column(header, "gaze_y", path);
  const std::size_t c_o = require_column(header, "eye_openness", path);
  const std::size_t c_v = require_column(header, "valid", path);

  Recording rec;
  rec.recording_id = stem_of(path);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = rec.frames.size() + 1;  // 1-based data row
    auto fields = csv::split_fields(lines[i]);
    if (fields.size() < header.size())
      raise(errc::ragged_row, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()) + " at row " + std::to_string(row),
            row);

    GazeFrame frame;
    frame.timestamp = require_finite(fields[c_t], "timestamp", row);
    auto valid_field = csv::parse_index(fields[c_v]);
    if (!valid_field || (*valid_field != 0 && *valid_field != 1))
      raise(errc::non_finite_value, "valid flag = '" + fields[c_v] + "' at row " + std::to_string(row), row);
    frame.valid = *valid_field == 1;
    if (frame.valid) {
      frame.gaze_x = require_finite(fields[c_x], "gaze_x", row);
      frame.gaze_y = require_finite(fields[c_y], "gaze_y", row);
      frame.eye_openness = require_finite(fields[c_o], "eye_openness", row);
      if (frame.eye_openness < 0.0)
        raise(errc::non_finite_value, "eye_openness < 0 at row " + std::to_string(row), row);
    } else {
      // Invalid frames keep whatever parses; trackers emit junk here.
      frame.gaze_x = csv::parse_double(fields[c_x]).value_or(0.0);
      frame.gaze_y = csv::parse_double(fields[c_y]).value_or(0.0);
      frame.eye_openness = csv::parse_double(fields[c_o]).value_or(0.0);
    }
    if (!rec.frames.empty() && frame.timestamp <= rec.frames.back().timestamp)
      raise(errc::non_monotone_timestamp,
            "timestamp does not increase at row " + std::to_string(row), row);
    rec.frames.push_back(frame);
  }
  if (rec.frames.empty()) raise(errc::empty_file, path + " has a header but no rows");

  // Median inter-frame interval drives the inferred rate.
  double median_rate = 0.0;
  if (rec.frames.size() >= 2) {
    std::vector<double> dts;
    dts.reserve(rec.frames.size() - 1);
    for (std::size_t i = 1; i < rec.frames.size(); ++i)
      dts.push_back(rec.frames[i].timestamp - rec.frames[i - 1].timestamp);
    std::sort(dts.begin(), dts.end());
    double median_dt = dts[dts.size() / 2];
    if (dts.size() % 2 == 0) median_dt = 0.5 * (dts[dts.size() / 2 - 1] + dts[dts.size() / 2]);
    if (median_dt > 0) median_rate = 1.0 / median_dt;
  }

  if (declared_frame_rate) {
    if (!(*declared_frame_rate > 0) || !std::isfinite(*declared_frame_rate))
      raise(errc::invalid_argument, "frame rate must be finite and positive");
    rec.frame_rate = *declared_frame_rate;
    if (median_rate > 0 && std::abs(median_rate - rec.frame_rate) > 0.1 * rec.frame_rate && warn)
      warn(path + ": declared frame rate " + csv::format_double(rec.frame_rate) +
           " Hz is more than 10% off the median inter-frame rate " +
           csv::format_double(median_rate) + " Hz");
  } else if (median_rate > 0) {
    rec.frame_rate = median_rate;
  } else {
    rec.frame_rate = 1.0;  // single frame, rate is moot
    if (warn) warn(path + ": single-frame recording, assuming 1 Hz");
  }
  return rec;
}

ModalityFeatureFile parse_feature_csv(const std::string& path, const std::string& modality) {
  auto lines = csv::read_lines(path);
  if (lines.empty()) raise(errc::empty_file, path + " is empty");

  auto header = csv::split_fields(lines[0]);
  if (header.empty() || header[0] != "segment_index")
    raise(errc::missing_column, "first column must be 'segment_index' in " + path);
  if (header.size() < 2)
    raise(errc::missing_column, "no feature columns in " + path);

  ModalityFeatureFile file;
  file.modality = modality;
  file.dimension = header.size() - 1;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = file.rows.size() + 1;
    auto fields = csv::split_fields(lines[i]);
    if (fields.size() != header.size())
      raise(errc::ragged_row, "expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()) + " at row " + std::to_string(row),
            row);
    FeatureRow fr;
    auto idx = csv::parse_index(fields[0]);
    if (!idx) raise(errc::non_finite_value, "segment_index = '" + fields[0] + "' at row " + std::to_string(row), row);
    fr.segment_index = *idx;
    fr.values.reserve(file.dimension);
    for (std::size_t c = 1; c < fields.size(); ++c)
      fr.values.push_back(require_finite(fields[c], header[c], row));
    file.rows.push_back(std::move(fr));
  }

  std::stable_sort(file.rows.begin(), file.rows.end(),
                   [](const FeatureRow& a, const FeatureRow& b) { return a.segment_index < b.segment_index; });
  for (std::size_t i = 1; i < file.rows.size(); ++i)
    if (file.rows[i].segment_index == file.rows[i - 1].segment_index)
      raise(errc::duplicate_segment_index,
            "segment_index " + std::to_string(file.rows[i].segment_index) + " appears twice in " + path);
  for (std::size_t i = 0; i < file.rows.size(); ++i)
    if (file.rows[i].segment_index != static_cast<long long>(i))
      raise(errc::gap_in_indices, "segment_index values are not contiguous from 0 in " + path);
  return file;
}

LabelFile parse_label_csv(const std::string& path) {
  auto lines = csv::read_lines(path);
  if (lines.empty()) raise(errc::empty_file, path + " is empty");

  auto header = csv::split_fields(lines[0]);
  const std::size_t c_i = require_column(header, "segment_index", path);
  const std::size_t c_a = require_column(header, "arousal", path);
  const std::size_t c_v = require_column(header, "valence", path);

  LabelFile file;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    const std::size_t row = file.rows.size() + 1;
    auto fields = csv::split_fields(lines[i]);
    if (fields.size() < header.size())
      raise(errc::ragged_row, "short row " + std::to_string(row) + " in " + path, row);
    LabelRow lr;
    auto idx = csv::parse_index(fields[c_i]);
    if (!idx) raise(errc::non_finite_value, "segment_index = '" + fields[c_i] + "' at row " + std::to_string(row), row);
    lr.segment_index = *idx;
    lr.arousal = require_finite(fields[c_a], "arousal", row);
    lr.valence = require_finite(fields[c_v], "valence", row);
    file.rows.push_back(lr);
  }

  std::stable_sort(file.rows.begin(), file.rows.end(),
                   [](const LabelRow& a, const LabelRow& b) { return a.segment_index < b.segment_index; });
  for (std::size_t i = 1; i < file.rows.size(); ++i)
    if (file.rows[i].segment_index == file.rows[i - 1].segment_index)
      raise(errc::duplicate_segment_index,
            "segment_index " + std::to_string(file.rows[i].segment_index) + " appears twice in " + path);
  for (std::size_t i = 0; i < file.rows.size(); ++i)
    if (file.rows[i].segment_index != static_cast<long long>(i))
      raise(errc::gap_in_indices, "segment_index values are not contiguous from 0 in " + path);
  return file;
}

void write_gaze_csv(const Recording& recording, const std::string& path) {
  auto out = open_out(path);
  out << "timestamp,gaze_x,gaze_y,eye_openness,valid\n";
  for (const auto& f : recording.frames) {
    out << csv::format_double(f.timestamp) << ',' << csv::format_double(f.gaze_x) << ','
        << csv::format_double(f.gaze_y) << ',' << csv::format_double(f.eye_openness) << ','
        << (f.valid ? 1 : 0) << '\n';
  }
}

void write_feature_csv(const ModalityFeatureFile& file, const std::string& path,
                       const std::vector<std::string>& column_names) {
  if (!column_names.empty() && column_names.size() != file.dimension)
    raise(errc::invalid_argument, "column name count does not match dimension");
  auto out = open_out(path);
  out << "segment_index";
  for (std::size_t c = 0; c < file.dimension; ++c) {
    out << ',';
    if (column_names.empty())
      out << 'f' << c;
    else
      out << column_names[c];
  }
  out << '\n';
  for (const auto& row : file.rows) {
    out << row.segment_index;
    for (double v : row.values) out << ',' << csv::format_double(v);
    out << '\n';
  }
}

void write_label_csv(const LabelFile& file, const std::string& path) {
  auto out = open_out(path);
  out << "segment_index,arousal,valence\n";
  for (const auto& row : file.rows)
    out << row.segment_index << ',' << csv::format_double(row.arousal) << ','
        << csv::format_double(row.valence) << '\n';
}

}  // namespace affect::ingest
