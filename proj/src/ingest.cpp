#include "tugfall/ingest.hpp"

#include "tugfall/table.hpp"

#include <fstream>

namespace tugfall {

RawRecording<double> read_recording(const std::filesystem::path& path, std::string subject_id,
                                    double sampling_rate_hz) {
  const auto lines = read_data_lines(path);
  if (lines.empty()) throw IngestionError(path.string() + " is empty");
  const auto header = split_csv_line(lines.front());

  std::size_t offset = 0;
  bool has_time = false;
  if (header == std::vector<std::string>{"t", "x", "y", "z"}) {
    offset = 1;
    has_time = true;
  } else if (header != std::vector<std::string>{"x", "y", "z"}) {
    throw IngestionError(path.string() + ": header must be 'x,y,z' or 't,x,y,z'");
  }

  RawRecording<double> rec;
  rec.subject_id = std::move(subject_id);
  rec.sampling_rate_hz = sampling_rate_hz;
  rec.samples.resize(static_cast<Eigen::Index>(lines.size() - 1), 3);
  double previous_t = 0.0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    const std::string where = path.string() + " row " + std::to_string(r);
    if (cells.size() != header.size()) throw IngestionError(where + ": wrong number of cells");
    if (has_time) {
      const double t = parse_number(cells[0], where);
      if (r > 1 && !(t > previous_t)) throw IngestionError(where + ": time column is not strictly increasing");
      previous_t = t;
    }
    for (std::size_t k = 0; k < 3; ++k) {
      rec.samples(static_cast<Eigen::Index>(r - 1), static_cast<Eigen::Index>(k)) = parse_number(cells[offset + k], where);
    }
  }
  validate(rec);
  return rec;
}

void write_recording(const std::filesystem::path& path, const RawRecording<double>& rec) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "x,y,z\n";
  for (Eigen::Index i = 0; i < rec.samples.rows(); ++i) {
    out << format_number(rec.samples(i, 0)) << ',' << format_number(rec.samples(i, 1)) << ','
        << format_number(rec.samples(i, 2)) << '\n';
  }
}

OverrideMap read_overrides(const std::filesystem::path& path) {
  const auto lines = read_data_lines(path);
  if (lines.empty()) throw IngestionError(path.string() + " is empty");
  const std::vector<std::string> expected{"subject_id", "start1_s", "end1_s", "start2_s",
                                          "end2_s",     "start3_s", "end3_s"};
  if (split_csv_line(lines.front()) != expected) {
    throw IngestionError(path.string() + ": header must be " +
                         "subject_id,start1_s,end1_s,start2_s,end2_s,start3_s,end3_s");
  }
  OverrideMap out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split_csv_line(lines[r]);
    const std::string where = path.string() + " row " + std::to_string(r);
    if (cells.size() != 7) throw IngestionError(where + ": expected 7 cells");
    std::array<BoundaryPair, 3> pairs;
    for (std::size_t i = 0; i < 3; ++i) {
      pairs[i] = {parse_number(cells[1 + 2 * i], where), parse_number(cells[2 + 2 * i], where)};
    }
    if (!out.emplace(cells[0], pairs).second) throw IngestionError(where + ": duplicate subject " + cells[0]);
  }
  return out;
}

}  // namespace tugfall
