#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "sobgeo/errors.hpp"
#include "sobgeo/types.hpp"

namespace sobgeo {

inline constexpr int k_schema_version = 1;

// A discretized field document: loop points, velocities, scalar fields
// (d = 1) and displacement fields all share the same on-disk shape
//   { "schema_version": 1, "n": .., "d": .., "points": [[..], ..] }.
struct FieldDocument {
  Index n = 0;
  Index d = 0;
  Matrix<double> points;
};

namespace io_detail {

inline nlohmann::json parse_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
  }
}

// All files are written to a sibling temp path first and renamed into place,
// so readers never observe a half-written document.
inline void atomic_write(const std::filesystem::path& path, const std::string& body) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + tmp.string());
    out << body;
    if (!out.good()) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("rename failed for " + path.string() + ": " + ec.message());
}

}  // namespace io_detail

inline FieldDocument load_field_document(const std::filesystem::path& path) {
  const nlohmann::json j = io_detail::parse_json(path);
  if (!j.is_object() || !j.contains("schema_version") || !j.contains("n") ||
      !j.contains("d") || !j.contains("points")) {
    throw ValidationError("field document " + path.string() +
                          ": expected keys schema_version, n, d, points");
  }
  if (j["schema_version"].get<int>() != k_schema_version) {
    throw ValidationError("field document " + path.string() + ": unsupported schema version");
  }
  FieldDocument doc;
  doc.n = j["n"].get<Index>();
  doc.d = j["d"].get<Index>();
  const auto& pts = j["points"];
  if (!pts.is_array() || static_cast<Index>(pts.size()) != doc.n) {
    throw ValidationError("field document " + path.string() + ": points must have n rows");
  }
  doc.points.resize(doc.n, doc.d);
  for (Index i = 0; i < doc.n; ++i) {
    const auto& row = pts[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Index>(row.size()) != doc.d) {
      throw ValidationError("field document " + path.string() + ": row " +
                            std::to_string(i) + " must have d entries");
    }
    for (Index c = 0; c < doc.d; ++c) {
      const auto& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) {
        throw ValidationError("field document " + path.string() + ": non-numeric entry");
      }
      doc.points(i, c) = cell.get<double>();
    }
  }
  if (!doc.points.allFinite()) {
    throw ValidationError("field document " + path.string() + ": non-finite entry");
  }
  return doc;
}

inline nlohmann::json matrix_to_json(const Matrix<double>& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline void save_field_document(const std::filesystem::path& path,
                                const Matrix<double>& points) {
  nlohmann::json j;
  j["schema_version"] = k_schema_version;
  j["n"] = points.rows();
  j["d"] = points.cols();
  j["points"] = matrix_to_json(points);
  io_detail::atomic_write(path, j.dump(2) + "\n");
}

// Trajectory snapshots as JSON-lines plus a CSV mirror of the energy track.
class TrajectoryWriter {
 public:
  void add(double t, const Matrix<double>& points, const Matrix<double>& velocity,
           double energy, double tail_energy) {
    nlohmann::json line;
    line["t"] = t;
    line["points"] = matrix_to_json(points);
    line["velocity"] = matrix_to_json(velocity);
    line["energy"] = energy;
    line["tail_energy"] = tail_energy;
    jsonl_ << line.dump() << "\n";
    csv_ << format_number(t) << "," << format_number(energy) << ","
         << format_number(tail_energy) << "\n";
  }

  void write(const std::filesystem::path& jsonl_path,
             const std::filesystem::path& csv_path) const {
    io_detail::atomic_write(jsonl_path, jsonl_.str());
    io_detail::atomic_write(csv_path, "t,energy,tail\n" + csv_.str());
  }

  static std::string format_number(double x) {
    return nlohmann::json(x).dump();  // shortest round-trip form, deterministic
  }

 private:
  std::ostringstream jsonl_;
  std::ostringstream csv_;
};

inline void save_json(const std::filesystem::path& path, const nlohmann::json& j) {
  io_detail::atomic_write(path, j.dump(2) + "\n");
}

}  // namespace sobgeo
