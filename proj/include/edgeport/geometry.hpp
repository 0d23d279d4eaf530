#pragma once

// Contact-grid geometry for the gripper force-sensor array and the
// grip-correction match-action table built from it.
//
// Cells are numbered row-major on an n-row by m-column grid: cell i sits at
// column i % m, row i / m. Grid coordinates are millimeters with x across the
// columns and y growing down the rows.

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <edgeport/wire.hpp>

#include <json.hpp>

namespace edgeport::geometry {

struct GridConfig {
  int rows = 5;
  int cols = 3;
  double gap_x_mm = 10.0;
  double gap_y_mm = 8.0;
  int base_index = 1;       // cell the corrected grip pivots on
  uint16_t threshold = 500; // FSR counts above which a cell is in contact

  int cell_count() const { return rows * cols; }

  void validate() const {
    if (rows < 1 || cols < 1) {
      throw std::invalid_argument("grid must have at least one row and column");
    }
    if (cell_count() < 2) {
      throw std::invalid_argument("grid needs at least two cells");
    }
    if (static_cast<std::size_t>(cell_count()) > wire::kFsrCount) {
      throw std::invalid_argument("grid has " + std::to_string(cell_count()) +
                                  " cells but the frame carries only " +
                                  std::to_string(wire::kFsrCount) + " sensors");
    }
    if (!(gap_x_mm > 0.0) || !(gap_y_mm > 0.0)) {
      throw std::invalid_argument("grid gaps must be positive");
    }
    if (base_index < 0 || base_index >= cell_count()) {
      throw std::invalid_argument("base_index " + std::to_string(base_index) +
                                  " outside grid");
    }
    if (threshold > wire::kFsrMax) {
      throw std::invalid_argument("contact threshold exceeds sensor range");
    }
  }

  bool operator==(const GridConfig&) const = default;
};

struct CellCoords {
  int col = 0;
  int row = 0;

  bool operator==(const CellCoords&) const = default;
};

struct Vec2 {
  double x = 0;
  double y = 0;
};

inline CellCoords cell_coords(int index, const GridConfig& g) {
  if (index < 0 || index >= g.cell_count()) {
    throw std::invalid_argument("cell index " + std::to_string(index) + " outside grid");
  }
  return {index % g.cols, index / g.cols};
}

inline Vec2 cell_position_mm(int index, const GridConfig& g) {
  const CellCoords c = cell_coords(index, g);
  return {c.col * g.gap_x_mm, c.row * g.gap_y_mm};
}

struct Quaternion {
  double x = 0;
  double y = 0;
  double z = 0;
  double w = 1;

  bool operator==(const Quaternion&) const = default;
};

// Rotation by theta about the grid plane normal (z axis).
inline Quaternion quaternion_about_z(double theta_rad) {
  return {0.0, 0.0, std::sin(theta_rad / 2.0), std::cos(theta_rad / 2.0)};
}

enum class Verdict { kCorrection, kCorrectGrip, kNoTool };

inline std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::kCorrection: return "Correction";
    case Verdict::kCorrectGrip: return "CorrectGrip";
    case Verdict::kNoTool: return "NoTool";
  }
  throw std::logic_error("bad verdict");
}

inline Verdict verdict_from_string(const std::string& s) {
  if (s == "Correction") return Verdict::kCorrection;
  if (s == "CorrectGrip") return Verdict::kCorrectGrip;
  if (s == "NoTool") return Verdict::kNoTool;
  throw std::invalid_argument("unknown verdict '" + s + "'");
}

struct CorrectionEntry {
  Verdict verdict = Verdict::kCorrection;
  double dist_x_mm = 0;      // meaningful only for Correction verdicts
  double dist_y_mm = 0;
  Quaternion rotation;       // identity for CorrectGrip and NoTool

  bool operator==(const CorrectionEntry&) const = default;
};

namespace detail {

// The full-diagonal contact pattern means no tool is held at all; it exists
// once the grid has at least three cells.
inline bool no_tool_key(int se, int es, const GridConfig& g) {
  return g.cell_count() >= 3 && se == 0 && es == g.cell_count() - 1;
}

// A straight grip down the middle column; only defined when a middle column
// exists (odd m) and the grid has more than one row, and never overriding
// the no-tool pattern.
inline bool correct_grip_key(int se, int es, const GridConfig& g) {
  if (g.cols % 2 == 0 || g.rows < 2) return false;
  const int mid = g.cols / 2;
  if (se != mid || es != (g.rows - 1) * g.cols + mid) return false;
  return !no_tool_key(se, es, g);
}

}  // namespace detail

// Correction parameters for one (se, es) contact pair: the translation from
// the base cell to the first contact and the in-plane rotation that would
// align the tool with the column axis.
inline CorrectionEntry pair_correction(int se, int es, const GridConfig& g) {
  if (se < 0 || es >= g.cell_count() || se >= es) {
    throw std::invalid_argument("contact pair (" + std::to_string(se) + ", " +
                                std::to_string(es) + ") outside grid");
  }
  CorrectionEntry e;
  if (detail::no_tool_key(se, es, g)) {
    e.verdict = Verdict::kNoTool;
    return e;
  }
  if (detail::correct_grip_key(se, es, g)) {
    e.verdict = Verdict::kCorrectGrip;
    return e;
  }

  const CellCoords cse = cell_coords(se, g);
  const CellCoords ces = cell_coords(es, g);
  const CellCoords cb = cell_coords(g.base_index, g);

  e.verdict = Verdict::kCorrection;
  e.dist_x_mm = (cse.col - cb.col) * g.gap_x_mm;
  e.dist_y_mm = (cse.row - cb.row) * g.gap_y_mm;
  const double theta =
      std::atan2((cse.col - ces.col) * g.gap_x_mm, (cse.row - ces.row) * g.gap_y_mm);
  e.rotation = quaternion_about_z(theta);
  return e;
}

class CorrectionTable {
 public:
  using Key = std::pair<int, int>;

  CorrectionTable() = default;

  const GridConfig& grid() const { return grid_; }
  std::size_t size() const { return entries_.size(); }
  const std::map<Key, CorrectionEntry>& entries() const { return entries_; }

  const CorrectionEntry* find(int se, int es) const {
    const auto it = entries_.find({se, es});
    return it == entries_.end() ? nullptr : &it->second;
  }

  std::string to_json() const {
    nlohmann::ordered_json j;
    j["grid"] = {{"rows", grid_.rows},
                 {"cols", grid_.cols},
                 {"gap_x_mm", grid_.gap_x_mm},
                 {"gap_y_mm", grid_.gap_y_mm},
                 {"base_index", grid_.base_index},
                 {"threshold", grid_.threshold}};
    j["entries"] = nlohmann::ordered_json::array();
    for (const auto& [key, e] : entries_) {
      nlohmann::ordered_json row;
      row["se"] = key.first;
      row["es"] = key.second;
      row["verdict"] = to_string(e.verdict);
      if (e.verdict == Verdict::kCorrection) {
        row["dist_x_mm"] = e.dist_x_mm;
        row["dist_y_mm"] = e.dist_y_mm;
        row["qx"] = e.rotation.x;
        row["qy"] = e.rotation.y;
        row["qz"] = e.rotation.z;
        row["qw"] = e.rotation.w;
      }
      j["entries"].push_back(std::move(row));
    }
    return j.dump(2) + "\n";
  }

  static CorrectionTable from_json(const std::string& text) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::invalid_argument(std::string("correction table is not valid JSON: ") +
                                  e.what());
    }
    CorrectionTable t;
    try {
      const auto& g = j.at("grid");
      t.grid_.rows = g.at("rows").get<int>();
      t.grid_.cols = g.at("cols").get<int>();
      t.grid_.gap_x_mm = g.at("gap_x_mm").get<double>();
      t.grid_.gap_y_mm = g.at("gap_y_mm").get<double>();
      t.grid_.base_index = g.at("base_index").get<int>();
      t.grid_.threshold = g.at("threshold").get<uint16_t>();
      t.grid_.validate();
      for (const auto& row : j.at("entries")) {
        const int se = row.at("se").get<int>();
        const int es = row.at("es").get<int>();
        if (se < 0 || es >= t.grid_.cell_count() || se >= es) {
          throw std::invalid_argument("entry key (" + std::to_string(se) + ", " +
                                      std::to_string(es) + ") outside grid");
        }
        CorrectionEntry e;
        e.verdict = verdict_from_string(row.at("verdict").get<std::string>());
        if (e.verdict == Verdict::kCorrection) {
          e.dist_x_mm = row.at("dist_x_mm").get<double>();
          e.dist_y_mm = row.at("dist_y_mm").get<double>();
          e.rotation.x = row.at("qx").get<double>();
          e.rotation.y = row.at("qy").get<double>();
          e.rotation.z = row.at("qz").get<double>();
          e.rotation.w = row.at("qw").get<double>();
        }
        if (!t.entries_.emplace(Key{se, es}, e).second) {
          throw std::invalid_argument("duplicate entry key (" + std::to_string(se) +
                                      ", " + std::to_string(es) + ")");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw std::invalid_argument(std::string("correction table JSON malformed: ") +
                                  e.what());
    }
    return t;
  }

 private:
  GridConfig grid_;
  std::map<Key, CorrectionEntry> entries_;

  friend CorrectionTable build_correction_table(const GridConfig&);
};

// Enumerates every ordered contact pair se < es of the grid.
inline CorrectionTable build_correction_table(const GridConfig& g) {
  g.validate();
  CorrectionTable t;
  t.grid_ = g;
  for (int se = 0; se < g.cell_count(); ++se) {
    for (int es = se + 1; es < g.cell_count(); ++es) {
      t.entries_.emplace(CorrectionTable::Key{se, es}, pair_correction(se, es, g));
    }
  }
  return t;
}

// Indices of cells whose center lies within tol_mm of the infinite line
// through point_mm with direction dir_mm, in grid coordinates.
inline std::vector<int> cells_near_line(Vec2 point_mm, Vec2 dir_mm, double tol_mm,
                                        const GridConfig& g) {
  const double len = std::hypot(dir_mm.x, dir_mm.y);
  if (!(len > 0.0)) {
    throw std::invalid_argument("line direction must be nonzero");
  }
  const double ux = dir_mm.x / len;
  const double uy = dir_mm.y / len;
  std::vector<int> cells;
  for (int i = 0; i < g.cell_count(); ++i) {
    const Vec2 c = cell_position_mm(i, g);
    const double rx = c.x - point_mm.x;
    const double ry = c.y - point_mm.y;
    const double dist = std::abs(ux * ry - uy * rx);
    if (dist <= tol_mm) cells.push_back(i);
  }
  return cells;
}

}  // namespace edgeport::geometry
