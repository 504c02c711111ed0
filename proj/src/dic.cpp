#include "hf/dic.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "hf/bundle.hpp"
#include "hf/forward_fem.hpp"
#include "hf/kinematics.hpp"

namespace hf {

namespace {

struct FrameRecord {
  int frame = 0;
  Real stretch = 0.0;
  Real fx = 0.0, fy = 0.0;
};

struct PointRow {
  int frame = 0;
  Real x = 0.0, y = 0.0;
  Real u1 = 0.0, u2 = 0.0;
};

Real parse_real(const std::string& s, const std::string& where) {
  if (s.empty()) throw DataError("empty numeric field in " + where);
  char* end = nullptr;
  const Real v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size())
    throw DataError("bad numeric field '" + s + "' in " + where);
  return v;
}

int parse_int(const std::string& s, const std::string& where) {
  const Real v = parse_real(s, where);
  const int i = static_cast<int>(v);
  if (static_cast<Real>(i) != v)
    throw DataError("expected integer field '" + s + "' in " + where);
  return i;
}

std::vector<std::vector<std::string>> read_csv(const std::string& path,
                                               const std::string& expected_header) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected_header)
    throw DataError("unexpected header in " + path + ": got '" + line + "', expected '" +
                    expected_header + "'");
  std::vector<std::vector<std::string>> rows;
  const std::size_t n_fields = split_csv_line(expected_header).size();
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != n_fields)
      throw DataError("wrong field count in " + path + ": " + line);
    rows.push_back(std::move(fields));
  }
  return rows;
}

// Clusters sorted coordinate samples into axis ticks; values closer than tol
// belong to the same tick and are averaged.
std::vector<Real> cluster_axis(std::vector<Real> vals, Real tol) {
  std::sort(vals.begin(), vals.end());
  std::vector<Real> axis;
  std::size_t i = 0;
  while (i < vals.size()) {
    std::size_t j = i + 1;
    Real sum = vals[i];
    while (j < vals.size() && vals[j] - vals[j - 1] < tol) sum += vals[j++];
    axis.push_back(sum / static_cast<Real>(j - i));
    i = j;
  }
  return axis;
}

// Uniform spacing check; returns the mean spacing.
Real uniform_spacing(const std::vector<Real>& axis, const char* dir) {
  if (axis.size() < 3)
    throw DataError(std::string("measurement grid needs at least 3 ticks along ") + dir);
  Real mean = (axis.back() - axis.front()) / static_cast<Real>(axis.size() - 1);
  for (std::size_t i = 0; i + 1 < axis.size(); ++i) {
    const Real d = axis[i + 1] - axis[i];
    if (std::abs(d - mean) > 1e-6 * mean + 1e-12)
      throw DataError(std::string("measurement grid is not uniformly spaced along ") +
                      dir);
  }
  return mean;
}

int axis_index(const std::vector<Real>& axis, Real v, Real tol, const char* dir) {
  const auto it = std::lower_bound(axis.begin(), axis.end(), v - tol);
  if (it == axis.end() || std::abs(*it - v) > tol)
    throw DataError(std::string("point does not lie on the inferred grid along ") + dir);
  return static_cast<int>(it - axis.begin());
}

// Fills missing nodes by repeated averaging over already-known 4-neighbors.
// Sweeps run in node order, so the result is deterministic.
void fill_missing(const Grid2D& grid, MatX& u, std::vector<char>& present) {
  while (true) {
    int filled = 0, remaining = 0;
    for (int iy = 0; iy < grid.ny; ++iy) {
      for (int ix = 0; ix < grid.nx; ++ix) {
        const int i = grid.index(ix, iy);
        if (present[i]) continue;
        Real s1 = 0, s2 = 0;
        int n = 0;
        const int nb[4][2] = {{ix - 1, iy}, {ix + 1, iy}, {ix, iy - 1}, {ix, iy + 1}};
        for (const auto& q : nb) {
          if (q[0] < 0 || q[0] >= grid.nx || q[1] < 0 || q[1] >= grid.ny) continue;
          const int k = grid.index(q[0], q[1]);
          if (!present[k]) continue;
          s1 += u(k, 0);
          s2 += u(k, 1);
          ++n;
        }
        if (n > 0) {
          u(i, 0) = s1 / n;
          u(i, 1) = s2 / n;
          present[i] = 1;
          ++filled;
        } else {
          ++remaining;
        }
      }
    }
    if (remaining == 0) return;
    if (filled == 0) throw DataError("cannot fill dropouts: a frame has no usable data");
  }
}

}  // namespace

void DicIngestConfig::validate() const {
  loading_mode_from_string(loading_mode);  // throws on unknown labels
  if (!(max_missing_fraction >= 0.0 && max_missing_fraction < 1.0))
    throw ConfigurationError("DicIngestConfig: max_missing_fraction must be in [0, 1)");
  for (std::size_t i = 0; i + 1 < target_stretches.size(); ++i)
    if (!(target_stretches[i] < target_stretches[i + 1]))
      throw ConfigurationError("DicIngestConfig: target stretches must be increasing");
  for (Real t : target_stretches)
    if (!(t > 1.0))
      throw ConfigurationError("DicIngestConfig: target stretches must exceed 1");
  if (crop && !(crop_rect.x1 > crop_rect.x0 && crop_rect.y1 > crop_rect.y0))
    throw ConfigurationError("DicIngestConfig: empty crop rectangle");
}

Dataset ingest_dic(const std::string& displacements_csv, const std::string& frames_csv,
                   const DicIngestConfig& cfg) {
  cfg.validate();

  // Frame table.
  std::vector<FrameRecord> frames;
  for (const auto& f : read_csv(frames_csv, "frame,stretch,fx,fy")) {
    FrameRecord r;
    r.frame = parse_int(f[0], frames_csv);
    r.stretch = parse_real(f[1], frames_csv);
    r.fx = parse_real(f[2], frames_csv);
    r.fy = parse_real(f[3], frames_csv);
    frames.push_back(r);
  }
  if (frames.empty()) throw DataError("no frames in " + frames_csv);
  for (std::size_t i = 0; i + 1 < frames.size(); ++i)
    if (!(frames[i].stretch < frames[i + 1].stretch))
      throw DataError("frame stretches must be strictly increasing in " + frames_csv);

  // Frame selection.
  std::vector<FrameRecord> selected;
  if (cfg.target_stretches.empty()) {
    for (const FrameRecord& r : frames)
      if (r.stretch > 1.0) selected.push_back(r);
    if (selected.empty())
      throw DataError("no frames with stretch > 1 in " + frames_csv);
  } else {
    for (Real target : cfg.target_stretches) {
      const FrameRecord* best = &frames.front();
      for (const FrameRecord& r : frames)
        if (std::abs(r.stretch - target) < std::abs(best->stretch - target)) best = &r;
      if (!selected.empty() && selected.back().frame == best->frame)
        throw DataError("two target stretches map to the same frame " +
                        std::to_string(best->frame));
      selected.push_back(*best);
    }
    for (std::size_t i = 0; i + 1 < selected.size(); ++i)
      if (!(selected[i].stretch < selected[i + 1].stretch))
        throw DataError("selected frames are not increasing in stretch");
  }
  const int m = static_cast<int>(selected.size());

  // Point rows of the selected frames, crop applied.
  std::vector<PointRow> points;
  Real span = 0.0;
  {
    for (const auto& f : read_csv(displacements_csv, "frame,X1,X2,u1,u2")) {
      PointRow p;
      p.frame = parse_int(f[0], displacements_csv);
      p.x = parse_real(f[1], displacements_csv);
      p.y = parse_real(f[2], displacements_csv);
      p.u1 = parse_real(f[3], displacements_csv);
      p.u2 = parse_real(f[4], displacements_csv);
      bool known = false;
      for (const FrameRecord& r : frames) known = known || r.frame == p.frame;
      if (!known)
        throw DataError("displacement row references unknown frame " +
                        std::to_string(p.frame) + " in " + displacements_csv);
      span = std::max({span, std::abs(p.x), std::abs(p.y)});
      points.push_back(p);
    }
  }
  const Real tol = 1e-6 * std::max<Real>(1.0, span);
  if (cfg.crop) {
    std::erase_if(points, [&](const PointRow& p) {
      return !cfg.crop_rect.contains(p.x, p.y, tol);
    });
  }
  const auto is_selected = [&](int frame) {
    for (const FrameRecord& r : selected)
      if (r.frame == frame) return true;
    return false;
  };

  // Grid inference from the selected frames.
  std::vector<Real> xs, ys;
  for (const PointRow& p : points) {
    if (!is_selected(p.frame)) continue;
    xs.push_back(p.x);
    ys.push_back(p.y);
  }
  if (xs.empty())
    throw DataError("no displacement rows for the selected frames in " +
                    displacements_csv);
  const std::vector<Real> ax = cluster_axis(std::move(xs), tol);
  const std::vector<Real> ay = cluster_axis(std::move(ys), tol);
  Grid2D grid;
  grid.nx = static_cast<int>(ax.size());
  grid.ny = static_cast<int>(ay.size());
  grid.origin = Vec2(ax.front(), ay.front());
  grid.spacing = Vec2(uniform_spacing(ax, "X1"), uniform_spacing(ay, "X2"));
  grid.validate();
  const int n = grid.size();

  // Per selected frame: scatter rows onto the grid, then audit the gaps.
  FieldSnapshotSeries u;
  u.grid = grid;
  u.components = 2;
  std::vector<std::vector<char>> present(m, std::vector<char>(n, 0));
  for (int j = 0; j < m; ++j) {
    u.steps.push_back(selected[j].stretch);
    u.values.push_back(MatX::Zero(n, 2));
  }
  for (const PointRow& p : points) {
    int j = -1;
    for (int k = 0; k < m; ++k)
      if (selected[k].frame == p.frame) j = k;
    if (j < 0) continue;
    const int ix = axis_index(ax, p.x, tol, "X1");
    const int iy = axis_index(ay, p.y, tol, "X2");
    const int i = grid.index(ix, iy);
    if (present[j][i])
      throw DataError("duplicate measurement for frame " + std::to_string(p.frame) +
                      ", node (" + std::to_string(ix) + ", " + std::to_string(iy) + ")");
    u.values[j](i, 0) = p.u1;
    u.values[j](i, 1) = p.u2;
    present[j][i] = 1;
  }

  std::ostringstream gap_report;
  int gap_examples = 0;
  bool too_many = false;
  for (int j = 0; j < m; ++j) {
    const int missing = n - static_cast<int>(std::count(present[j].begin(),
                                                        present[j].end(), char(1)));
    if (missing == 0) continue;
    if (static_cast<Real>(missing) > cfg.max_missing_fraction * n) {
      too_many = true;
      gap_report << "frame " << selected[j].frame << ": " << missing << "/" << n
                 << " grid points missing;";
      for (int i = 0; i < n && gap_examples < 8; ++i) {
        if (present[j][i]) continue;
        const Vec2 X = grid.node(i);
        gap_report << " (" << format_real(X[0]) << ", " << format_real(X[1]) << ")";
        ++gap_examples;
      }
      gap_report << "\n";
    }
  }
  if (too_many)
    throw DataError("too many dropouts (limit " +
                    format_real(cfg.max_missing_fraction) + " of nodes per frame):\n" +
                    gap_report.str());
  for (int j = 0; j < m; ++j) fill_missing(grid, u.values[j], present[j]);

  // Assemble the dataset.
  Dataset d;
  d.name = cfg.name;
  d.grid = grid;
  d.lift = cfg.lift;
  d.displacement = u;
  d.defgrad = central_diff_defgrad(u);

  BoundaryData& b = d.boundary;
  b.length_x = grid.length_x();
  b.length_y = grid.length_y();
  for (int j = 0; j < m; ++j) {
    b.steps.push_back(selected[j].stretch);
  }
  b.fx = VecX(m);
  b.fy = VecX(m);
  for (int j = 0; j < m; ++j) {
    b.fx[j] = selected[j].fx;
    b.fy[j] = selected[j].fy;
  }
  const LoadingMode mode = loading_mode_from_string(cfg.loading_mode);
  const bool grip_x = mode != LoadingMode::UniaxialY;
  const bool grip_y = mode != LoadingMode::UniaxialX;
  for (int e = 0; e < 4; ++e) {
    const EdgeId id = static_cast<EdgeId>(e);
    const bool gripped = (id == EdgeId::XMin || id == EdgeId::XMax) ? grip_x : grip_y;
    EdgeCondition& ec = b.edge(id);
    ec.in_loss = !gripped;
    if (!gripped) {
      // Free edges are traction-free; record that as explicit per-node zeros.
      const int m_edge = static_cast<int>(edge_node_indices(grid, id).size());
      ec.per_node.assign(m, MatX::Zero(m_edge, 2));
    }
  }
  d.validate();
  return d;
}

}  // namespace hf
