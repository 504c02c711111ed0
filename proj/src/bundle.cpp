#include "hf/bundle.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace hf {

namespace fs = std::filesystem;

namespace {

constexpr const char* kStepSchema = "# heterofield-step v1";
constexpr const char* kBoundarySchema = "# heterofield-boundary v1";

std::string step_file_name(int j) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "step_%03d.csv", j);
  return buf;
}

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

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot open for writing: " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open for reading: " + p.string());
  return in;
}

void check_schema(std::ifstream& in, const char* expected, const fs::path& p) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file: " + p.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected)
    throw DataError("unsupported schema line '" + line + "' in " + p.string() +
                    " (expected '" + expected + "')");
}

void write_step_csv(const fs::path& p, const Dataset& d, int j) {
  const bool has_u = !d.displacement.values.empty();
  std::ofstream out = open_out(p);
  out << kStepSchema << "\n";
  out << (has_u ? "node,X1,X2,u1,u2,F11,F12,F21,F22" : "node,X1,X2,F11,F12,F21,F22")
      << "\n";
  const MatX& F = d.defgrad.values[j];
  for (int i = 0; i < d.grid.size(); ++i) {
    const Vec2 X = d.grid.node(i);
    out << i << ',' << format_real(X[0]) << ',' << format_real(X[1]);
    if (has_u) {
      const MatX& u = d.displacement.values[j];
      out << ',' << format_real(u(i, 0)) << ',' << format_real(u(i, 1));
    }
    for (int c = 0; c < 4; ++c) out << ',' << format_real(F(i, c));
    out << "\n";
  }
  if (!out) throw IoError("write failure: " + p.string());
}

void read_step_csv(const fs::path& p, Dataset& d, int j) {
  std::ifstream in = open_in(p);
  check_schema(in, kStepSchema, p);
  std::string header;
  if (!std::getline(in, header)) throw DataError("missing header in " + p.string());
  if (!header.empty() && header.back() == '\r') header.pop_back();
  bool has_u;
  if (header == "node,X1,X2,u1,u2,F11,F12,F21,F22")
    has_u = true;
  else if (header == "node,X1,X2,F11,F12,F21,F22")
    has_u = false;
  else
    throw DataError("unknown column header in " + p.string());
  if (has_u != !d.displacement.values.empty())
    throw DataError("displacement columns inconsistent with manifest in " + p.string());

  const int n = d.grid.size();
  MatX& F = d.defgrad.values[j];
  std::string line;
  int rows = 0;
  const Real ctol = 1e-9;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::size_t expect = has_u ? 9 : 7;
    if (f.size() != expect)
      throw DataError("wrong field count in " + p.string() + ": " + line);
    const int node = parse_int(f[0], p.string());
    if (node != rows)
      throw DataError("rows must be ordered by node index in " + p.string());
    if (node >= n) throw DataError("node index out of range in " + p.string());
    const Vec2 X = d.grid.node(node);
    if (std::abs(parse_real(f[1], p.string()) - X[0]) > ctol ||
        std::abs(parse_real(f[2], p.string()) - X[1]) > ctol)
      throw DataError("node coordinates disagree with the grid in " + p.string());
    std::size_t k = 3;
    if (has_u) {
      MatX& u = d.displacement.values[j];
      u(node, 0) = parse_real(f[k++], p.string());
      u(node, 1) = parse_real(f[k++], p.string());
    }
    for (int c = 0; c < 4; ++c) F(node, c) = parse_real(f[k++], p.string());
    ++rows;
  }
  if (rows != n)
    throw DataError(p.string() + ": expected " + std::to_string(n) + " node rows, got " +
                    std::to_string(rows));
}

void write_boundary_csv(const fs::path& p, const BoundaryData& b) {
  std::ofstream out = open_out(p);
  out << kBoundarySchema << "\n";
  out << "kind,edge,step,node,v1,v2\n";
  out << "lengths,,,," << format_real(b.length_x) << ',' << format_real(b.length_y)
      << "\n";
  for (int j = 0; j < b.n_steps(); ++j)
    out << "force,," << j << ",," << format_real(b.fx[j]) << ',' << format_real(b.fy[j])
        << "\n";
  for (int e = 0; e < 4; ++e) {
    const EdgeId id = static_cast<EdgeId>(e);
    const EdgeCondition& ec = b.edges[e];
    out << "in_loss," << to_string(id) << ",,," << (ec.in_loss ? 1 : 0) << ",\n";
    for (std::size_t j = 0; j < ec.per_node.size(); ++j) {
      const MatX& t = ec.per_node[j];
      for (Eigen::Index q = 0; q < t.rows(); ++q)
        out << "traction," << to_string(id) << ',' << j << ',' << q << ','
            << format_real(t(q, 0)) << ',' << format_real(t(q, 1)) << "\n";
    }
  }
  if (!out) throw IoError("write failure: " + p.string());
}

void read_boundary_csv(const fs::path& p, const Grid2D& grid, int n_steps,
                       BoundaryData& b) {
  std::ifstream in = open_in(p);
  check_schema(in, kBoundarySchema, p);
  std::string line;
  if (!std::getline(in, line)) throw DataError("missing header in " + p.string());

  b.fx = VecX::Zero(n_steps);
  b.fy = VecX::Zero(n_steps);
  std::vector<bool> saw_force(n_steps, false);
  bool saw_lengths = false;

  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 6)
      throw DataError("wrong field count in " + p.string() + ": " + line);
    const std::string& kind = f[0];
    if (kind == "lengths") {
      b.length_x = parse_real(f[4], p.string());
      b.length_y = parse_real(f[5], p.string());
      saw_lengths = true;
    } else if (kind == "force") {
      const int j = parse_int(f[2], p.string());
      if (j < 0 || j >= n_steps)
        throw DataError("force row step out of range in " + p.string());
      b.fx[j] = parse_real(f[4], p.string());
      b.fy[j] = parse_real(f[5], p.string());
      saw_force[j] = true;
    } else if (kind == "in_loss") {
      b.edge(edge_from_string(f[1])).in_loss = parse_int(f[4], p.string()) != 0;
    } else if (kind == "traction") {
      EdgeCondition& ec = b.edge(edge_from_string(f[1]));
      if (ec.per_node.empty()) {
        const EdgeId id = edge_from_string(f[1]);
        const int m_edge = static_cast<int>(edge_node_indices(grid, id).size());
        ec.per_node.assign(n_steps, MatX::Zero(m_edge, 2));
      }
      const int j = parse_int(f[2], p.string());
      const int q = parse_int(f[3], p.string());
      if (j < 0 || j >= n_steps || q < 0 || q >= ec.per_node[j].rows())
        throw DataError("traction row index out of range in " + p.string());
      ec.per_node[j](q, 0) = parse_real(f[4], p.string());
      ec.per_node[j](q, 1) = parse_real(f[5], p.string());
    } else {
      throw DataError("unknown record kind '" + kind + "' in " + p.string());
    }
  }
  if (!saw_lengths) throw DataError("no lengths record in " + p.string());
  for (int j = 0; j < n_steps; ++j)
    if (!saw_force[j])
      throw DataError("missing force record for step " + std::to_string(j) + " in " +
                      p.string());
}

}  // namespace

std::string format_real(Real x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

void write_dataset_bundle(const std::string& dir, const Dataset& data,
                          const BundleInfo& info) {
  data.validate();
  const fs::path root(dir);
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec && !fs::is_directory(root))
    throw IoError("cannot create bundle directory: " + root.string());

  Json manifest;
  manifest["format_version"] = kBundleFormatVersion;
  manifest["tool"] = kToolVersion;
  manifest["kind"] = "dataset";
  manifest["name"] = data.name;
  manifest["seed"] = info.seed;
  manifest["lift"] = to_string(data.lift);
  if (!info.loading_mode.empty()) manifest["loading_mode"] = info.loading_mode;
  manifest["noise_sigma"] = info.noise_sigma;
  manifest["grid"] = grid_to_json(data.grid);
  manifest["steps"] = data.defgrad.steps;
  manifest["has_displacement"] = !data.displacement.values.empty();
  if (!info.snr_db.empty()) manifest["snr_db"] = info.snr_db;
  if (!info.phase.is_null()) manifest["phase"] = info.phase;

  Json files;
  Json step_files = Json::array();
  for (int j = 0; j < data.defgrad.n_steps(); ++j) {
    const std::string name = step_file_name(j);
    write_step_csv(root / name, data, j);
    step_files.push_back(name);
  }
  files["steps"] = std::move(step_files);
  files["boundary"] = "boundary.csv";
  manifest["files"] = std::move(files);
  write_boundary_csv(root / "boundary.csv", data.boundary);
  save_json_file((root / "manifest.json").string(), manifest);
}

Dataset read_dataset_bundle(const std::string& dir, BundleInfo* info) {
  const fs::path root(dir);
  const Json manifest = load_json_file((root / "manifest.json").string());

  const int version = manifest.value("format_version", -1);
  if (version != kBundleFormatVersion)
    throw DataError("unsupported bundle format_version " + std::to_string(version) +
                    " in " + root.string());
  if (manifest.value("kind", "") != "dataset")
    throw DataError("manifest kind is not 'dataset' in " + root.string());

  Dataset d;
  d.name = manifest.value("name", "dataset");
  d.lift = lift_mode_from_string(manifest.at("lift").get<std::string>());
  d.grid = grid_from_json(manifest.at("grid"));
  const auto steps = manifest.at("steps").get<std::vector<Real>>();
  const bool has_u = manifest.value("has_displacement", false);
  const int m = static_cast<int>(steps.size());

  d.defgrad.grid = d.grid;
  d.defgrad.components = 4;
  d.defgrad.steps = steps;
  d.defgrad.values.assign(m, MatX::Zero(d.grid.size(), 4));
  if (has_u) {
    d.displacement.grid = d.grid;
    d.displacement.components = 2;
    d.displacement.steps = steps;
    d.displacement.values.assign(m, MatX::Zero(d.grid.size(), 2));
  }

  const Json& files = manifest.at("files");
  const auto step_files = files.at("steps").get<std::vector<std::string>>();
  if (static_cast<int>(step_files.size()) != m)
    throw DataError("manifest step-file list length mismatch in " + root.string());
  for (int j = 0; j < m; ++j) read_step_csv(root / step_files[j], d, j);

  d.boundary.steps = steps;
  read_boundary_csv(root / files.at("boundary").get<std::string>(), d.grid, m,
                    d.boundary);
  d.validate();

  if (info) {
    info->seed = manifest.value("seed", std::uint64_t{0});
    info->loading_mode = manifest.value("loading_mode", "");
    info->noise_sigma = manifest.value("noise_sigma", 0.0);
    info->snr_db = manifest.contains("snr_db")
                       ? manifest.at("snr_db").get<std::vector<Real>>()
                       : std::vector<Real>{};
    info->phase = manifest.contains("phase") ? manifest.at("phase") : Json();
  }
  return d;
}

}  // namespace hf
