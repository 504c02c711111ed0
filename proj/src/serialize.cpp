#include "hf/serialize.hpp"

#include <fstream>

namespace hf {

namespace {

// Fetches j[key], throwing DataError (not nlohmann's generic exception) so
// callers can report which document was malformed.
const Json& require(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) throw DataError(std::string("missing JSON key: ") + key);
  return *it;
}

template <typename T>
T get(const Json& j, const char* key) {
  try {
    return require(j, key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad JSON value for key '") + key + "': " + e.what());
  }
}

}  // namespace

Json matrix_to_json(const MatX& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(i, c));
    rows.push_back(std::move(row));
  }
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  j["data"] = std::move(rows);
  return j;
}

MatX matrix_from_json(const Json& j) {
  const auto nr = get<Eigen::Index>(j, "rows");
  const auto nc = get<Eigen::Index>(j, "cols");
  const Json& data = require(j, "data");
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != nr)
    throw DataError("matrix_from_json: row count mismatch");
  MatX m(nr, nc);
  for (Eigen::Index i = 0; i < nr; ++i) {
    const Json& row = data[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != nc)
      throw DataError("matrix_from_json: column count mismatch");
    for (Eigen::Index c = 0; c < nc; ++c)
      m(i, c) = row[static_cast<std::size_t>(c)].get<Real>();
  }
  return m;
}

Json vector_to_json(const VecX& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

VecX vector_from_json(const Json& j) {
  if (!j.is_array()) throw DataError("vector_from_json: expected an array");
  VecX v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = j[static_cast<std::size_t>(i)].get<Real>();
  return v;
}

Json grid_to_json(const Grid2D& g) {
  Json j;
  j["nx"] = g.nx;
  j["ny"] = g.ny;
  j["origin"] = {g.origin[0], g.origin[1]};
  j["spacing"] = {g.spacing[0], g.spacing[1]};
  return j;
}

Grid2D grid_from_json(const Json& j) {
  Grid2D g;
  g.nx = get<int>(j, "nx");
  g.ny = get<int>(j, "ny");
  const Json& o = require(j, "origin");
  const Json& s = require(j, "spacing");
  if (o.size() != 2 || s.size() != 2)
    throw DataError("grid_from_json: origin/spacing need 2 entries");
  g.origin = Vec2(o[0].get<Real>(), o[1].get<Real>());
  g.spacing = Vec2(s[0].get<Real>(), s[1].get<Real>());
  return g;
}

Json term_to_json(const TermSpec& t) {
  Json j;
  j["first"] = to_string(t.first);
  j["second"] = to_string(t.second);
  j["mixed"] = t.mixed;
  j["alpha"] = t.alpha;
  return j;
}

TermSpec term_from_json(const Json& j) {
  TermSpec t;
  t.first = invariant_from_string(get<std::string>(j, "first"));
  t.second = invariant_from_string(get<std::string>(j, "second"));
  t.mixed = get<bool>(j, "mixed");
  t.alpha = get<Real>(j, "alpha");
  return t;
}

Json spec_to_json(const NodeModelSpec& s) {
  Json terms = Json::array();
  for (const TermSpec& t : s.terms) terms.push_back(term_to_json(t));
  Json j;
  j["terms"] = std::move(terms);
  j["flow_widths"] = s.flow_widths;
  j["n_rk4_steps"] = s.n_rk4_steps;
  j["direction_v"] = {s.dirs.v[0], s.dirs.v[1], s.dirs.v[2]};
  j["direction_w"] = {s.dirs.w[0], s.dirs.w[1], s.dirs.w[2]};
  return j;
}

NodeModelSpec spec_from_json(const Json& j) {
  NodeModelSpec s;
  s.terms.clear();
  for (const Json& t : require(j, "terms")) s.terms.push_back(term_from_json(t));
  s.flow_widths = get<std::vector<int>>(j, "flow_widths");
  s.n_rk4_steps = get<int>(j, "n_rk4_steps");
  const Json& v = require(j, "direction_v");
  const Json& w = require(j, "direction_w");
  if (v.size() != 3 || w.size() != 3)
    throw DataError("spec_from_json: structural directions need 3 entries");
  s.dirs.v = Vec3(v[0].get<Real>(), v[1].get<Real>(), v[2].get<Real>());
  s.dirs.w = Vec3(w[0].get<Real>(), w[1].get<Real>(), w[2].get<Real>());
  return s;
}

Json interp_config_to_json(const InterpolantConfig& c) {
  Json j;
  j["n_freq"] = c.n_freq;
  j["sigma_ff"] = c.sigma_ff;
  j["hidden"] = c.hidden;
  j["epochs"] = c.epochs;
  j["learning_rate"] = c.learning_rate;
  j["record_every"] = c.record_every;
  return j;
}

InterpolantConfig interp_config_from_json(const Json& j) {
  InterpolantConfig c;
  c.n_freq = get<int>(j, "n_freq");
  c.sigma_ff = get<Real>(j, "sigma_ff");
  c.hidden = get<std::vector<int>>(j, "hidden");
  c.epochs = get<int>(j, "epochs");
  c.learning_rate = get<Real>(j, "learning_rate");
  c.record_every = get<int>(j, "record_every");
  return c;
}

Json hyper_config_to_json(const HyperConfig& c) {
  Json j;
  j["n_freq"] = c.n_freq;
  j["sigma_ff"] = c.sigma_ff;
  j["hidden"] = c.hidden;
  j["final_layer_std"] = c.final_layer_std;
  return j;
}

HyperConfig hyper_config_from_json(const Json& j) {
  HyperConfig c;
  c.n_freq = get<int>(j, "n_freq");
  c.sigma_ff = get<Real>(j, "sigma_ff");
  c.hidden = get<std::vector<int>>(j, "hidden");
  c.final_layer_std = get<Real>(j, "final_layer_std");
  return c;
}

Json trainer_config_to_json(const TrainerConfig& c) {
  Json j;
  j["interp"] = interp_config_to_json(c.interp);
  j["hyper"] = hyper_config_to_json(c.hyper);
  j["model"] = spec_to_json(c.spec);
  j["lambda"] = c.lambda;
  j["rebalance"] = c.rebalance;
  j["lr_homogeneous"] = c.lr_homogeneous;
  j["lr_distill"] = c.lr_distill;
  j["lr_uniform"] = c.lr_uniform;
  j["lr_main"] = c.lr_main;
  j["budgets"] = {{"pretrain_homogeneous", c.budgets.pretrain_homogeneous},
                  {"distill", c.budgets.distill},
                  {"pretrain_uniform", c.budgets.pretrain_uniform},
                  {"main", c.budgets.main}};
  j["collocation_stride"] = c.collocation_stride;
  j["record_every"] = c.record_every;
  j["seed"] = c.seed;
  return j;
}

TrainerConfig trainer_config_from_json(const Json& j) {
  TrainerConfig c;
  c.interp = interp_config_from_json(require(j, "interp"));
  c.hyper = hyper_config_from_json(require(j, "hyper"));
  c.spec = spec_from_json(require(j, "model"));
  c.lambda = get<Real>(j, "lambda");
  c.rebalance = get<bool>(j, "rebalance");
  c.lr_homogeneous = get<Real>(j, "lr_homogeneous");
  c.lr_distill = get<Real>(j, "lr_distill");
  c.lr_uniform = get<Real>(j, "lr_uniform");
  c.lr_main = get<Real>(j, "lr_main");
  const Json& b = require(j, "budgets");
  c.budgets.pretrain_homogeneous = get<int>(b, "pretrain_homogeneous");
  c.budgets.distill = get<int>(b, "distill");
  c.budgets.pretrain_uniform = get<int>(b, "pretrain_uniform");
  c.budgets.main = get<int>(b, "main");
  c.collocation_stride = get<int>(j, "collocation_stride");
  c.record_every = get<int>(j, "record_every");
  c.seed = get<std::uint64_t>(j, "seed");
  return c;
}

Json material_to_json(const Material& m) {
  Json j;
  if (const auto* nh = std::get_if<NeoHookeanMaterial>(&m.model)) {
    j["type"] = "neo-hookean";
    j["mu"] = nh->mu;
    j["kappa_bulk"] = nh->kappa_bulk;
  } else {
    const auto& g = std::get<GohMaterial>(m.model);
    j["type"] = "fiber-reinforced";
    j["mu"] = g.mu;
    j["k1"] = g.k1;
    j["k2"] = g.k2;
    j["kappa_disp"] = g.kappa_disp;
    j["fiber_angle"] = g.fiber_angle;
    j["kappa_bulk"] = g.kappa_bulk;
  }
  return j;
}

Material material_from_json(const Json& j) {
  const std::string type = get<std::string>(j, "type");
  if (type == "neo-hookean") {
    NeoHookeanMaterial nh;
    nh.mu = get<Real>(j, "mu");
    nh.kappa_bulk = get<Real>(j, "kappa_bulk");
    return Material{nh};
  }
  if (type == "fiber-reinforced") {
    GohMaterial g;
    g.mu = get<Real>(j, "mu");
    g.k1 = get<Real>(j, "k1");
    g.k2 = get<Real>(j, "k2");
    g.kappa_disp = get<Real>(j, "kappa_disp");
    g.fiber_angle = get<Real>(j, "fiber_angle");
    g.kappa_bulk = get<Real>(j, "kappa_bulk");
    return Material{g};
  }
  throw DataError("material_from_json: unknown material type '" + type + "'");
}

Json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open for reading: " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw DataError("JSON parse failure in " + path + ": " + e.what());
  }
}

void save_json_file(const std::string& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failure: " + path);
}

}  // namespace hf
