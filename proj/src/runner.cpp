#include "hf/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "hf/bundle.hpp"
#include "hf/forward_fem.hpp"
#include "hf/kinematics.hpp"
#include "hf/noise.hpp"
#include "hf/raster.hpp"
#include "hf/rng.hpp"
#include "hf/stress_pipeline.hpp"

namespace hf {

namespace fs = std::filesystem;

namespace {

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec && !fs::is_directory(p))
    throw IoError("cannot create output directory: " + p.string());
}

void write_run_manifest(const fs::path& out, const std::string& command,
                        std::uint64_t seed, Json options) {
  Json j;
  j["format_version"] = 1;
  j["tool"] = kToolVersion;
  j["kind"] = "run-manifest";
  j["command"] = command;
  j["seed"] = seed;
  j["options"] = std::move(options);
  save_json_file((out / "run_manifest.json").string(), j);
}

Real parse_csv_real(const std::string& s, const std::string& where) {
  char* end = nullptr;
  const Real v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw DataError("bad numeric field '" + s + "' in " + where);
  return v;
}

// In-plane probe deformation for a named stretch path.
Mat2 probe_deformation(const std::string& mode, Real lambda) {
  Mat2 F = Mat2::Identity();
  if (mode == "equibiaxial") {
    F(0, 0) = F(1, 1) = lambda;
  } else if (mode == "uniaxial-x") {
    F(0, 0) = lambda;
  } else if (mode == "uniaxial-y") {
    F(1, 1) = lambda;
  } else {
    throw ConfigurationError("unknown probe mode '" + mode +
                             "' (equibiaxial | uniaxial-x | uniaxial-y)");
  }
  return F;
}

}  // namespace

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

GenerateOutcome run_generate(const GenerateOptions& opt) {
  if (opt.out.empty()) throw ConfigurationError("generate: output directory required");
  Preset preset = make_preset(opt.preset);
  if (opt.elements > 0) preset.elements = opt.elements;
  if (opt.noise_sigma >= 0.0) preset.noise_sigma = opt.noise_sigma;
  if (preset.elements < 2)
    throw ConfigurationError("generate: need at least 2 elements per direction");

  const fs::path out(opt.out);
  ensure_dir(out);

  const Grid2D grid = Grid2D::unit_square(preset.elements + 1, preset.elements + 1);
  PhaseMap phases;
  std::string phase_source;
  if (opt.mask_image.empty()) {
    phases = phase_map_from_labeler(grid, preset.materials, preset.label_of);
    phase_source = "preset:" + preset.name;
  } else {
    const GrayImage img = read_pgm(opt.mask_image);
    phases.materials = preset.materials;
    phases.element_label =
        labels_from_image(img, grid, static_cast<int>(preset.materials.size()));
    phases.validate(grid);
    phase_source = "mask:" + fs::path(opt.mask_image).filename().string();
  }
  const int n_labels = static_cast<int>(phases.materials.size());

  // Ground-truth record: label mask plus the per-element stiffness table.
  const fs::path truth = out / "truth";
  ensure_dir(truth);
  write_pgm((truth / "mask.pgm").string(),
            mask_to_image(grid, phases.element_label, n_labels, 8));
  {
    std::ofstream el(truth / "elements.csv");
    if (!el) throw IoError("cannot open for writing: " + (truth / "elements.csv").string());
    el << "# heterofield-truth v1\n";
    el << "element,ex,ey,label,shear_modulus\n";
    const int nex = grid.nx - 1;
    for (std::size_t e = 0; e < phases.element_label.size(); ++e) {
      const int label = phases.element_label[e];
      el << e << ',' << (e % nex) << ',' << (e / nex) << ',' << label << ','
         << format_real(phases.materials[label].shear_modulus()) << "\n";
    }
  }

  Json phase_record;
  phase_record["source"] = phase_source;
  phase_record["n_labels"] = n_labels;
  Json mats = Json::array();
  for (const Material& m : phases.materials) mats.push_back(material_to_json(m));
  phase_record["materials"] = std::move(mats);
  phase_record["mask_file"] = "mask.pgm";

  GenerateOutcome outcome;
  for (LoadingMode mode : preset.programs) {
    LoadingProgram program;
    program.mode = mode;
    program.lambda_steps = preset.lambda_steps;

    const ForwardResult fwd = solve_forward(grid, phases, program);

    Dataset data;
    data.name = preset.name + "-" + to_string(mode);
    data.grid = grid;
    data.lift = LiftMode::PlaneStrain;
    data.displacement = fwd.displacement;
    data.defgrad = fwd.defgrad;
    data.boundary = fwd.boundary;

    BundleInfo info;
    info.seed = opt.seed;
    info.loading_mode = to_string(mode);
    info.noise_sigma = preset.noise_sigma;
    info.phase = phase_record;

    if (preset.noise_sigma > 0.0) {
      // Displacements and gradients carry independent noise of the same
      // level, mimicking separate measurement channels; forces stay exact.
      const FieldSnapshotSeries u_clean = data.displacement;
      data.displacement = add_noise(
          u_clean, preset.noise_sigma, stage_seed(opt.seed, data.name + "/noise-u"));
      data.defgrad = add_noise(data.defgrad, preset.noise_sigma,
                               stage_seed(opt.seed, data.name + "/noise-F"));
      for (int j = 0; j < u_clean.n_steps(); ++j)
        info.snr_db.push_back(snr(data.displacement, u_clean, j).decibels);
    }

    const fs::path dir = out / data.name;
    write_dataset_bundle(dir.string(), data, info);
    write_pgm((dir / "mask.pgm").string(),
              mask_to_image(grid, phases.element_label, n_labels, 8));
    outcome.bundles.push_back(dir.string());
    outcome.snr_db.push_back(info.snr_db);
  }

  Json options;
  options["preset"] = opt.preset;
  options["elements"] = preset.elements;
  options["noise_sigma"] = preset.noise_sigma;
  options["mask_image"] = opt.mask_image;
  options["bundles"] = outcome.bundles;
  write_run_manifest(out, "generate", opt.seed, std::move(options));
  return outcome;
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

int stage_exit_code(const std::string& stage) {
  const int idx = stage_index(stage);
  return idx < 0 ? 1 : 10 + idx;
}

TrainOutcome run_train(const TrainOptions& opt) {
  if (opt.out.empty()) throw ConfigurationError("train: output directory required");
  if (opt.data.empty()) throw ConfigurationError("train: at least one dataset required");
  const fs::path out(opt.out);
  ensure_dir(out);

  std::vector<Dataset> datasets;
  for (const std::string& dir : opt.data) datasets.push_back(read_dataset_bundle(dir));
  for (std::size_t a = 0; a < datasets.size(); ++a)
    for (std::size_t b = a + 1; b < datasets.size(); ++b)
      if (datasets[a].name == datasets[b].name)
        throw ConfigurationError("train: duplicate dataset name '" + datasets[a].name +
                                 "'");

  const auto& stages = stage_names();
  int first = 0;
  int last = static_cast<int>(stages.size()) - 1;
  if (!opt.start_stage.empty()) {
    first = stage_index(opt.start_stage);
    if (first < 0)
      throw ConfigurationError("train: unknown stage '" + opt.start_stage + "'");
  }
  if (!opt.stop_stage.empty()) {
    last = stage_index(opt.stop_stage);
    if (last < 0)
      throw ConfigurationError("train: unknown stage '" + opt.stop_stage + "'");
  }
  if (first > last)
    throw ConfigurationError("train: start stage is after the stop stage");

  Json options;
  options["data"] = opt.data;
  options["config"] = trainer_config_to_json(opt.config);
  options["start_stage"] = opt.start_stage;
  options["stop_stage"] = opt.stop_stage;
  write_run_manifest(out, "train", opt.config.seed, std::move(options));

  InverseTrainer trainer(std::move(datasets), opt.config);
  std::vector<StageReport> reports;
  if (first > 0) {
    const std::string prev = stages[first - 1];
    const fs::path ck = out / ("checkpoint_" + prev + ".json");
    if (!fs::exists(ck))
      throw ConfigurationError("train: resume needs " + ck.string());
    const TrainingCheckpoint c = load_checkpoint(ck.string());
    if (c.stage != prev)
      throw ConfigurationError("train: checkpoint " + ck.string() +
                               " holds stage '" + c.stage + "'");
    if (trainer_config_to_json(c.config) != trainer_config_to_json(opt.config))
      throw ConfigurationError(
          "train: checkpoint configuration differs from the requested one; "
          "resuming would not reproduce the run");
    restore_into(trainer, c);
    reports = c.reports;
  }

  TrainOutcome outcome;
  for (int idx = first; idx <= last; ++idx) {
    const std::string& stage = stages[idx];
    StageReport rep;
    try {
      switch (idx) {
        case 0: rep = trainer.fit_interpolants(); break;
        case 1: rep = trainer.pretrain_homogeneous(); break;
        case 2: rep = trainer.distill(); break;
        case 3: rep = trainer.pretrain_uniform_stress(); break;
        case 4: rep = trainer.train_main(); break;
        default: throw ConfigurationError("train: bad stage index");
      }
    } catch (const Error& e) {
      outcome.exit_code = stage_exit_code(stage);
      outcome.failed_stage = stage;
      outcome.message = e.what();
      outcome.reports = reports;
      return outcome;  // the last-good checkpoint stays on disk
    }
    reports.push_back(rep);
    outcome.last = make_checkpoint(trainer, stage, reports);
    save_checkpoint((out / ("checkpoint_" + stage + ".json")).string(), outcome.last);
    save_checkpoint((out / "checkpoint_latest.json").string(), outcome.last);
    write_loss_history_csv((out / "loss_history.csv").string(), reports);
  }
  outcome.reports = reports;
  return outcome;
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

namespace {

// Renders the stiffness-map CSV (with its "# grid nx ny" comment) as a
// heatmap raster.  Reading back the CSV keeps --replot bit-identical.
void render_map_png(const fs::path& csv, const fs::path& png) {
  std::ifstream in(csv);
  if (!in) throw IoError("cannot open for reading: " + csv.string());
  std::string line;
  std::getline(in, line);
  if (line.rfind("# heterofield-map", 0) != 0)
    throw DataError("not a stiffness-map CSV: " + csv.string());
  std::getline(in, line);
  int nx = 0, ny = 0;
  if (std::sscanf(line.c_str(), "# grid %d %d", &nx, &ny) != 2)
    throw DataError("missing grid comment in " + csv.string());
  std::getline(in, line);  // column header
  std::vector<Real> xs, ys, vs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    if (f.size() != 3) throw DataError("bad row in " + csv.string());
    xs.push_back(parse_csv_real(f[0], csv.string()));
    ys.push_back(parse_csv_real(f[1], csv.string()));
    vs.push_back(parse_csv_real(f[2], csv.string()));
  }
  if (static_cast<int>(vs.size()) != nx * ny)
    throw DataError("row count disagrees with the grid comment in " + csv.string());
  Grid2D grid;
  grid.nx = nx;
  grid.ny = ny;
  grid.origin = Vec2(xs[0], ys[0]);
  grid.spacing = Vec2(xs[1] - xs[0], ys[static_cast<std::size_t>(nx)] - ys[0]);
  VecX values(nx * ny);
  for (int i = 0; i < nx * ny; ++i) values[i] = vs[static_cast<std::size_t>(i)];
  write_png(png.string(), heatmap(grid, values, 8));
}

// Renders probe CSVs as stretch-stress polylines (column y_col of each file).
void render_probes_png(const std::vector<fs::path>& csvs, int y_col,
                       const fs::path& png) {
  std::vector<MatX> series;
  for (const fs::path& csv : csvs) {
    std::ifstream in(csv);
    if (!in) throw IoError("cannot open for reading: " + csv.string());
    std::string line;
    std::getline(in, line);
    if (line.rfind("# heterofield-probe", 0) != 0)
      throw DataError("not a probe CSV: " + csv.string());
    std::getline(in, line);  // header
    std::vector<std::pair<Real, Real>> rows;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = split_csv_line(line);
      if (f.size() != 5) throw DataError("bad row in " + csv.string());
      rows.push_back({parse_csv_real(f[0], csv.string()),
                      parse_csv_real(f[static_cast<std::size_t>(y_col)], csv.string())});
    }
    MatX s(static_cast<Eigen::Index>(rows.size()), 2);
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      s(i, 0) = rows[static_cast<std::size_t>(i)].first;
      s(i, 1) = rows[static_cast<std::size_t>(i)].second;
    }
    series.push_back(std::move(s));
  }
  if (!series.empty()) write_png(png.string(), plot_curves(series, 480, 360));
}

}  // namespace

void run_evaluate(const EvaluateOptions& opt) {
  if (opt.out.empty()) throw ConfigurationError("evaluate: output directory required");
  const fs::path out(opt.out);
  ensure_dir(out);

  const int y_col = opt.probe_mode == "uniaxial-y" ? 4 : 1;  // P22 else P11
  if (opt.replot) {
    // Redraw every raster from the CSVs already in the output directory.
    if (fs::exists(out / "stiffness_map.csv"))
      render_map_png(out / "stiffness_map.csv", out / "stiffness_map.png");
    std::vector<fs::path> probe_csvs;
    for (int k = 0;; ++k) {
      const fs::path p = out / ("probe_" + std::to_string(k) + ".csv");
      if (!fs::exists(p)) break;
      probe_csvs.push_back(p);
    }
    if (!probe_csvs.empty())
      render_probes_png(probe_csvs, y_col, out / "probes.png");
    return;
  }

  const TrainingCheckpoint ckpt = load_checkpoint(opt.checkpoint);
  const NodeModelSpec& spec = ckpt.config.spec;

  // Material field: the trained hyper-network, or the homogeneous parameter
  // vector for checkpoints taken before the distillation stage.
  const bool constant_field = ckpt.field_params.size() == 0;
  if (constant_field && ckpt.theta_bar.size() == 0)
    throw ConfigurationError(
        "evaluate: checkpoint holds no material field yet (stage '" + ckpt.stage + "')");
  HyperNetworkField field;
  if (!constant_field) field = field_from_checkpoint(ckpt);

  const auto theta_batch = [&](const MatX& coords) -> MatX {
    if (!constant_field) return field.eval(coords);
    return ckpt.theta_bar.replicate(1, coords.rows());
  };

  // Optional datasets for residual/force exports.
  std::vector<Dataset> datasets;
  for (const std::string& dir : opt.data) datasets.push_back(read_dataset_bundle(dir));

  LiftMode lift = LiftMode::PlaneStrain;
  if (!opt.lift.empty())
    lift = lift_mode_from_string(opt.lift);
  else if (!datasets.empty())
    lift = datasets.front().lift;

  // Query grid for the stiffness map; doubles as the probe domain.
  Grid2D map_grid;
  if (!datasets.empty() && opt.map_nodes == 0) {
    map_grid = datasets.front().grid;
  } else {
    const int nodes = opt.map_nodes > 0 ? opt.map_nodes : 51;
    map_grid = Grid2D::unit_square(nodes, nodes);
  }

  Json options;
  options["checkpoint"] = opt.checkpoint;
  options["data"] = opt.data;
  options["probe_mode"] = opt.probe_mode;
  options["map_stretch"] = opt.map_stretch;
  options["lift"] = to_string(lift);
  Json probes_json = Json::array();
  for (Eigen::Index k = 0; k < opt.probes.rows(); ++k)
    probes_json.push_back({opt.probes(k, 0), opt.probes(k, 1)});
  options["probes"] = std::move(probes_json);
  write_run_manifest(out, "evaluate", ckpt.config.seed, std::move(options));

  // --- stiffness map: in-plane trace of P under uniform equibiaxial stretch.
  {
    const MatX coords = map_grid.node_coords();
    const MatX theta = theta_batch(coords);
    const Mat2 F_map = probe_deformation("equibiaxial", opt.map_stretch);
    std::ofstream csv(out / "stiffness_map.csv");
    if (!csv)
      throw IoError("cannot open for writing: " + (out / "stiffness_map.csv").string());
    csv << "# heterofield-map v1\n";
    csv << "# grid " << map_grid.nx << " " << map_grid.ny << "\n";
    csv << "X1,X2,trP\n";
    for (int i = 0; i < map_grid.size(); ++i) {
      const PointStress ps = stress_at_point(spec, lift, theta.col(i), F_map);
      csv << format_real(coords(i, 0)) << ',' << format_real(coords(i, 1)) << ','
          << format_real(ps.P(0, 0) + ps.P(1, 1)) << "\n";
    }
  }
  render_map_png(out / "stiffness_map.csv", out / "stiffness_map.png");

  // --- probe stress-stretch curves.
  const Vec2 lo = map_grid.origin;
  const Vec2 hi = map_grid.origin +
                  Vec2(map_grid.length_x(), map_grid.length_y());
  std::vector<fs::path> probe_csvs;
  for (Eigen::Index k = 0; k < opt.probes.rows(); ++k) {
    const Vec2 X = opt.probes.row(k).transpose();
    if (X[0] < lo[0] || X[0] > hi[0] || X[1] < lo[1] || X[1] > hi[1])
      throw ConfigurationError("evaluate: probe (" + format_real(X[0]) + ", " +
                               format_real(X[1]) + ") lies outside the domain");
    const VecX theta =
        constant_field ? ckpt.theta_bar : field.eval_point(X);
    const fs::path csv_path = out / ("probe_" + std::to_string(k) + ".csv");
    std::ofstream csv(csv_path);
    if (!csv) throw IoError("cannot open for writing: " + csv_path.string());
    csv << "# heterofield-probe v1\n";
    csv << "lambda,P11,P12,P21,P22\n";
    for (int s = 0; s < opt.probe_samples; ++s) {
      const Real lambda =
          1.0 + (opt.probe_max_stretch - 1.0) * s /
                    std::max(opt.probe_samples - 1, 1);
      const Mat2 F = probe_deformation(opt.probe_mode, lambda);
      const PointStress ps = stress_at_point(spec, lift, theta, F);
      csv << format_real(lambda) << ',' << format_real(ps.P(0, 0)) << ','
          << format_real(ps.P(0, 1)) << ',' << format_real(ps.P(1, 0)) << ','
          << format_real(ps.P(1, 1)) << "\n";
    }
    probe_csvs.push_back(csv_path);
  }
  if (!probe_csvs.empty()) render_probes_png(probe_csvs, y_col, out / "probes.png");

  // --- per-dataset exports: boundary-force comparison and equilibrium
  // stress/divergence fields at the data steps.
  if (!datasets.empty()) {
    std::ofstream forces(out / "boundary_forces.csv");
    if (!forces)
      throw IoError("cannot open for writing: " + (out / "boundary_forces.csv").string());
    forces << "# heterofield-forces v1\n";
    forces << "dataset,step,lambda,fx_data,fx_model,fy_data,fy_model\n";

    for (const Dataset& d : datasets) {
      const InterpolantState* interp_state = nullptr;
      for (const InterpolantState& s : ckpt.interpolants)
        if (s.dataset == d.name) interp_state = &s;
      if (!interp_state)
        throw ConfigurationError("evaluate: checkpoint has no interpolant for '" +
                                 d.name + "'");
      const ContinuousFieldModel interp(ckpt.config.interp, interp_state->frequencies,
                                        interp_state->params);

      const MatX coords = d.grid.node_coords();
      const int n = d.grid.size();

      // Material parameters and their spatial rates at the data nodes.
      MatX theta;
      std::array<MatX, 2> theta_dot;
      if (constant_field) {
        theta = ckpt.theta_bar.replicate(1, n);
        theta_dot[0] = MatX::Zero(theta.rows(), n);
        theta_dot[1] = MatX::Zero(theta.rows(), n);
      } else {
        Mlp::Tape tape;
        field.forward(coords, true, tape, theta, theta_dot);
      }

      for (int j = 0; j < d.defgrad.n_steps(); ++j) {
        const Real t = d.defgrad.steps[j];
        std::ofstream scsv(out / ("stress_" + d.name + "_step" + std::to_string(j) +
                                  ".csv"));
        scsv << "# heterofield-stressfield v1\n";
        scsv << "# grid " << d.grid.nx << " " << d.grid.ny << "\n";
        scsv << "X1,X2,P11,P12,P21,P22,div1,div2\n";
        MatX P_nodes(n, 4);
        VecX div_norm(n);
        for (int i = 0; i < n; ++i) {
          Mat2 F;
          std::array<Mat2, 2> dF;
          interp.eval_with_gradient(coords.row(i).transpose(), t, F, dF);
          const std::array<VecX, 2> tg = {theta_dot[0].col(i), theta_dot[1].col(i)};
          const PointStress ps =
              stress_at_point(spec, lift, theta.col(i), F, &dF, &tg);
          P_nodes.row(i) << ps.P(0, 0), ps.P(0, 1), ps.P(1, 0), ps.P(1, 1);
          div_norm[i] = ps.divergence.norm();
          scsv << format_real(coords(i, 0)) << ',' << format_real(coords(i, 1)) << ','
               << format_real(ps.P(0, 0)) << ',' << format_real(ps.P(0, 1)) << ','
               << format_real(ps.P(1, 0)) << ',' << format_real(ps.P(1, 1)) << ','
               << format_real(ps.divergence[0]) << ','
               << format_real(ps.divergence[1]) << "\n";
        }
        if (j == d.defgrad.n_steps() - 1)
          write_png((out / ("residual_" + d.name + ".png")).string(),
                    heatmap(d.grid, div_norm, 8));

        // Model resultants on the force-carrying edges by the trapezoid rule
        // over the recovered nodal stress rows.
        const auto edge_force = [&](EdgeId e) {
          const std::vector<int> idx = edge_node_indices(d.grid, e);
          MatX P_edge(static_cast<Eigen::Index>(idx.size()), 4);
          for (std::size_t q = 0; q < idx.size(); ++q)
            P_edge.row(static_cast<Eigen::Index>(q)) = P_nodes.row(idx[q]);
          return edge_resultant(d.grid, e, P_edge);
        };
        const Real fx_model = edge_force(EdgeId::XMax)[0];
        const Real fy_model = edge_force(EdgeId::YMax)[1];
        forces << d.name << ',' << j << ',' << format_real(t) << ','
               << format_real(d.boundary.fx[j]) << ',' << format_real(fx_model) << ','
               << format_real(d.boundary.fy[j]) << ',' << format_real(fy_model)
               << "\n";
      }
    }
  }
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

std::vector<TermSpec> registry_subset(const std::string& name) {
  std::vector<TermSpec> terms = default_registry();
  const auto references = [](const TermSpec& t, InvariantId id) {
    return t.first == id || (t.mixed && t.second == id);
  };
  if (name == "full") return terms;
  if (name == "isotropic") {
    std::erase_if(terms, [&](const TermSpec& t) {
      return references(t, InvariantId::I4v) || references(t, InvariantId::I4w);
    });
    return terms;
  }
  if (name == "no-mixed") {
    std::erase_if(terms, [](const TermSpec& t) { return t.mixed; });
    return terms;
  }
  throw ConfigurationError("unknown registry subset '" + name +
                           "' (full | isotropic | no-mixed)");
}

void run_ablate(const AblateOptions& opt) {
  if (opt.out.empty()) throw ConfigurationError("ablate: output directory required");
  if (opt.data.empty()) throw ConfigurationError("ablate: at least one dataset required");
  const fs::path out(opt.out);
  ensure_dir(out);

  std::vector<Dataset> datasets;
  for (const std::string& dir : opt.data) datasets.push_back(read_dataset_bundle(dir));

  const auto axis_or = [&](const char* key, Json fallback) {
    return opt.grid.contains(key) ? opt.grid.at(key) : Json::array({std::move(fallback)});
  };
  const Json terms_axis = axis_or("terms", "full");
  const Json widths_axis = axis_or("flow_widths", Json(opt.base.spec.flow_widths));
  const Json hidden_axis = axis_or("hyper_hidden", Json(opt.base.hyper.hidden));
  const Json rk4_axis = axis_or("n_rk4_steps", opt.base.spec.n_rk4_steps);
  const Json seeds_axis = axis_or("seeds", opt.base.seed);

  Json options;
  options["data"] = opt.data;
  options["base"] = trainer_config_to_json(opt.base);
  options["grid"] = opt.grid;
  write_run_manifest(out, "ablate", opt.base.seed, std::move(options));

  std::ofstream csv(out / "ablation.csv");
  if (!csv) throw IoError("cannot open for writing: " + (out / "ablation.csv").string());
  csv << "# heterofield-ablation v1\n";
  csv << "variant,terms,flow_widths,hyper_hidden,n_rk4_steps,seed,status,"
         "final_equilibrium,final_traction,final_total,seconds\n";

  const auto join_ints = [](const std::vector<int>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
      s += (i ? "|" : "") + std::to_string(v[i]);
    return s;
  };

  int variant = 0;
  for (const Json& terms_j : terms_axis)
    for (const Json& widths_j : widths_axis)
      for (const Json& hidden_j : hidden_axis)
        for (const Json& rk4_j : rk4_axis)
          for (const Json& seed_j : seeds_axis) {
            TrainerConfig cfg = opt.base;
            const std::string terms_name = terms_j.get<std::string>();
            cfg.spec.terms = registry_subset(terms_name);
            cfg.spec.flow_widths = widths_j.get<std::vector<int>>();
            cfg.hyper.hidden = hidden_j.get<std::vector<int>>();
            cfg.spec.n_rk4_steps = rk4_j.get<int>();
            cfg.seed = seed_j.get<std::uint64_t>();

            const auto t0 = std::chrono::steady_clock::now();
            std::string status = "ok";
            Real fe = -1.0, ft = -1.0, ftot = -1.0;
            try {
              InverseTrainer trainer(datasets, cfg);
              std::vector<StageReport> reports;
              reports.push_back(trainer.fit_interpolants());
              reports.push_back(trainer.pretrain_homogeneous());
              reports.push_back(trainer.distill());
              reports.push_back(trainer.pretrain_uniform_stress());
              const StageReport main = trainer.train_main();
              reports.push_back(main);
              if (!main.history.empty()) {
                fe = main.history.back().equilibrium;
                ft = main.history.back().traction;
                ftot = main.history.back().total;
              } else {
                ftot = main.final_loss;
              }
              const fs::path vdir = out / "variants" / std::to_string(variant);
              ensure_dir(vdir);
              save_checkpoint((vdir / "checkpoint_latest.json").string(),
                              make_checkpoint(trainer, "train-main", reports));
            } catch (const Error& e) {
              status = std::string("failed: ") + e.what();
              std::replace(status.begin(), status.end(), ',', ';');
              std::replace(status.begin(), status.end(), '\n', ' ');
            }
            const auto t1 = std::chrono::steady_clock::now();
            const Real secs =
                std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count() /
                1000.0;
            csv << variant << ',' << terms_name << ','
                << join_ints(cfg.spec.flow_widths) << ','
                << join_ints(cfg.hyper.hidden) << ',' << cfg.spec.n_rk4_steps << ','
                << cfg.seed << ',' << status << ',' << format_real(fe) << ','
                << format_real(ft) << ',' << format_real(ftot) << ','
                << format_real(secs) << "\n";
            ++variant;
          }
}

}  // namespace hf
