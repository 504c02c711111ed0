// Command-line front end: generate synthetic datasets, ingest DIC exports,
// train the inverse model, evaluate checkpoints, and run architecture sweeps.
//
// Exit codes: 0 success; 2 configuration/data errors; 3 file I/O errors;
// 10 + stage index when a training stage fails (interpolant = 10, ...,
// train-main = 14; the last good checkpoint stays in the output directory);
// 20 when the forward solver fails to converge; 1 for anything unexpected.
#include <CLI11.hpp>

#include <cstdlib>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "hf/bundle.hpp"
#include "hf/dic.hpp"
#include "hf/presets.hpp"
#include "hf/runner.hpp"
#include "hf/serialize.hpp"

namespace {

using hf::Json;
using hf::Real;

hf::MatX parse_probes(const std::vector<std::string>& specs) {
  hf::MatX probes(static_cast<Eigen::Index>(specs.size()), 2);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto comma = specs[i].find(',');
    if (comma == std::string::npos)
      throw hf::ConfigurationError("probe must be \"x,y\": got '" + specs[i] + "'");
    const auto num = [&](const std::string& part) {
      char* end = nullptr;
      const Real v = std::strtod(part.c_str(), &end);
      if (part.empty() || end == part.c_str())
        throw hf::ConfigurationError("bad probe coordinate '" + part + "'");
      return v;
    };
    probes(static_cast<Eigen::Index>(i), 0) = num(specs[i].substr(0, comma));
    probes(static_cast<Eigen::Index>(i), 1) = num(specs[i].substr(comma + 1));
  }
  return probes;
}

hf::DicIngestConfig dic_config_from_json(const Json& j) {
  hf::DicIngestConfig cfg;
  if (j.contains("name")) cfg.name = j.at("name").get<std::string>();
  if (j.contains("lift"))
    cfg.lift = hf::lift_mode_from_string(j.at("lift").get<std::string>());
  if (j.contains("loading_mode"))
    cfg.loading_mode = j.at("loading_mode").get<std::string>();
  if (j.contains("target_stretches"))
    cfg.target_stretches = j.at("target_stretches").get<std::vector<Real>>();
  if (j.contains("max_missing_fraction"))
    cfg.max_missing_fraction = j.at("max_missing_fraction").get<Real>();
  if (j.contains("crop")) {
    const Json& c = j.at("crop");
    cfg.crop = true;
    cfg.crop_rect.x0 = c.at("x0").get<Real>();
    cfg.crop_rect.y0 = c.at("y0").get<Real>();
    cfg.crop_rect.x1 = c.at("x1").get<Real>();
    cfg.crop_rect.y1 = c.at("y1").get<Real>();
  }
  return cfg;
}

// Trainer configuration for train/ablate: an explicit manifest wins, then a
// preset's training recipe, then the library defaults.
hf::TrainerConfig resolve_trainer_config(const std::string& manifest,
                                         const std::string& preset) {
  if (!manifest.empty()) {
    const Json j = hf::load_json_file(manifest);
    return hf::trainer_config_from_json(j.contains("trainer") ? j.at("trainer") : j);
  }
  if (!preset.empty()) return hf::make_preset(preset).trainer;
  return hf::TrainerConfig{};
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const hf::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const hf::InvertedElementError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 20;
  } catch (const hf::OptimizationError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return 20;
  } catch (const hf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "unexpected error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* t = std::getenv("HETEROFIELD_THREADS")) {
    const int n = std::atoi(t);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{"heterogeneous hyperelastic field identification"};
  app.set_version_flag("--version", std::string(hf::kToolVersion));
  app.require_subcommand(1);

  // --- generate ------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "synthesize datasets from a preset plate");
  hf::GenerateOptions gopt;
  gen->add_option("--preset", gopt.preset, "plate preset name")->capture_default_str();
  gen->add_option("--out", gopt.out, "output directory")->required();
  gen->add_option("--seed", gopt.seed, "master seed")->capture_default_str();
  gen->add_option("--noise", gopt.noise_sigma,
                  "measurement noise sigma (-1 keeps the preset default)");
  gen->add_option("--elements", gopt.elements,
                  "elements per direction (0 keeps the preset default)");
  gen->add_option("--mask", gopt.mask_image,
                  "PGM mask overriding the preset phase layout");

  // --- ingest-dic ----------------------------------------------------------
  auto* dic = app.add_subcommand("ingest-dic", "build a dataset bundle from DIC tables");
  std::string dic_displacements, dic_frames, dic_out, dic_manifest;
  std::uint64_t dic_seed = 1;
  dic->add_option("--displacements", dic_displacements,
                  "CSV with frame,X1,X2,u1,u2 rows")->required();
  dic->add_option("--frames", dic_frames, "CSV with frame,stretch,fx,fy rows")
      ->required();
  dic->add_option("--out", dic_out, "bundle output directory")->required();
  dic->add_option("--manifest", dic_manifest,
                  "JSON ingest options (name, lift, loading_mode, target_stretches, "
                  "crop, max_missing_fraction)");
  dic->add_option("--seed", dic_seed, "seed recorded in the bundle")
      ->capture_default_str();

  // --- train ---------------------------------------------------------------
  auto* train = app.add_subcommand("train", "run the staged inverse identification");
  hf::TrainOptions topt;
  std::string train_manifest, train_preset;
  std::uint64_t train_seed = 0;
  train->add_option("--data", topt.data, "dataset bundle directory (repeatable)")
      ->required();
  train->add_option("--out", topt.out, "output directory")->required();
  train->add_option("--manifest", train_manifest, "trainer configuration JSON");
  train->add_option("--preset", train_preset,
                    "take the training recipe from this preset");
  auto* train_seed_opt = train->add_option("--seed", train_seed, "override the seed");
  train->add_option("--stage", topt.start_stage,
                    "resume from this stage (needs the previous stage's checkpoint "
                    "in --out)");
  train->add_option("--stop-stage", topt.stop_stage, "stop after this stage");

  // --- evaluate ------------------------------------------------------------
  auto* eval = app.add_subcommand("evaluate", "export maps, probes, and residuals");
  hf::EvaluateOptions eopt;
  std::vector<std::string> probe_specs;
  eval->add_option("--checkpoint", eopt.checkpoint, "training checkpoint JSON");
  eval->add_option("--out", eopt.out, "output directory")->required();
  eval->add_option("--data", eopt.data, "dataset bundle directory (repeatable)");
  eval->add_option("--probe", probe_specs, "probe point \"x,y\" (repeatable)");
  eval->add_option("--probe-mode", eopt.probe_mode,
                   "equibiaxial | uniaxial-x | uniaxial-y")
      ->capture_default_str();
  eval->add_option("--lift", eopt.lift,
                   "thickness lift override (plane-strain | incompressible-plane-stress)");
  eval->add_option("--map-stretch", eopt.map_stretch, "stretch for the stiffness map")
      ->capture_default_str();
  eval->add_option("--probe-max-stretch", eopt.probe_max_stretch,
                   "probe curves end at this stretch")
      ->capture_default_str();
  eval->add_option("--probe-samples", eopt.probe_samples, "points per probe curve")
      ->capture_default_str();
  eval->add_option("--map-nodes", eopt.map_nodes,
                   "stiffness-map grid nodes per direction (0: data grid or 51)");
  eval->add_flag("--replot", eopt.replot,
                 "re-render rasters from the CSVs already in --out");

  // --- ablate --------------------------------------------------------------
  auto* abl = app.add_subcommand("ablate", "architecture sweep over a config grid");
  hf::AblateOptions aopt;
  std::string abl_manifest, abl_preset;
  std::uint64_t abl_seed = 0;
  abl->add_option("--data", aopt.data, "dataset bundle directory (repeatable)")
      ->required();
  abl->add_option("--out", aopt.out, "output directory")->required();
  abl->add_option("--manifest", abl_manifest,
                  "JSON with optional \"trainer\" base config and a \"grid\" of axes "
                  "(terms, flow_widths, hyper_hidden, n_rk4_steps, seeds)");
  abl->add_option("--preset", abl_preset, "take the base training recipe from this preset");
  auto* abl_seed_opt = abl->add_option("--seed", abl_seed, "override the base seed");

  CLI11_PARSE(app, argc, argv);

  if (*gen) {
    return guarded([&] {
      const hf::GenerateOutcome res = hf::run_generate(gopt);
      for (std::size_t b = 0; b < res.bundles.size(); ++b) {
        std::cout << "wrote " << res.bundles[b];
        if (!res.snr_db[b].empty()) {
          std::cout << "  (SNR dB:";
          for (Real v : res.snr_db[b]) std::cout << ' ' << v;
          std::cout << ')';
        }
        std::cout << "\n";
      }
      return 0;
    });
  }

  if (*dic) {
    return guarded([&] {
      hf::DicIngestConfig cfg;
      if (!dic_manifest.empty())
        cfg = dic_config_from_json(hf::load_json_file(dic_manifest));
      const hf::Dataset data = hf::ingest_dic(dic_displacements, dic_frames, cfg);
      hf::BundleInfo info;
      info.seed = dic_seed;
      info.loading_mode = cfg.loading_mode;
      hf::write_dataset_bundle(dic_out, data, info);
      std::cout << "wrote " << dic_out << " (" << data.grid.nx << "x" << data.grid.ny
                << " nodes, " << data.defgrad.n_steps() << " steps)\n";
      return 0;
    });
  }

  if (*train) {
    return guarded([&] {
      topt.config = resolve_trainer_config(train_manifest, train_preset);
      if (train_seed_opt->count() > 0) topt.config.seed = train_seed;
      const hf::TrainOutcome res = hf::run_train(topt);
      for (const hf::StageReport& r : res.reports) {
        std::cout << r.stage << ": final loss " << r.final_loss;
        if (r.warning) std::cout << "  [warning] " << r.message;
        std::cout << "\n";
      }
      if (res.exit_code != 0)
        std::cerr << "stage '" << res.failed_stage << "' failed: " << res.message
                  << "\n";
      return res.exit_code;
    });
  }

  if (*eval) {
    return guarded([&] {
      eopt.probes = parse_probes(probe_specs);
      if (!eopt.replot && eopt.checkpoint.empty())
        throw hf::ConfigurationError("evaluate: --checkpoint is required");
      hf::run_evaluate(eopt);
      std::cout << "wrote " << eopt.out << "\n";
      return 0;
    });
  }

  return guarded([&] {
    Json manifest;
    if (!abl_manifest.empty()) manifest = hf::load_json_file(abl_manifest);
    if (manifest.contains("trainer"))
      aopt.base = hf::trainer_config_from_json(manifest.at("trainer"));
    else
      aopt.base = resolve_trainer_config("", abl_preset);
    if (abl_seed_opt->count() > 0) aopt.base.seed = abl_seed;
    aopt.grid = manifest.contains("grid") ? manifest.at("grid") : Json::object();
    hf::run_ablate(aopt);
    std::cout << "wrote " << aopt.out << "/ablation.csv\n";
    return 0;
  });
}
