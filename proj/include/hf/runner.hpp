// Run orchestration for the command-line pipeline: synthetic-data
// generation from presets, staged training with per-stage checkpoints and
// resume, trained-field evaluation/export, and architecture sweeps.  Every
// command records a run manifest (command, options, seed) in its output
// directory so a run is reproducible from that file alone.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hf/checkpoint.hpp"
#include "hf/presets.hpp"
#include "hf/serialize.hpp"
#include "hf/trainer.hpp"
#include "hf/types.hpp"

namespace hf {

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

struct GenerateOptions {
  std::string preset = "smoke";
  std::string out;
  std::uint64_t seed = 1;
  Real noise_sigma = -1.0;  // < 0: use the preset default
  int elements = 0;         // 0: use the preset default
  std::string mask_image;   // optional PGM mask overriding the preset geometry
};

struct GenerateOutcome {
  std::vector<std::string> bundles;            // directories written
  std::vector<std::vector<Real>> snr_db;       // per bundle, per step
};

GenerateOutcome run_generate(const GenerateOptions& opt);

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

struct TrainOptions {
  std::vector<std::string> data;  // dataset bundle directories
  std::string out;
  TrainerConfig config;
  // Resume control: start_stage empty runs from scratch; otherwise the
  // checkpoint of the preceding stage is loaded from `out` first.  stop_stage
  // empty runs to the end.
  std::string start_stage;
  std::string stop_stage;
};

struct TrainOutcome {
  int exit_code = 0;  // 0 success, otherwise stage_exit_code(failed_stage)
  std::string failed_stage;
  std::string message;
  std::vector<StageReport> reports;
  TrainingCheckpoint last;  // last state that reached disk
};

TrainOutcome run_train(const TrainOptions& opt);

// Exit code contract: each pipeline stage owns a distinct nonzero code.
int stage_exit_code(const std::string& stage);

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

struct EvaluateOptions {
  std::string checkpoint;
  std::string out;
  std::vector<std::string> data;  // optional bundles: enables residual/force exports
  MatX probes = MatX(0, 2);       // probe coordinates, one row per point
  std::string probe_mode = "equibiaxial";  // stretch path for probes and the map
  std::string lift = "";          // probe lift override; default from data/plane-strain
  Real map_stretch = 1.1;
  Real probe_max_stretch = 1.15;
  int probe_samples = 31;
  int map_nodes = 0;  // stiffness-map resolution; 0: data grid, else 51
  bool replot = false;  // redraw rasters from the existing CSVs, no recompute
};

void run_evaluate(const EvaluateOptions& opt);

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

struct AblateOptions {
  std::vector<std::string> data;
  std::string out;
  TrainerConfig base;
  // Sweep axes (all optional): "terms" (full | isotropic | no-mixed),
  // "flow_widths" ([[1,3,1], ...]), "hyper_hidden" ([[20,20], ...]),
  // "n_rk4_steps" ([...]), "seeds" ([...]).  The sweep is the cartesian
  // product of the provided axes.
  Json grid;
};

void run_ablate(const AblateOptions& opt);

// Registry subsets used by the sweeps.
std::vector<TermSpec> registry_subset(const std::string& name);

}  // namespace hf
