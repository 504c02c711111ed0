// Training checkpoints: a single self-describing JSON file holding the full
// trainer configuration, the fitted interpolants (Fourier frequencies plus
// trunk parameters per dataset), the material-field network, and the scalar
// training state.  Restoring a checkpoint and evaluating reproduces the saved
// run bit for bit; files with an unknown format version are rejected.
#pragma once

#include <string>
#include <vector>

#include "hf/serialize.hpp"
#include "hf/trainer.hpp"
#include "hf/types.hpp"

namespace hf {

// Stage names in execution order; `stage` in the checkpoint records the last
// completed one.
const std::vector<std::string>& stage_names();
int stage_index(const std::string& name);  // -1 when unknown

struct InterpolantState {
  std::string dataset;
  MatX frequencies;   // Fourier B matrix
  VecX params;        // trunk parameters
  Real final_loss = -1.0;
};

struct TrainingCheckpoint {
  std::string stage;  // last completed stage
  TrainerConfig config;
  std::vector<InterpolantState> interpolants;
  VecX theta_bar;           // empty before pretrain_homogeneous
  MatX field_frequencies;   // hyper-network Fourier B matrix
  VecX field_params;        // empty before distill
  Real stress_scale = 1.0;
  Real lambda_effective = 1.0;
  std::vector<StageReport> reports;  // cumulative, one per completed stage
};

void save_checkpoint(const std::string& path, const TrainingCheckpoint& c);
TrainingCheckpoint load_checkpoint(const std::string& path);

// Snapshot of a trainer after `stage` has completed.
TrainingCheckpoint make_checkpoint(const InverseTrainer& t, const std::string& stage,
                                   std::vector<StageReport> reports);

// Pushes checkpoint state back into a freshly constructed trainer, so later
// stages can continue from it.  Only the parts present for c.stage are
// restored; throws ConfigurationError when the checkpoint does not match the
// trainer's configuration.
void restore_into(InverseTrainer& t, const TrainingCheckpoint& c);

// Rebuilds the material field from the checkpoint alone (no datasets), for
// evaluation and export.
HyperNetworkField field_from_checkpoint(const TrainingCheckpoint& c);

// Appends the stage loss histories as CSV rows (stage,epoch,equilibrium,
// traction,total) -- the plotting-friendly flat view of `reports`.
void write_loss_history_csv(const std::string& path,
                            const std::vector<StageReport>& reports);

}  // namespace hf
