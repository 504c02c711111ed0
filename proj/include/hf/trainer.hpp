// Inverse identification driver.  Given one or more datasets of the same
// specimen it fits a continuous interpolant per dataset, then trains the
// shared hyper-network material field against the strong-form equilibrium
// residual and the boundary-traction data, in four stages:
//
//   1. pretrain_homogeneous -- a single parameter vector Theta_bar is fitted
//      so the model reproduces the average boundary stress at the spatially
//      averaged deformation (a homogeneous first guess);
//   2. distill              -- the hyper-network is initialized to emit
//      Theta_bar everywhere (exact bias transplant plus a short polish);
//   3. pretrain_uniform_stress -- the field is trained so the local stress
//      matches the average boundary stress at every collocation point;
//   4. train_main           -- interior equilibrium div P = 0 plus the
//      boundary condition P N = t_bar, combined as
//      total = equilibrium + lambda * traction.
//
// All stresses inside the losses are normalized by the largest average
// boundary stress over the datasets so the loss scale is load-independent.
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "hf/dataset.hpp"
#include "hf/field_interp.hpp"
#include "hf/hyper_field.hpp"
#include "hf/stress_pipeline.hpp"
#include "hf/types.hpp"

namespace hf {

struct StageBudgets {
  int pretrain_homogeneous = 4000;
  int distill = 600;
  int pretrain_uniform = 800;
  int main = 3000;
};

struct TrainerConfig {
  InterpolantConfig interp;
  HyperConfig hyper;
  NodeModelSpec spec;
  Real lambda = 1.0;       // traction weight in the main loss
  bool rebalance = false;  // rescale lambda once so both terms start equal
  Real lr_homogeneous = 3e-2;
  Real lr_distill = 1e-3;
  Real lr_uniform = 1e-3;
  Real lr_main = 1e-3;
  StageBudgets budgets;
  int collocation_stride = 1;  // keep every stride-th node per direction
  int record_every = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct LossRecord {
  int epoch = 0;
  Real equilibrium = 0.0;
  Real traction = 0.0;
  Real total = 0.0;
};

struct StageReport {
  std::string stage;
  std::vector<LossRecord> history;
  Real final_loss = 0.0;
  int flagged_points = 0;   // kinematic rows excluded by the invertibility guard
  Real sup_deviation = -1.0;  // distill stage: max |field - Theta_bar|
  bool warning = false;
  std::string message;
};

class InverseTrainer {
 public:
  InverseTrainer(std::vector<Dataset> data, TrainerConfig cfg);

  // Stages, to be run in order.  Each stage is deterministic given the
  // manifest seed and the state left by the previous stages.
  StageReport fit_interpolants();
  StageReport pretrain_homogeneous();
  StageReport distill();
  StageReport pretrain_uniform_stress();
  StageReport train_main();

  int n_datasets() const { return static_cast<int>(data_.size()); }
  const Dataset& dataset(int d) const { return data_[d]; }
  const TrainerConfig& config() const { return cfg_; }
  Real stress_scale() const { return stress_scale_; }
  Real lambda_effective() const { return lambda_eff_; }

  const ContinuousFieldModel& interpolant(int d) const { return interp_[d]; }
  const HyperNetworkField& field() const { return field_; }
  HyperNetworkField& field() { return field_; }
  const VecX& homogeneous_params() const { return theta_bar_; }

  // Checkpoint restore hooks: replace stage outputs without re-running.
  void restore_interpolant(int d, ContinuousFieldModel model);
  void restore_homogeneous_params(VecX theta_bar);
  void restore_field_params(VecX trunk_params);
  void restore_lambda_effective(Real lambda) { lambda_eff_ = lambda; }

  // Total collocation rows excluded by the invertibility guard (after the
  // interpolants exist).
  int flagged_rows();

  // One evaluation of the main-stage loss terms (equilibrium, traction),
  // both normalized; when grad is non-null the gradient of
  // equilibrium + lambda * traction w.r.t. the trunk parameters is
  // accumulated into it.  Exposed for diagnostics and verification.
  std::pair<Real, Real> main_loss_terms(Real lambda, VecX* grad = nullptr);

 private:
  // Frozen per-dataset tables: once the interpolant is fitted, every
  // F-dependent quantity of the residuals is fixed and precomputed.
  struct Collocation {
    MatX coords;           // n_i x 2 equilibrium collocation points
    StressKinematics kin;  // with spatial-derivative lanes
    int n_i = 0;
    int n_valid = 0;       // valid (point, step) rows
    MatX bcoords;          // n_b x 2 traction collocation points
    StressKinematics bkin;
    MatX bnormals;              // n_b x 2 outward normals
    std::vector<MatX> btarget;  // per step, n_b x 2 tractions (unnormalized)
    int n_b = 0;
    int nb_valid = 0;
    int m = 0;
  };

  void ensure_interpolants() const;
  void ensure_collocation();
  Collocation build_collocation(int d) const;

  std::vector<Dataset> data_;
  TrainerConfig cfg_;
  Real stress_scale_ = 1.0;
  Real lambda_eff_ = 1.0;
  std::vector<ContinuousFieldModel> interp_;
  std::vector<bool> interp_ready_;
  HyperNetworkField field_;
  VecX theta_bar_;
  std::vector<Collocation> colloc_;
  bool colloc_ready_ = false;
};

}  // namespace hf
