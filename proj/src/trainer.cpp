#include "hf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "hf/adam.hpp"

namespace hf {

namespace {

// Runs one loss evaluation, translating numeric blow-ups inside the flow
// integrator into a stage-level optimization error after restoring the last
// good parameters.
template <typename Fn, typename Restore>
void guarded_eval(const char* stage, int epoch, Fn&& fn, Restore&& restore) {
  try {
    fn();
  } catch (const NumericRangeError& e) {
    restore();
    throw OptimizationError(std::string(stage) + " diverged at epoch " +
                            std::to_string(epoch) + ": " + e.what());
  }
}

// Cosine decay to a tenth of the initial rate; late steps shrink so a stage
// settles instead of bouncing around its final basin.
Real decayed_lr(Real lr0, int epoch, int total) {
  const Real frac = static_cast<Real>(epoch) / std::max(total, 1);
  return lr0 * (0.55 + 0.45 * std::cos(EIGEN_PI * frac));
}

}  // namespace

void TrainerConfig::validate() const {
  interp.validate();
  hyper.validate();
  spec.validate();
  if (!(lambda >= 0)) throw ConfigurationError("TrainerConfig: lambda must be >= 0");
  for (Real lr : {lr_homogeneous, lr_distill, lr_uniform, lr_main})
    if (!(lr > 0)) throw ConfigurationError("TrainerConfig: learning rates must be > 0");
  for (int e : {budgets.pretrain_homogeneous, budgets.distill, budgets.pretrain_uniform,
                budgets.main})
    if (e < 0) throw ConfigurationError("TrainerConfig: stage budgets must be >= 0");
  if (collocation_stride < 1)
    throw ConfigurationError("TrainerConfig: collocation stride must be >= 1");
  if (record_every < 1) throw ConfigurationError("TrainerConfig: record_every must be >= 1");
}

InverseTrainer::InverseTrainer(std::vector<Dataset> data, TrainerConfig cfg)
    : data_(std::move(data)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (data_.empty()) throw ConfigurationError("InverseTrainer: at least one dataset required");
  for (const Dataset& d : data_) d.validate();

  // Normalize stresses by the largest average boundary stress so the loss
  // magnitudes are independent of the load level.
  stress_scale_ = 0.0;
  for (const Dataset& d : data_)
    stress_scale_ = std::max(stress_scale_, d.boundary.max_average_stress());
  if (!(stress_scale_ > 0)) stress_scale_ = 1.0;
  lambda_eff_ = cfg_.lambda;

  interp_.resize(data_.size());
  interp_ready_.assign(data_.size(), false);
  colloc_.resize(data_.size());

  Rng rng(stage_seed(cfg_.seed, "hyper-field"));
  field_ = HyperNetworkField(cfg_.spec, cfg_.hyper, rng);
  theta_bar_ = VecX::Zero(cfg_.spec.n_params());
}

void InverseTrainer::ensure_interpolants() const {
  for (std::size_t d = 0; d < data_.size(); ++d)
    if (!interp_ready_[d])
      throw ConfigurationError("InverseTrainer: interpolants must be fitted (or restored) "
                               "before this stage");
}

InverseTrainer::Collocation InverseTrainer::build_collocation(int d) const {
  const Dataset& ds = data_[d];
  const ContinuousFieldModel& model = interp_[d];
  Collocation c;
  c.m = ds.defgrad.n_steps();

  // Equilibrium collocation: every stride-th node in each direction.
  std::vector<Vec2> pts;
  for (int iy = 0; iy < ds.grid.ny; iy += cfg_.collocation_stride)
    for (int ix = 0; ix < ds.grid.nx; ix += cfg_.collocation_stride)
      pts.push_back(ds.grid.node(ds.grid.index(ix, iy)));
  c.n_i = static_cast<int>(pts.size());
  c.coords.resize(c.n_i, 2);
  for (int i = 0; i < c.n_i; ++i) c.coords.row(i) = pts[i].transpose();

  MatX F2, G;
  model.eval_table_with_gradient(c.coords, ds.defgrad.steps, F2, G);
  c.kin = build_stress_kinematics(cfg_.spec, ds.lift, F2, &G);
  c.n_valid = c.m * c.n_i - c.kin.n_invalid;
  if (c.n_valid == 0)
    throw DataError("InverseTrainer: no valid collocation rows in dataset " + ds.name);

  // Traction collocation: the nodes of every edge that carries force data.
  std::vector<Vec2> bpts, bnorm;
  std::vector<std::pair<EdgeId, int>> src;  // edge + position along it
  for (EdgeId e : {EdgeId::XMin, EdgeId::XMax, EdgeId::YMin, EdgeId::YMax}) {
    if (!ds.boundary.edge(e).in_loss) continue;
    const auto idx = edge_node_indices(ds.grid, e);
    for (std::size_t q = 0; q < idx.size(); ++q) {
      bpts.push_back(ds.grid.node(idx[q]));
      bnorm.push_back(outward_normal(e));
      src.emplace_back(e, static_cast<int>(q));
    }
  }
  c.n_b = static_cast<int>(bpts.size());
  if (c.n_b > 0) {
    c.bcoords.resize(c.n_b, 2);
    c.bnormals.resize(c.n_b, 2);
    for (int i = 0; i < c.n_b; ++i) {
      c.bcoords.row(i) = bpts[i].transpose();
      c.bnormals.row(i) = bnorm[i].transpose();
    }
    c.btarget.resize(c.m);
    for (int j = 0; j < c.m; ++j) {
      c.btarget[j].resize(c.n_b, 2);
      for (int i = 0; i < c.n_b; ++i) {
        const EdgeCondition& ec = ds.boundary.edge(src[i].first);
        const Vec2 t = ec.per_node.empty()
                           ? ds.boundary.uniform_traction(src[i].first, j)
                           : Vec2(ec.per_node[j].row(src[i].second).transpose());
        c.btarget[j].row(i) = t.transpose();
      }
    }
    const MatX Fb = model.eval_table(c.bcoords, ds.defgrad.steps);
    c.bkin = build_stress_kinematics(cfg_.spec, ds.lift, Fb, nullptr);
    c.nb_valid = c.m * c.n_b - c.bkin.n_invalid;
    if (c.nb_valid == 0)
      throw DataError("InverseTrainer: no valid traction rows in dataset " + ds.name);
  } else {
    c.nb_valid = 0;
  }
  return c;
}

void InverseTrainer::ensure_collocation() {
  if (colloc_ready_) return;
  ensure_interpolants();
  for (int d = 0; d < n_datasets(); ++d) colloc_[d] = build_collocation(d);
  colloc_ready_ = true;
}

int InverseTrainer::flagged_rows() {
  ensure_collocation();
  int flagged = 0;
  for (const Collocation& c : colloc_)
    flagged += c.kin.n_invalid + (c.n_b > 0 ? c.bkin.n_invalid : 0);
  return flagged;
}

void InverseTrainer::restore_interpolant(int d, ContinuousFieldModel model) {
  interp_.at(d) = std::move(model);
  interp_ready_.at(d) = true;
  colloc_ready_ = false;
}

void InverseTrainer::restore_homogeneous_params(VecX theta_bar) {
  if (theta_bar.size() != cfg_.spec.n_params())
    throw DimensionError("InverseTrainer: homogeneous parameter size mismatch");
  theta_bar_ = std::move(theta_bar);
}

void InverseTrainer::restore_field_params(VecX trunk_params) {
  if (trunk_params.size() != field_.trunk().n_params())
    throw DimensionError("InverseTrainer: field parameter size mismatch");
  field_.trunk().parameters() = std::move(trunk_params);
}

// ---------------------------------------------------------------------------
// Stage 0: per-dataset interpolants
// ---------------------------------------------------------------------------

StageReport InverseTrainer::fit_interpolants() {
  StageReport rep;
  rep.stage = "interpolant";
  for (int d = 0; d < n_datasets(); ++d) {
    Rng rng(stage_seed(cfg_.seed, "interpolant/" + data_[d].name));
    interp_[d] = ContinuousFieldModel(cfg_.interp, rng);
    interp_[d].fit(data_[d].defgrad);
    interp_ready_[d] = true;
    rep.final_loss += interp_[d].final_loss();
    // summed per-dataset fit histories (identical schedules)
    const auto& h = interp_[d].history();
    if (rep.history.size() < h.size()) rep.history.resize(h.size());
    for (std::size_t q = 0; q < h.size(); ++q) {
      rep.history[q].epoch = h[q].first;
      rep.history[q].total += h[q].second;
    }
  }
  colloc_ready_ = false;
  ensure_collocation();
  rep.flagged_points = flagged_rows();
  return rep;
}

// ---------------------------------------------------------------------------
// Stage 1: homogeneous parameter vector
// ---------------------------------------------------------------------------

StageReport InverseTrainer::pretrain_homogeneous() {
  StageReport rep;
  rep.stage = "pretrain-homogeneous";
  const Real s = stress_scale_;

  // Frozen per-dataset tables: kinematics of the spatially averaged measured
  // deformation, and the normalized average-stress targets.  Averaging the
  // raw data (rather than the interpolant) keeps the exact identity that
  // reference data with zero forces give zero loss at the zero parameter
  // vector.
  struct HomTable {
    StressKinematics kin;
    MatX target;  // m x 4, normalized
    int m = 0, n_valid = 0;
  };
  std::vector<HomTable> tables;
  for (int d = 0; d < n_datasets(); ++d) {
    const Dataset& ds = data_[d];
    HomTable t;
    t.m = ds.defgrad.n_steps();
    MatX Fbar(t.m, 4);
    for (int j = 0; j < t.m; ++j)
      Fbar.row(j) = spatial_average(ds.grid, ds.defgrad.values[j]).transpose();
    t.kin = build_stress_kinematics(cfg_.spec, ds.lift, Fbar, nullptr);
    t.n_valid = t.m - t.kin.n_invalid;
    if (t.n_valid == 0)
      throw DataError("pretrain_homogeneous: averaged deformation invalid in dataset " +
                      ds.name);
    t.target.resize(t.m, 4);
    for (int j = 0; j < t.m; ++j) {
      const Mat2 P = ds.boundary.average_stress(j);
      t.target.row(j) << P(0, 0) / s, P(0, 1) / s, P(1, 0) / s, P(1, 1) / s;
    }
    tables.push_back(std::move(t));
  }

  // The zero vector is a stationary point of every flow output (bias
  // sensitivities of the shifted flow cancel, weight sensitivities vanish
  // with the weights), so the stage starts from a small random vector.
  const int L = cfg_.spec.n_params();
  Rng rng(stage_seed(cfg_.seed, "pretrain-homogeneous"));
  theta_bar_ = normal_matrix(rng, L, 1, 0.3).col(0);

  Adam opt(L, cfg_.lr_homogeneous);
  VecX grad(L);
  VecX last_good = theta_bar_;
  Real loss = 0.0;

  auto evaluate = [&](bool with_grad) {
    loss = 0.0;
    if (with_grad) grad.setZero();
    for (const HomTable& t : tables) {
      RegistryFlows flows(cfg_.spec, false);
      MatX th = theta_bar_;
      flows.load_parameters(th, nullptr, nullptr, t.m);
      flows.forward(t.kin);
      MatX r = assemble_stress(t.kin, flows) / s - t.target;
      for (int j = 0; j < t.m; ++j)
        if (!t.kin.valid[j]) r.row(j).setZero();
      loss += r.squaredNorm() / t.n_valid;
      if (!with_grad) continue;
      const MatX P_bar = (2.0 / (t.n_valid * s)) * r;
      std::vector<ArrX> g_bar;
      std::vector<std::array<ArrX, 2>> ghat_bar;
      assembly_adjoints(t.kin, P_bar, MatX(), g_bar, ghat_bar);
      flows.backward(g_bar, ghat_bar);
      MatX tb = MatX::Zero(L, 1);
      flows.reduce_parameter_adjoints(tb, nullptr, nullptr);
      grad += tb.col(0);
    }
  };

  auto restore = [&] { theta_bar_ = last_good; };
  for (int epoch = 0; epoch < cfg_.budgets.pretrain_homogeneous; ++epoch) {
    opt.set_learning_rate(
        decayed_lr(cfg_.lr_homogeneous, epoch, cfg_.budgets.pretrain_homogeneous));
    guarded_eval("pretrain_homogeneous", epoch, [&] { evaluate(true); }, restore);
    if (!std::isfinite(loss)) {
      theta_bar_ = last_good;
      throw OptimizationError("pretrain_homogeneous diverged at epoch " +
                              std::to_string(epoch));
    }
    if (epoch % cfg_.record_every == 0)
      rep.history.push_back({epoch, 0.0, 0.0, loss});
    last_good = theta_bar_;
    opt.step(theta_bar_, grad);
  }
  guarded_eval("pretrain_homogeneous", cfg_.budgets.pretrain_homogeneous,
               [&] { evaluate(false); }, restore);
  if (!std::isfinite(loss)) {
    theta_bar_ = last_good;
    throw OptimizationError("pretrain_homogeneous diverged on the final step");
  }
  rep.history.push_back({cfg_.budgets.pretrain_homogeneous, 0.0, 0.0, loss});
  rep.final_loss = loss;
  return rep;
}

// ---------------------------------------------------------------------------
// Stage 2: transplant the homogeneous solution into the hyper-network
// ---------------------------------------------------------------------------

StageReport InverseTrainer::distill() {
  ensure_collocation();
  StageReport rep;
  rep.stage = "distill";

  field_.set_constant_output(theta_bar_);

  int n_total = 0;
  for (const Collocation& c : colloc_) n_total += c.n_i;
  MatX coords(n_total, 2);
  int at = 0;
  for (const Collocation& c : colloc_) {
    coords.middleRows(at, c.n_i) = c.coords;
    at += c.n_i;
  }

  const int L = field_.n_output();
  const Real inv_count = 1.0 / (static_cast<Real>(n_total) * L);
  Adam opt(field_.trunk().n_params(), cfg_.lr_distill);
  VecX grad(field_.trunk().n_params());
  VecX last_good = field_.trunk().parameters();
  Real loss = 0.0;

  Mlp::Tape tape;
  MatX theta;
  std::array<MatX, 2> u;
  for (int epoch = 0; epoch < cfg_.budgets.distill; ++epoch) {
    opt.set_learning_rate(decayed_lr(cfg_.lr_distill, epoch, cfg_.budgets.distill));
    field_.forward(coords, false, tape, theta, u);
    const MatX r = theta.colwise() - theta_bar_;
    loss = r.squaredNorm() * inv_count;
    if (!std::isfinite(loss)) {
      field_.trunk().parameters() = last_good;
      throw OptimizationError("distill diverged at epoch " + std::to_string(epoch));
    }
    if (epoch % cfg_.record_every == 0) rep.history.push_back({epoch, 0.0, 0.0, loss});
    grad.setZero();
    field_.backward(tape, 2.0 * inv_count * r, {MatX(), MatX()}, grad);
    last_good = field_.trunk().parameters();
    opt.step(field_.trunk().parameters(), grad);
  }
  loss = (field_.eval(coords).colwise() - theta_bar_).squaredNorm() * inv_count;
  rep.history.push_back({cfg_.budgets.distill, 0.0, 0.0, loss});
  rep.final_loss = loss;

  // Largest pointwise deviation from the homogeneous solution on random
  // probe points; the transplant should be essentially exact.
  Rng rng(stage_seed(cfg_.seed, "distill-probe"));
  Vec2 lo = data_[0].grid.origin;
  Vec2 hi = lo + Vec2(data_[0].grid.length_x(), data_[0].grid.length_y());
  for (const Dataset& ds : data_) {
    lo = lo.cwiseMin(ds.grid.origin);
    hi = hi.cwiseMax(ds.grid.origin + Vec2(ds.grid.length_x(), ds.grid.length_y()));
  }
  std::uniform_real_distribution<Real> ux(lo[0], hi[0]), uy(lo[1], hi[1]);
  MatX probes(200, 2);
  for (int i = 0; i < probes.rows(); ++i) probes.row(i) << ux(rng), uy(rng);
  rep.sup_deviation = (field_.eval(probes).colwise() - theta_bar_).cwiseAbs().maxCoeff();
  const Real tol = 1e-3 * (1.0 + theta_bar_.cwiseAbs().maxCoeff());
  if (rep.sup_deviation > tol) {
    rep.warning = true;
    rep.message = "distilled field deviates from the homogeneous solution by " +
                  std::to_string(rep.sup_deviation);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Stage 3: uniform-stress pretraining of the field
// ---------------------------------------------------------------------------

StageReport InverseTrainer::pretrain_uniform_stress() {
  ensure_collocation();
  StageReport rep;
  rep.stage = "pretrain-uniform-stress";
  const Real s = stress_scale_;
  const int L = field_.n_output();

  // Normalized average-stress targets per dataset and step.
  std::vector<MatX> targets(n_datasets());
  for (int d = 0; d < n_datasets(); ++d) {
    targets[d].resize(colloc_[d].m, 4);
    for (int j = 0; j < colloc_[d].m; ++j) {
      const Mat2 P = data_[d].boundary.average_stress(j);
      targets[d].row(j) << P(0, 0) / s, P(0, 1) / s, P(1, 0) / s, P(1, 1) / s;
    }
  }

  Adam opt(field_.trunk().n_params(), cfg_.lr_uniform);
  VecX grad(field_.trunk().n_params());
  VecX last_good = field_.trunk().parameters();
  Real loss = 0.0;

  auto evaluate = [&](bool with_grad) {
    loss = 0.0;
    if (with_grad) grad.setZero();
    for (int d = 0; d < n_datasets(); ++d) {
      const Collocation& c = colloc_[d];
      Mlp::Tape tape;
      MatX theta;
      std::array<MatX, 2> u;
      field_.forward(c.coords, false, tape, theta, u);

      RegistryFlows flows(cfg_.spec, false);
      flows.load_parameters(theta, nullptr, nullptr, c.m);
      flows.forward(c.kin);
      MatX r = assemble_stress(c.kin, flows) / s;
      for (int j = 0; j < c.m; ++j)
        r.middleRows(j * c.n_i, c.n_i).rowwise() -= targets[d].row(j);
      for (int i = 0; i < c.kin.n; ++i)
        if (!c.kin.valid[i]) r.row(i).setZero();
      loss += r.squaredNorm() / c.n_valid;
      if (!with_grad) continue;

      const MatX P_bar = (2.0 / (c.n_valid * s)) * r;
      std::vector<ArrX> g_bar;
      std::vector<std::array<ArrX, 2>> ghat_bar;
      assembly_adjoints(c.kin, P_bar, MatX(), g_bar, ghat_bar);
      flows.backward(g_bar, ghat_bar);
      MatX tb = MatX::Zero(L, c.n_i);
      flows.reduce_parameter_adjoints(tb, nullptr, nullptr);
      field_.backward(tape, tb, {MatX(), MatX()}, grad);
    }
  };

  auto restore = [&] { field_.trunk().parameters() = last_good; };
  for (int epoch = 0; epoch < cfg_.budgets.pretrain_uniform; ++epoch) {
    opt.set_learning_rate(
        decayed_lr(cfg_.lr_uniform, epoch, cfg_.budgets.pretrain_uniform));
    guarded_eval("pretrain_uniform_stress", epoch, [&] { evaluate(true); }, restore);
    if (!std::isfinite(loss)) {
      field_.trunk().parameters() = last_good;
      throw OptimizationError("pretrain_uniform_stress diverged at epoch " +
                              std::to_string(epoch));
    }
    if (epoch % cfg_.record_every == 0)
      rep.history.push_back({epoch, 0.0, 0.0, loss});
    last_good = field_.trunk().parameters();
    opt.step(field_.trunk().parameters(), grad);
  }
  guarded_eval("pretrain_uniform_stress", cfg_.budgets.pretrain_uniform,
               [&] { evaluate(false); }, restore);
  if (!std::isfinite(loss)) {
    field_.trunk().parameters() = last_good;
    throw OptimizationError("pretrain_uniform_stress diverged on the final step");
  }
  rep.history.push_back({cfg_.budgets.pretrain_uniform, 0.0, 0.0, loss});
  rep.final_loss = loss;
  return rep;
}

// ---------------------------------------------------------------------------
// Stage 4: equilibrium + traction training
// ---------------------------------------------------------------------------

std::pair<Real, Real> InverseTrainer::main_loss_terms(Real lambda, VecX* grad) {
  ensure_collocation();
  const Real s = stress_scale_;
  const Real s2 = s * s;
  const int L = field_.n_output();
  Real equi_tot = 0.0, trac_tot = 0.0;

  for (int d = 0; d < n_datasets(); ++d) {
    const Collocation& c = colloc_[d];

    // Interior equilibrium residual div P (exact spatial derivatives).
    {
      Mlp::Tape tape;
      MatX theta;
      std::array<MatX, 2> u;
      field_.forward(c.coords, true, tape, theta, u);

      RegistryFlows flows(cfg_.spec, true);
      flows.load_parameters(theta, &u[0], &u[1], c.m);
      flows.forward(c.kin);
      const MatX div = assemble_divergence(c.kin, flows);
      equi_tot += div.squaredNorm() / (s2 * c.n_valid);

      if (grad) {
        const MatX div_bar = (2.0 / (s2 * c.n_valid)) * div;
        std::vector<ArrX> g_bar;
        std::vector<std::array<ArrX, 2>> ghat_bar;
        assembly_adjoints(c.kin, MatX(), div_bar, g_bar, ghat_bar);
        flows.backward(g_bar, ghat_bar);
        MatX tb = MatX::Zero(L, c.n_i);
        MatX ub0 = MatX::Zero(L, c.n_i), ub1 = MatX::Zero(L, c.n_i);
        flows.reduce_parameter_adjoints(tb, &ub0, &ub1);
        field_.backward(tape, tb, {std::move(ub0), std::move(ub1)}, *grad);
      }
    }

    // Boundary traction residual P N - t_bar.
    if (c.n_b > 0) {
      Mlp::Tape tape;
      MatX theta;
      std::array<MatX, 2> u;
      field_.forward(c.bcoords, false, tape, theta, u);

      RegistryFlows flows(cfg_.spec, false);
      flows.load_parameters(theta, nullptr, nullptr, c.m);
      flows.forward(c.bkin);
      const MatX P = assemble_stress(c.bkin, flows);

      MatX rho(c.bkin.n, 2);  // per-row traction residual
      for (int j = 0; j < c.m; ++j)
        for (int i = 0; i < c.n_b; ++i) {
          const int row = j * c.n_b + i;
          if (!c.bkin.valid[row]) {
            rho.row(row).setZero();
            continue;
          }
          const Real n0 = c.bnormals(i, 0), n1 = c.bnormals(i, 1);
          rho(row, 0) = P(row, 0) * n0 + P(row, 1) * n1 - c.btarget[j](i, 0);
          rho(row, 1) = P(row, 2) * n0 + P(row, 3) * n1 - c.btarget[j](i, 1);
        }
      trac_tot += rho.squaredNorm() / (s2 * c.nb_valid);

      if (grad) {
        const Real w = 2.0 * lambda / (s2 * c.nb_valid);
        MatX P_bar = MatX::Zero(c.bkin.n, 4);
        for (int j = 0; j < c.m; ++j)
          for (int i = 0; i < c.n_b; ++i) {
            const int row = j * c.n_b + i;
            const Real n0 = c.bnormals(i, 0), n1 = c.bnormals(i, 1);
            P_bar(row, 0) = w * rho(row, 0) * n0;
            P_bar(row, 1) = w * rho(row, 0) * n1;
            P_bar(row, 2) = w * rho(row, 1) * n0;
            P_bar(row, 3) = w * rho(row, 1) * n1;
          }
        std::vector<ArrX> g_bar;
        std::vector<std::array<ArrX, 2>> ghat_bar;
        assembly_adjoints(c.bkin, P_bar, MatX(), g_bar, ghat_bar);
        flows.backward(g_bar, ghat_bar);
        MatX tb = MatX::Zero(L, c.n_b);
        flows.reduce_parameter_adjoints(tb, nullptr, nullptr);
        field_.backward(tape, tb, {MatX(), MatX()}, *grad);
      }
    }
  }
  return {equi_tot, trac_tot};
}

StageReport InverseTrainer::train_main() {
  ensure_collocation();
  StageReport rep;
  rep.stage = "train-main";
  rep.flagged_points = flagged_rows();

  if (cfg_.rebalance) {
    // One forward-only pass to put both terms on the same footing.
    Real equi0 = 0.0, trac0 = 0.0;
    guarded_eval("train_main", 0,
                 [&] { std::tie(equi0, trac0) = main_loss_terms(1.0, nullptr); }, [] {});
    lambda_eff_ = (equi0 > 0 && trac0 > 0) ? equi0 / trac0 : cfg_.lambda;
  } else {
    lambda_eff_ = cfg_.lambda;
  }

  Adam opt(field_.trunk().n_params(), cfg_.lr_main);
  VecX grad(field_.trunk().n_params());
  VecX last_good = field_.trunk().parameters();

  auto restore = [&] { field_.trunk().parameters() = last_good; };
  for (int epoch = 0; epoch < cfg_.budgets.main; ++epoch) {
    opt.set_learning_rate(decayed_lr(cfg_.lr_main, epoch, cfg_.budgets.main));
    grad.setZero();
    Real equi = 0.0, trac = 0.0;
    guarded_eval("train_main", epoch,
                 [&] { std::tie(equi, trac) = main_loss_terms(lambda_eff_, &grad); },
                 restore);
    const Real total = equi + lambda_eff_ * trac;
    if (!std::isfinite(total)) {
      field_.trunk().parameters() = last_good;
      throw OptimizationError("train_main diverged at epoch " + std::to_string(epoch));
    }
    if (epoch % cfg_.record_every == 0) rep.history.push_back({epoch, equi, trac, total});
    last_good = field_.trunk().parameters();
    opt.step(field_.trunk().parameters(), grad);
  }
  Real equi = 0.0, trac = 0.0;
  guarded_eval("train_main", cfg_.budgets.main,
               [&] { std::tie(equi, trac) = main_loss_terms(lambda_eff_, nullptr); },
               restore);
  const Real total = equi + lambda_eff_ * trac;
  if (!std::isfinite(total)) {
    field_.trunk().parameters() = last_good;
    throw OptimizationError("train_main diverged on the final step");
  }
  rep.history.push_back({cfg_.budgets.main, equi, trac, total});
  rep.final_loss = total;
  return rep;
}

}  // namespace hf
