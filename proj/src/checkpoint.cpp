#include "hf/checkpoint.hpp"

#include <fstream>

#include "hf/bundle.hpp"

namespace hf {

namespace {

Json report_to_json(const StageReport& r) {
  Json j;
  j["stage"] = r.stage;
  j["final_loss"] = r.final_loss;
  j["flagged_points"] = r.flagged_points;
  j["sup_deviation"] = r.sup_deviation;
  j["warning"] = r.warning;
  j["message"] = r.message;
  Json hist = Json::array();
  for (const LossRecord& rec : r.history)
    hist.push_back({{"epoch", rec.epoch},
                    {"equilibrium", rec.equilibrium},
                    {"traction", rec.traction},
                    {"total", rec.total}});
  j["history"] = std::move(hist);
  return j;
}

StageReport report_from_json(const Json& j) {
  StageReport r;
  r.stage = j.value("stage", "");
  r.final_loss = j.value("final_loss", 0.0);
  r.flagged_points = j.value("flagged_points", 0);
  r.sup_deviation = j.value("sup_deviation", -1.0);
  r.warning = j.value("warning", false);
  r.message = j.value("message", "");
  for (const Json& h : j.value("history", Json::array())) {
    LossRecord rec;
    rec.epoch = h.value("epoch", 0);
    rec.equilibrium = h.value("equilibrium", 0.0);
    rec.traction = h.value("traction", 0.0);
    rec.total = h.value("total", 0.0);
    r.history.push_back(rec);
  }
  return r;
}

}  // namespace

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {
      "interpolant", "pretrain-homogeneous", "distill", "pretrain-uniform-stress",
      "train-main"};
  return names;
}

int stage_index(const std::string& name) {
  const auto& names = stage_names();
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return static_cast<int>(i);
  return -1;
}

void save_checkpoint(const std::string& path, const TrainingCheckpoint& c) {
  if (stage_index(c.stage) < 0)
    throw ConfigurationError("save_checkpoint: unknown stage '" + c.stage + "'");
  Json j;
  j["format_version"] = kCheckpointFormatVersion;
  j["tool"] = kToolVersion;
  j["kind"] = "checkpoint";
  j["stage"] = c.stage;
  j["config"] = trainer_config_to_json(c.config);
  Json interps = Json::array();
  for (const InterpolantState& s : c.interpolants) {
    Json ji;
    ji["dataset"] = s.dataset;
    ji["frequencies"] = matrix_to_json(s.frequencies);
    ji["params"] = vector_to_json(s.params);
    ji["final_loss"] = s.final_loss;
    interps.push_back(std::move(ji));
  }
  j["interpolants"] = std::move(interps);
  if (c.theta_bar.size() > 0) j["theta_bar"] = vector_to_json(c.theta_bar);
  j["field_frequencies"] = matrix_to_json(c.field_frequencies);
  if (c.field_params.size() > 0) j["field_params"] = vector_to_json(c.field_params);
  j["stress_scale"] = c.stress_scale;
  j["lambda_effective"] = c.lambda_effective;
  Json reports = Json::array();
  for (const StageReport& r : c.reports) reports.push_back(report_to_json(r));
  j["reports"] = std::move(reports);
  save_json_file(path, j);
}

TrainingCheckpoint load_checkpoint(const std::string& path) {
  const Json j = load_json_file(path);
  const int version = j.value("format_version", -1);
  if (version != kCheckpointFormatVersion)
    throw DataError("unsupported checkpoint format_version " + std::to_string(version) +
                    " in " + path);
  if (j.value("kind", "") != "checkpoint")
    throw DataError("manifest kind is not 'checkpoint' in " + path);

  TrainingCheckpoint c;
  c.stage = j.at("stage").get<std::string>();
  if (stage_index(c.stage) < 0)
    throw DataError("unknown stage '" + c.stage + "' in " + path);
  c.config = trainer_config_from_json(j.at("config"));
  for (const Json& ji : j.value("interpolants", Json::array())) {
    InterpolantState s;
    s.dataset = ji.value("dataset", "");
    s.frequencies = matrix_from_json(ji.at("frequencies"));
    s.params = vector_from_json(ji.at("params"));
    s.final_loss = ji.value("final_loss", -1.0);
    c.interpolants.push_back(std::move(s));
  }
  if (j.contains("theta_bar")) c.theta_bar = vector_from_json(j.at("theta_bar"));
  c.field_frequencies = matrix_from_json(j.at("field_frequencies"));
  if (j.contains("field_params")) c.field_params = vector_from_json(j.at("field_params"));
  c.stress_scale = j.value("stress_scale", 1.0);
  c.lambda_effective = j.value("lambda_effective", 1.0);
  for (const Json& r : j.value("reports", Json::array()))
    c.reports.push_back(report_from_json(r));
  return c;
}

TrainingCheckpoint make_checkpoint(const InverseTrainer& t, const std::string& stage,
                                   std::vector<StageReport> reports) {
  const int idx = stage_index(stage);
  if (idx < 0) throw ConfigurationError("make_checkpoint: unknown stage '" + stage + "'");
  TrainingCheckpoint c;
  c.stage = stage;
  c.config = t.config();
  for (int d = 0; d < t.n_datasets(); ++d) {
    const ContinuousFieldModel& m = t.interpolant(d);
    InterpolantState s;
    s.dataset = t.dataset(d).name;
    s.frequencies = m.feature_map().frequency_matrix();
    s.params = m.trunk().parameters();
    s.final_loss = m.final_loss();
    c.interpolants.push_back(std::move(s));
  }
  if (idx >= stage_index("pretrain-homogeneous")) c.theta_bar = t.homogeneous_params();
  c.field_frequencies = t.field().feature_map().frequency_matrix();
  if (idx >= stage_index("distill")) c.field_params = t.field().trunk().parameters();
  c.stress_scale = t.stress_scale();
  c.lambda_effective = t.lambda_effective();
  c.reports = std::move(reports);
  return c;
}

void restore_into(InverseTrainer& t, const TrainingCheckpoint& c) {
  const int idx = stage_index(c.stage);
  if (idx < 0) throw ConfigurationError("restore_into: unknown stage '" + c.stage + "'");
  if (static_cast<int>(c.interpolants.size()) != t.n_datasets())
    throw ConfigurationError("restore_into: checkpoint holds " +
                             std::to_string(c.interpolants.size()) +
                             " interpolants for " + std::to_string(t.n_datasets()) +
                             " datasets");
  for (int d = 0; d < t.n_datasets(); ++d) {
    const InterpolantState& s = c.interpolants[d];
    if (s.dataset != t.dataset(d).name)
      throw ConfigurationError("restore_into: dataset name mismatch at slot " +
                               std::to_string(d) + " ('" + s.dataset + "' vs '" +
                               t.dataset(d).name + "')");
    t.restore_interpolant(
        d, ContinuousFieldModel(c.config.interp, s.frequencies, s.params));
  }
  if (idx >= stage_index("pretrain-homogeneous")) {
    if (c.theta_bar.size() != t.field().spec().n_params())
      throw ConfigurationError("restore_into: theta_bar length mismatch");
    t.restore_homogeneous_params(c.theta_bar);
  }
  if (idx >= stage_index("distill")) {
    if (c.field_params.size() != t.field().trunk().parameters().size())
      throw ConfigurationError("restore_into: field parameter length mismatch");
    t.restore_field_params(c.field_params);
  }
  t.restore_lambda_effective(c.lambda_effective);
}

HyperNetworkField field_from_checkpoint(const TrainingCheckpoint& c) {
  if (c.field_params.size() == 0)
    throw ConfigurationError(
        "field_from_checkpoint: checkpoint predates the distill stage, no field "
        "parameters stored");
  return HyperNetworkField(c.config.spec, c.config.hyper, c.field_frequencies,
                           c.field_params);
}

void write_loss_history_csv(const std::string& path,
                            const std::vector<StageReport>& reports) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << "stage,epoch,equilibrium,traction,total\n";
  for (const StageReport& r : reports)
    for (const LossRecord& rec : r.history)
      out << r.stage << ',' << rec.epoch << ',' << format_real(rec.equilibrium) << ','
          << format_real(rec.traction) << ',' << format_real(rec.total) << "\n";
  if (!out) throw IoError("write failure: " + path);
}

}  // namespace hf
