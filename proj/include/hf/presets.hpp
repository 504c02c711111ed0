// Built-in specimen presets: material tables, inclusion geometry, loading
// programs and trainer settings tuned per scale.  Full-scale presets use the
// 50x50-element mesh; the -desk variants run the same specimens at 25x25
// elements with shorter stage budgets for quick reproductions, and `smoke`
// is a minutes-scale end-to-end exercise.
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hf/forward_fem.hpp"
#include "hf/materials.hpp"
#include "hf/trainer.hpp"
#include "hf/types.hpp"

namespace hf {

struct Preset {
  std::string name;
  std::string description;
  int elements = 50;  // elements per direction; grid has elements+1 nodes
  std::vector<Material> materials;
  // Label of the element whose center sits at X (unit-square coordinates).
  std::function<int(const Vec2&)> label_of;
  std::vector<LoadingMode> programs;  // one dataset synthesized per program
  std::vector<Real> lambda_steps;
  Real noise_sigma = 0.0;  // default measurement noise
  TrainerConfig trainer;   // budgets tuned for this preset's scale
};

const std::vector<std::string>& preset_names();
Preset make_preset(const std::string& name);  // ConfigurationError on unknown

// The stretch schedule used by the inclusion reproductions (five equibiaxial
// grip stretches).
const std::vector<Real>& standard_lambda_steps();

}  // namespace hf
