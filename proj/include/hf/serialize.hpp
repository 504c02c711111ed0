// JSON conversions for configuration structs and dense matrices, used by the
// dataset-bundle manifests and training checkpoints.  Doubles round-trip
// exactly (shortest-representation printing on write, strtod on read).
#pragma once

#include <json.hpp>

#include "hf/constitutive.hpp"
#include "hf/field_interp.hpp"
#include "hf/hyper_field.hpp"
#include "hf/materials.hpp"
#include "hf/trainer.hpp"
#include "hf/types.hpp"

namespace hf {

using Json = nlohmann::json;

Json matrix_to_json(const MatX& m);
MatX matrix_from_json(const Json& j);
Json vector_to_json(const VecX& v);
VecX vector_from_json(const Json& j);

Json grid_to_json(const Grid2D& g);
Grid2D grid_from_json(const Json& j);

Json term_to_json(const TermSpec& t);
TermSpec term_from_json(const Json& j);
Json spec_to_json(const NodeModelSpec& s);
NodeModelSpec spec_from_json(const Json& j);

Json interp_config_to_json(const InterpolantConfig& c);
InterpolantConfig interp_config_from_json(const Json& j);
Json hyper_config_to_json(const HyperConfig& c);
HyperConfig hyper_config_from_json(const Json& j);

Json trainer_config_to_json(const TrainerConfig& c);
TrainerConfig trainer_config_from_json(const Json& j);

Json material_to_json(const Material& m);
Material material_from_json(const Json& j);

// Reads a JSON document from disk, translating parse failures into IoError.
Json load_json_file(const std::string& path);
void save_json_file(const std::string& path, const Json& j);

}  // namespace hf
