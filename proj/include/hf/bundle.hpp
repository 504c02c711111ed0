// Dataset bundle: one loading experiment stored as a directory containing a
// manifest, one CSV per load step with nodal kinematics, and a boundary CSV
// with the force record.  The on-disk doubles are printed with 17 significant
// digits, so a write/read round trip is bit-exact.  Readers refuse bundles
// whose format version they do not know.
#pragma once

#include <string>
#include <vector>

#include "hf/dataset.hpp"
#include "hf/serialize.hpp"
#include "hf/types.hpp"

namespace hf {

// Provenance carried alongside the numerical data.  `phase` is a free-form
// JSON record (ground-truth material table, mask file name, preset name);
// null when the origin is unknown (e.g. imported measurements).
struct BundleInfo {
  std::uint64_t seed = 0;
  std::string loading_mode;   // label such as "equibiaxial"; may be empty
  Real noise_sigma = 0.0;
  std::vector<Real> snr_db;   // per-step noise level; empty when noiseless
  Json phase;                 // defaults to null
};

// Writes `data` (validated first) into directory `dir`, creating it if
// needed.  Existing files of the same names are overwritten.
void write_dataset_bundle(const std::string& dir, const Dataset& data,
                          const BundleInfo& info = {});

// Reads a bundle directory back; the result passes Dataset::validate().
// When `info` is non-null the provenance block is returned through it.
Dataset read_dataset_bundle(const std::string& dir, BundleInfo* info = nullptr);

// Formats a double with enough digits to reproduce the same bits on read.
std::string format_real(Real x);

// Splits one CSV line on commas; fields may be empty, no quoting support.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace hf
