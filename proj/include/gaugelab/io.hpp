#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "gaugelab/connection.hpp"

namespace gaugelab {

// Cochain binary layout, all little-endian:
//   "GLCC" u32 version u32 degree u32 n u32 axes
//   per axis: i32 length, f64 spacing, u8 block
//   u64 cells, then per cell the n x n complex matrix row-major as (re, im) f64 pairs.
void write_cochain(std::ostream& os, const Cochain& x);
// grid may be null, in which case it is rebuilt from the header; otherwise the header must match it
Cochain read_cochain(std::istream& is, GridPtr grid = nullptr);

nlohmann::json grid_to_json(const GridSpec& s);
GridSpec grid_from_json(const nlohmann::json& j);
nlohmann::json cochain_to_json(const Cochain& x);
Cochain cochain_from_json(const nlohmann::json& j, GridPtr grid = nullptr);

struct CheckpointMeta {
  double epsilon = 1.0;
  std::uint64_t seed = 0;
  InnerProductSpec ip;
  std::string fingerprint;
};

// Connection checkpoint: "GLCX" u32 version, grid header, u32 n, reference links per 1-cell
// (n x n complex row-major), then the deviation as a cochain block. The JSON manifest carries
// twist, epsilon, kappa, seed and fingerprint.
void write_checkpoint(const std::string& bin_path, const std::string& manifest_path, const Connection& c,
                      const CheckpointMeta& meta);
Connection read_checkpoint(const std::string& bin_path, const std::string& manifest_path, CheckpointMeta* meta = nullptr);

}  // namespace gaugelab
