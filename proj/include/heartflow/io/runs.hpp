#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "heartflow/energetics.hpp"
#include "heartflow/io/config.hpp"

namespace heartflow::io {

/// Failure inside a run pipeline; the message names the subcommand and the
/// step or iteration where it happened.
class RunError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputFile {
  std::string name;  // relative to the output directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunManifest {
  std::string command;
  std::string config_hash;  // SHA-256 of the effective config written as config.cfg
  std::string code_version;
  std::uint64_t seed = 0;
  double wall_clock_s = 0.0;
  std::string output_dir;
  std::vector<OutputFile> outputs;  // sorted by name, manifest.json excluded
};

const char* code_version();
std::string sha256_hex(const std::string& bytes);
std::string file_sha256(const std::string& path);
/// Writes <output_dir>/manifest.json.
void write_manifest(const RunManifest& m);

/// Each pipeline writes its CSV tables (and SVG plots when config.plots is
/// set) into config.output_dir, together with config.cfg holding the
/// effective configuration, and ends with manifest.json. Input files are
/// only read.
RunManifest run_simulate(const ScenarioConfig& config);
RunManifest run_calibrate(const ScenarioConfig& config);
RunManifest run_register(const ScenarioConfig& config);
RunManifest run_sdf(const ScenarioConfig& config);
RunManifest run_energetics(const ScenarioConfig& config);
RunManifest run_contact_demo(const ScenarioConfig& config);

/// Velocity samples from a CSV with columns x,y,z,u,v,w and optional t. Rows
/// sharing a time form one frame (in order of first appearance); each
/// frame's points must fill a regular grid, from which the grid is inferred.
std::vector<std::pair<double, energetics::SampledVelocityField>> read_velocity_csv(const std::string& path,
                                                                                  double rho, double mu);

/// Mask CSV with columns x,y,z,inside (0/1) matched to the field's grid
/// nodes; grid nodes not listed are outside.
energetics::ChamberMask read_mask_csv(const std::string& path, const energetics::SampledVelocityField& field);

}  // namespace heartflow::io
