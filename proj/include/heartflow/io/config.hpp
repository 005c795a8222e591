#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "heartflow/contact.hpp"
#include "heartflow/geometry/mesh.hpp"
#include "heartflow/heartnet/calibrate.hpp"
#include "heartflow/heartnet/presets.hpp"
#include "heartflow/registration/train.hpp"

namespace heartflow::io {

/// Every violation found while loading or validating a configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const { return violations_; }

 private:
  std::vector<std::string> violations_;
};

struct CalibrateSection {
  std::vector<std::string> free_parameters;
  std::vector<std::string> target_names;  // section suffixes, parallel to targets
  std::vector<heartnet::PressureTarget> targets;
  heartnet::CalibrationOptions options;
};

struct RegisterSection {
  std::string baseline = "sphere";  // "sphere" or a mesh file
  double radius = 1.0;
  int subdivisions = 2;
  /// "translate" builds `frames` copies of the baseline shifted by k * offset;
  /// otherwise a comma-separated list of mesh files.
  std::string targets = "translate";
  geometry::Vec3 offset{0.3, 0.0, 0.0};
  int frames = 1;
  registration::TrainOptions options;
  registration::LossWeights weights;
  int weight_samples = 0;  // > 0 runs the Dirichlet search and trains with its best weights
  int search_iterations = 100;
};

struct SdfSection {
  std::string mesh = "sphere";  // "sphere", "box" or a mesh file
  double radius = 1.0;
  int subdivisions = 3;
  geometry::Vec3 lo{-1.5, -1.5, -1.5};
  geometry::Vec3 hi{1.5, 1.5, 1.5};
  std::array<int, 3> samples{16, 16, 16};
  double epsilon = 0.1;
  std::string valve_state = "closed";
};

struct EnergeticsSection {
  /// CSV with x,y,z,u,v,w[,t] on a regular grid, or "synthetic" for a
  /// pulsatile shear flow in a box.
  std::string field = "synthetic";
  std::string mask;  // optional CSV x,y,z,inside
  double rho = 1.06;
  double mu = 0.04;
  int synthetic_steps = 20;
  double synthetic_shear = 50.0;  // 1/s
};

struct ContactSection {
  contact::ContactConfig penalty{1.0, 0.1};
  int pairs = 16;
};

struct ScenarioConfig {
  std::string topology = "healthy";
  heartnet::Scenario scenario = heartnet::healthy_preset();
  /// Waveform CSV per chamber (LA, LV, RA, RV); empty means synthesized.
  std::array<std::string, heartnet::kChamberCount> waveform_files;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  bool plots = false;
  CalibrateSection calibrate;
  RegisterSection registration;
  SdfSection sdf;
  EnergeticsSection energetics;
  ContactSection contact;

  /// Rebuilds the chamber waveforms (synthetic or from the listed files).
  void build_waveforms();
  /// Throws ConfigError listing every violated rule.
  void validate() const;
};

/// Loads an INI file. Keys not present keep the values of the preset named
/// by [scenario] topology. Unknown sections or keys, unparsable values and
/// rule violations are all reported together. Relative file names are
/// resolved against the file's directory.
ScenarioConfig load_config(const std::string& path);
ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");

/// Canonical INI text of a configuration; parse_config(to_ini(c)) == c.
std::string to_ini(const ScenarioConfig& config);

}  // namespace heartflow::io
