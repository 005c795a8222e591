#pragma once

// Kinetic energy, viscous dissipation and their chamber averages on sampled
// velocity fields. CGS units: cm, s, g (energy densities in dyne/cm^2).

#include <array>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace heartflow::energetics {

using Vec3 = Eigen::Vector3d;

inline constexpr double kDefaultDensity = 1.06;     // g/cm^3
inline constexpr double kDefaultViscosity = 0.04;   // g/(cm s)
inline constexpr double kKineticEnergyFloor = 1e-12;

struct GridSpec {
  Vec3 origin = Vec3::Zero();
  Vec3 spacing = Vec3::Ones();
  std::array<int, 3> dims{1, 1, 1};

  std::size_t count() const;
  std::size_t index(int i, int j, int k) const;  // x fastest
  Vec3 point(std::size_t idx) const;
  double cell_volume() const;
};

struct SampledVelocityField {
  std::optional<GridSpec> grid;  // absent for scattered samples
  std::vector<Vec3> points;
  std::vector<double> cell_volumes;
  std::vector<Vec3> velocity;
  double rho = kDefaultDensity;
  double mu = kDefaultViscosity;

  static SampledVelocityField on_grid(const GridSpec& grid, std::vector<Vec3> velocity,
                                      double rho = kDefaultDensity, double mu = kDefaultViscosity);
  /// Samples the velocity function at the grid points.
  static SampledVelocityField on_grid(const GridSpec& grid, const std::function<Vec3(const Vec3&)>& v,
                                      double rho = kDefaultDensity, double mu = kDefaultViscosity);
  static SampledVelocityField scattered(std::vector<Vec3> points, std::vector<double> cell_volumes,
                                        std::vector<Vec3> velocity, double rho = kDefaultDensity,
                                        double mu = kDefaultViscosity);

  std::size_t size() const { return velocity.size(); }
  void validate() const;
};

struct ChamberMask {
  std::vector<bool> member;
  double volume = 0.0;  // mL

  /// Volume must equal the summed member cell volumes within 1e-9.
  void validate(const SampledVelocityField& field) const;
};

ChamberMask make_mask(const SampledVelocityField& field, const std::function<bool(const Vec3&)>& inside);

/// 0.5 rho |v|^2 per sample.
std::vector<double> kinetic_energy_density(const SampledVelocityField& field);

/// S = (grad v + grad v^T) / 2 per sample, from second-order central
/// differences inside and second-order one-sided differences on the
/// boundary. Axes with one sample are treated as inactive (zero
/// derivative); active axes need at least 3 samples.
std::vector<Eigen::Matrix3d> strain_rate(const SampledVelocityField& field);

/// 2 mu S:S per sample.
std::vector<double> dissipation_density(const SampledVelocityField& field);
std::vector<double> dissipation_density(const std::vector<Eigen::Matrix3d>& strain, double mu);

/// Volume-weighted mean over the mask's samples (pairwise summation).
double chamber_average(const std::vector<double>& values, const SampledVelocityField& field,
                       const ChamberMask& mask);

/// phi / e_KE, or nothing when e_KE is not above the floor.
std::optional<double> dissipation_ke_ratio(double phi_mean, double ke_mean);

struct EnergeticsSample {
  double t = 0.0;
  double ke_mean = 0.0;
  double dissipation_mean = 0.0;
  std::optional<double> ratio;
};

EnergeticsSample chamber_energetics(double t, const SampledVelocityField& field, const ChamberMask& mask);

/// Deterministic pairwise sum.
double pairwise_sum(const double* v, std::size_t n);

}  // namespace heartflow::energetics
