#pragma once

// Velocity network v(x, y, z, t) -> R^3 and its fixed-step Euler flow.

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

namespace heartflow::registration {

using PointSet = Eigen::Matrix3Xd;  // one column per point

inline constexpr int kLayers = 6;
inline constexpr int kInputs = 4;  // x, y, z, t
inline constexpr double kLeakySlope = 0.02;
inline constexpr double kEulerStep = 0.2;
inline constexpr int kEulerSteps = 5;

class VelocityNetwork {
 public:
  /// All weights and biases zero: the flow is the identity map.
  static VelocityNetwork zeros(int width = 64);
  /// He-normal hidden layers; output layer scaled by `output_scale`
  /// (0 keeps the initial flow the identity while gradients still reach
  /// every layer).
  static VelocityNetwork initialized(std::uint64_t seed, int width = 64, double output_scale = 0.0);

  int width() const { return width_; }
  Eigen::MatrixXd& weight(int layer) { return w_[layer]; }
  Eigen::VectorXd& bias(int layer) { return b_[layer]; }
  const Eigen::MatrixXd& weight(int layer) const { return w_[layer]; }
  const Eigen::VectorXd& bias(int layer) const { return b_[layer]; }

  /// Velocity at every point for time t.
  PointSet velocity(const PointSet& x, double t) const;

  std::size_t parameter_count() const;
  /// Flattened as W_0 (column-major), b_0, W_1, b_1, ...
  Eigen::VectorXd parameters() const;
  void set_parameters(const Eigen::VectorXd& p);

  /// Accumulates d(sum <g, v>)/dtheta into `param_grad` and returns
  /// d(sum <g, v>)/dx for the batch.
  PointSet backward(const PointSet& x, double t, const PointSet& g, Eigen::VectorXd& param_grad) const;

 private:
  explicit VelocityNetwork(int width);
  int width_;
  std::array<Eigen::MatrixXd, kLayers> w_;
  std::array<Eigen::VectorXd, kLayers> b_;
};

/// p <- p + 0.2 v(p, t) for t = 0, 0.2, ... up to t_end. t_end must be a
/// multiple of the step in [0, 1].
PointSet integrate(const VelocityNetwork& net, const PointSet& points, double t_end = 1.0);

/// Positions after each Euler step, starting with the input (6 entries for
/// the full interval).
std::vector<PointSet> trajectory(const VelocityNetwork& net, const PointSet& points);

/// Gradient of a loss with respect to the parameters, given the gradient
/// with respect to the points after the full interval.
Eigen::VectorXd integrate_backward(const VelocityNetwork& net, const PointSet& points,
                                   const PointSet& grad_out);

/// Composed deformation modules, applied in order.
struct DeformationModel {
  std::vector<VelocityNetwork> modules;

  /// Output of the first `count` modules (all when count < 0).
  PointSet apply(const PointSet& points, int count = -1) const;
};

DeformationModel make_model(int modules, std::uint64_t seed, int width = 64);

}  // namespace heartflow::registration
