#include "heartflow/registration/network.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace heartflow::registration {

namespace {

int layer_inputs(int layer, int width) { return layer == 0 ? kInputs : width; }
int layer_outputs(int layer, int width) { return layer == kLayers - 1 ? 3 : width; }

Eigen::MatrixXd leaky(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? v : kLeakySlope * v; });
}

Eigen::MatrixXd leaky_slope(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return v > 0.0 ? 1.0 : kLeakySlope; });
}

Eigen::MatrixXd with_time(const PointSet& x, double t) {
  Eigen::MatrixXd in(kInputs, x.cols());
  in.topRows(3) = x;
  in.row(3).setConstant(t);
  return in;
}

int step_count(double t_end) {
  const double n = t_end / kEulerStep;
  const long r = std::lround(n);
  if (t_end < 0.0 || t_end > 1.0 + 1e-12 || std::abs(n - static_cast<double>(r)) > 1e-9)
    throw std::invalid_argument("integrate: t_end must be a multiple of 0.2 in [0, 1]");
  return static_cast<int>(r);
}

}  // namespace

VelocityNetwork::VelocityNetwork(int width) : width_(width) {
  if (width < 1) throw std::invalid_argument("VelocityNetwork: width must be >= 1");
  for (int l = 0; l < kLayers; ++l) {
    w_[l] = Eigen::MatrixXd::Zero(layer_outputs(l, width), layer_inputs(l, width));
    b_[l] = Eigen::VectorXd::Zero(layer_outputs(l, width));
  }
}

VelocityNetwork VelocityNetwork::zeros(int width) { return VelocityNetwork(width); }

VelocityNetwork VelocityNetwork::initialized(std::uint64_t seed, int width, double output_scale) {
  VelocityNetwork n(width);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int l = 0; l < kLayers; ++l) {
    const double scale = std::sqrt(2.0 / layer_inputs(l, width)) * (l == kLayers - 1 ? output_scale : 1.0);
    for (Eigen::Index i = 0; i < n.w_[l].size(); ++i) n.w_[l].data()[i] = scale * g(rng);
  }
  return n;
}

PointSet VelocityNetwork::velocity(const PointSet& x, double t) const {
  Eigen::MatrixXd a = with_time(x, t);
  for (int l = 0; l < kLayers - 1; ++l) a = leaky((w_[l] * a).colwise() + b_[l]);
  return (w_[kLayers - 1] * a).colwise() + b_[kLayers - 1];
}

std::size_t VelocityNetwork::parameter_count() const {
  std::size_t n = 0;
  for (int l = 0; l < kLayers; ++l) n += static_cast<std::size_t>(w_[l].size() + b_[l].size());
  return n;
}

Eigen::VectorXd VelocityNetwork::parameters() const {
  Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
  Eigen::Index o = 0;
  for (int l = 0; l < kLayers; ++l) {
    p.segment(o, w_[l].size()) = w_[l].reshaped();
    o += w_[l].size();
    p.segment(o, b_[l].size()) = b_[l];
    o += b_[l].size();
  }
  return p;
}

void VelocityNetwork::set_parameters(const Eigen::VectorXd& p) {
  if (static_cast<std::size_t>(p.size()) != parameter_count())
    throw std::invalid_argument("set_parameters: wrong parameter count");
  Eigen::Index o = 0;
  for (int l = 0; l < kLayers; ++l) {
    w_[l].reshaped() = p.segment(o, w_[l].size());
    o += w_[l].size();
    b_[l] = p.segment(o, b_[l].size());
    o += b_[l].size();
  }
}

PointSet VelocityNetwork::backward(const PointSet& x, double t, const PointSet& g,
                                   Eigen::VectorXd& param_grad) const {
  if (static_cast<std::size_t>(param_grad.size()) != parameter_count())
    param_grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(parameter_count()));
  std::array<Eigen::MatrixXd, kLayers> in;  // input of each layer
  std::array<Eigen::MatrixXd, kLayers - 1> z;
  in[0] = with_time(x, t);
  for (int l = 0; l < kLayers - 1; ++l) {
    z[l] = (w_[l] * in[l]).colwise() + b_[l];
    in[l + 1] = leaky(z[l]);
  }
  std::array<Eigen::Index, kLayers> offset;
  Eigen::Index o = 0;
  for (int l = 0; l < kLayers; ++l) {
    offset[l] = o;
    o += w_[l].size() + b_[l].size();
  }
  Eigen::MatrixXd delta = g;
  for (int l = kLayers - 1; l >= 0; --l) {
    if (l < kLayers - 1) delta = delta.cwiseProduct(leaky_slope(z[l]));
    const Eigen::MatrixXd dw = delta * in[l].transpose();
    param_grad.segment(offset[l], dw.size()) += dw.reshaped();
    param_grad.segment(offset[l] + dw.size(), b_[l].size()) += delta.rowwise().sum();
    delta = w_[l].transpose() * delta;
  }
  return delta.topRows(3);
}

PointSet integrate(const VelocityNetwork& net, const PointSet& points, double t_end) {
  const int n = step_count(t_end);
  PointSet p = points;
  for (int k = 0; k < n; ++k) p += kEulerStep * net.velocity(p, k * kEulerStep);
  return p;
}

std::vector<PointSet> trajectory(const VelocityNetwork& net, const PointSet& points) {
  std::vector<PointSet> out = {points};
  for (int k = 0; k < kEulerSteps; ++k) out.push_back(out.back() + kEulerStep * net.velocity(out.back(), k * kEulerStep));
  return out;
}

Eigen::VectorXd integrate_backward(const VelocityNetwork& net, const PointSet& points, const PointSet& grad_out) {
  const auto traj = trajectory(net, points);
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.parameter_count()));
  PointSet lambda = grad_out;
  for (int k = kEulerSteps - 1; k >= 0; --k) {
    const PointSet gx = net.backward(traj[k], k * kEulerStep, kEulerStep * lambda, grad);
    lambda += gx;
  }
  return grad;
}

PointSet DeformationModel::apply(const PointSet& points, int count) const {
  const int n = count < 0 ? static_cast<int>(modules.size()) : count;
  if (n > static_cast<int>(modules.size())) throw std::invalid_argument("apply: not that many modules");
  PointSet p = points;
  for (int m = 0; m < n; ++m) p = integrate(modules[m], p);
  return p;
}

DeformationModel make_model(int modules, std::uint64_t seed, int width) {
  if (modules < 1) throw std::invalid_argument("make_model: need at least one module");
  DeformationModel m;
  for (int i = 0; i < modules; ++i) m.modules.push_back(VelocityNetwork::initialized(seed + 7919u * i, width));
  return m;
}

}  // namespace heartflow::registration
