#include "heartflow/registration/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>

#include <Eigen/SVD>

namespace heartflow::registration {

void LossWeights::validate() const {
  if (!(point >= 0.0 && normal >= 0.0 && arap >= 0.0))
    throw std::invalid_argument("loss weights must be non-negative");
  if (std::abs(point + normal + arap - 1.0) > 1e-9)
    throw std::invalid_argument("loss weights must sum to 1");
}

double loss_point(const PointSet& p, const PointSet& g, PointSet* grad) {
  if (p.cols() == 0 || g.cols() == 0) throw std::invalid_argument("loss_point: empty point set");
  const NearestGrid gg(g), pg(p);
  if (grad) *grad = PointSet::Zero(3, p.cols());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const auto nb = gg.nearest(p.col(i));
    sum += nb.distance_sq;
    if (grad) grad->col(i) += 2.0 * (p.col(i) - g.col(nb.index));
  }
  for (Eigen::Index j = 0; j < g.cols(); ++j) {
    const auto nb = pg.nearest(g.col(j));
    sum += nb.distance_sq;
    if (grad) grad->col(nb.index) += 2.0 * (p.col(nb.index) - g.col(j));
  }
  return sum;
}

std::vector<std::array<int, 2>> incident_edges(const Faces& faces, int vertex_count) {
  std::vector<std::array<int, 2>> out(static_cast<std::size_t>(vertex_count), {-1, -1});
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k) {
      auto& e = out[static_cast<std::size_t>(f[k])];
      if (e[0] < 0) e = {f[(k + 1) % 3], f[(k + 2) % 3]};
    }
  return out;
}

PointSet vertex_normals(const PointSet& v, const Faces& faces) {
  PointSet n = PointSet::Zero(3, v.cols());
  for (const auto& f : faces) {
    const Eigen::Vector3d c = (v.col(f[1]) - v.col(f[0])).cross(v.col(f[2]) - v.col(f[0]));
    for (int k : f) n.col(k) += c;
  }
  for (Eigen::Index i = 0; i < n.cols(); ++i) {
    const double len = n.col(i).norm();
    if (len > 0.0) n.col(i) /= len;
  }
  return n;
}

NormalLoss loss_normal(const PointSet& p, const std::vector<std::array<int, 2>>& incident, const PointSet& g,
                       const PointSet& g_normals, PointSet* grad, const NearestGrid* g_grid) {
  if (p.cols() == 0 || g.cols() == 0) throw std::invalid_argument("loss_normal: empty point set");
  if (static_cast<Eigen::Index>(incident.size()) != p.cols() || g_normals.cols() != g.cols())
    throw std::invalid_argument("loss_normal: size mismatch");
  std::optional<NearestGrid> own;
  if (!g_grid) g_grid = &own.emplace(g);
  if (grad) *grad = PointSet::Zero(3, p.cols());
  NormalLoss out;
  for (Eigen::Index i = 0; i < p.cols(); ++i) {
    const Eigen::Vector3d n = g_normals.col(g_grid->nearest(p.col(i)).index);
    const auto [a, b] = incident[static_cast<std::size_t>(i)];
    Eigen::Vector3d c = Eigen::Vector3d::Zero(), e1, e2;
    if (a >= 0) {
      e1 = p.col(a) - p.col(i);
      e2 = p.col(b) - p.col(i);
      c = e1.cross(e2);
    }
    if (c.squaredNorm() == 0.0) ++out.degenerate;
    const Eigen::Vector3d r = c - n;
    out.value += r.squaredNorm();
    if (grad && a >= 0) {
      const Eigen::Vector3d dc = 2.0 * r;
      const Eigen::Vector3d g1 = e2.cross(dc), g2 = dc.cross(e1);
      grad->col(a) += g1;
      grad->col(b) += g2;
      grad->col(i) -= g1 + g2;
    }
  }
  return out;
}

ArapNeighbours cotangent_weights(const PointSet& v, const Faces& faces) {
  std::map<std::pair<int, int>, double> w;
  for (const auto& f : faces)
    for (int k = 0; k < 3; ++k) {
      const int i = f[k], j = f[(k + 1) % 3], o = f[(k + 2) % 3];
      const Eigen::Vector3d a = v.col(i) - v.col(o), b = v.col(j) - v.col(o);
      const double s = a.cross(b).norm();
      const double cot = s > 0.0 ? a.dot(b) / s : 0.0;
      w[std::minmax(i, j)] += 0.5 * cot;
    }
  ArapNeighbours nb;
  nb.adj.resize(static_cast<std::size_t>(v.cols()));
  for (const auto& [e, weight] : w) {
    const double c = std::max(0.0, weight);
    nb.adj[e.first].push_back({e.second, c});
    nb.adj[e.second].push_back({e.first, c});
  }
  return nb;
}

namespace {

struct Polar {
  Eigen::Matrix3d r;
  Eigen::Matrix3d v;  // eigenvectors of the symmetric factor
  Eigen::Vector3d h;  // its (signed) eigenvalues
};

Polar polar(const Eigen::Matrix3d& a) {
  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Vector3d d(1.0, 1.0, (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0);
  Polar p;
  p.r = svd.matrixU() * d.asDiagonal() * svd.matrixV().transpose();
  p.v = svd.matrixV();
  p.h = d.cwiseProduct(svd.singularValues());
  return p;
}

Eigen::Matrix3d covariance(const PointSet& ref, const PointSet& def, const ArapNeighbours& nb, int i) {
  Eigen::Matrix3d a = Eigen::Matrix3d::Zero();
  for (const auto& [j, w] : nb.adj[static_cast<std::size_t>(i)])
    a += w * (def.col(i) - def.col(j)) * (ref.col(i) - ref.col(j)).transpose();
  return a;
}

}  // namespace

Eigen::Matrix3d arap_rotation(const PointSet& ref, const PointSet& def, const ArapNeighbours& nb, int i) {
  return polar(covariance(ref, def, nb, i)).r;
}

double loss_arap(const PointSet& ref, const PointSet& def, const ArapNeighbours& nb, PointSet* grad) {
  if (ref.cols() != def.cols() || static_cast<Eigen::Index>(nb.adj.size()) != ref.cols())
    throw std::invalid_argument("loss_arap: size mismatch");
  if (grad) *grad = PointSet::Zero(3, def.cols());
  double total = 0.0;
  for (Eigen::Index i = 0; i < ref.cols(); ++i) {
    const auto& adj = nb.adj[static_cast<std::size_t>(i)];
    if (adj.empty()) continue;
    const Eigen::Matrix3d a = covariance(ref, def, nb, static_cast<int>(i));
    const Polar pr = polar(a);
    Eigen::Matrix3d g_r = Eigen::Matrix3d::Zero();  // dL/dR_i
    for (const auto& [j, w] : adj) {
      const Eigen::Vector3d e = ref.col(i) - ref.col(j);
      const Eigen::Vector3d r = (def.col(i) - def.col(j)) - pr.r * e;
      const double len = r.norm();
      total += w * len;
      if (!grad || len == 0.0 || w == 0.0) continue;
      const Eigen::Vector3d u = w * r / len;
      grad->col(i) += u;
      grad->col(j) -= u;
      g_r -= u * e.transpose();
    }
    if (!grad) continue;
    // Differentiate the polar factor: with A = R H, dR = R W where
    // W H + H W = R^T dA - dA^T R. Solved in the eigenbasis of H.
    const Eigen::Matrix3d k = pr.r.transpose() * g_r;
    const Eigen::Matrix3d s = pr.v.transpose() * (0.5 * (k - k.transpose())) * pr.v;
    Eigen::Matrix3d y = Eigen::Matrix3d::Zero();
    const double scale = pr.h.cwiseAbs().maxCoeff();
    for (int p = 0; p < 3; ++p)
      for (int q = 0; q < 3; ++q) {
        const double den = pr.h[p] + pr.h[q];
        if (p != q && std::abs(den) > 1e-12 * scale) y(p, q) = s(p, q) / den;
      }
    const Eigen::Matrix3d g_a = 2.0 * pr.r * (pr.v * y * pr.v.transpose());
    for (const auto& [j, w] : adj) {
      const Eigen::Vector3d d = w * g_a * (ref.col(i) - ref.col(j));
      grad->col(i) += d;
      grad->col(j) -= d;
    }
  }
  return total;
}

double loss_total(double point, double normal, double arap, const LossWeights& w) {
  if (point < 0.0 || normal < 0.0 || arap < 0.0) throw std::invalid_argument("loss_total: negative loss");
  auto term = [](double l, double lambda) { return lambda == 0.0 ? 1.0 : std::pow(std::max(l, kLossFloor), lambda); };
  return term(point, w.point) * term(normal, w.normal) * term(arap, w.arap);
}

std::vector<LossWeights> sample_weights(int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_weights: n must be >= 1");
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> gamma1(1.0);  // Gamma(1, 1)
  std::vector<LossWeights> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double a = gamma1(rng), b = gamma1(rng), c = gamma1(rng);
    const double s = a + b + c;
    out.push_back({a / s, b / s, c / s});
  }
  return out;
}

double chamfer_rms(const PointSet& p, const PointSet& g) {
  return std::sqrt(loss_point(p, g) / static_cast<double>(p.cols() + g.cols()));
}

}  // namespace heartflow::registration
