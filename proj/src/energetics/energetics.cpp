#include "heartflow/energetics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace heartflow::energetics {

std::size_t GridSpec::count() const {
  return static_cast<std::size_t>(dims[0]) * static_cast<std::size_t>(dims[1]) * static_cast<std::size_t>(dims[2]);
}

std::size_t GridSpec::index(int i, int j, int k) const {
  return (static_cast<std::size_t>(k) * dims[1] + static_cast<std::size_t>(j)) * dims[0] + static_cast<std::size_t>(i);
}

Vec3 GridSpec::point(std::size_t idx) const {
  const auto i = static_cast<int>(idx % dims[0]);
  const auto j = static_cast<int>((idx / dims[0]) % dims[1]);
  const auto k = static_cast<int>(idx / (static_cast<std::size_t>(dims[0]) * dims[1]));
  return origin + Vec3(i * spacing.x(), j * spacing.y(), k * spacing.z());
}

double GridSpec::cell_volume() const { return spacing.x() * spacing.y() * spacing.z(); }

SampledVelocityField SampledVelocityField::on_grid(const GridSpec& grid, std::vector<Vec3> velocity, double rho,
                                                   double mu) {
  SampledVelocityField f;
  f.grid = grid;
  for (std::size_t i = 0; i < grid.count(); ++i) f.points.push_back(grid.point(i));
  f.cell_volumes.assign(grid.count(), grid.cell_volume());
  f.velocity = std::move(velocity);
  f.rho = rho;
  f.mu = mu;
  f.validate();
  return f;
}

SampledVelocityField SampledVelocityField::on_grid(const GridSpec& grid, const std::function<Vec3(const Vec3&)>& v,
                                                   double rho, double mu) {
  std::vector<Vec3> vel;
  vel.reserve(grid.count());
  for (std::size_t i = 0; i < grid.count(); ++i) vel.push_back(v(grid.point(i)));
  return on_grid(grid, std::move(vel), rho, mu);
}

SampledVelocityField SampledVelocityField::scattered(std::vector<Vec3> points, std::vector<double> volumes,
                                                     std::vector<Vec3> velocity, double rho, double mu) {
  SampledVelocityField f;
  f.points = std::move(points);
  f.cell_volumes = std::move(volumes);
  f.velocity = std::move(velocity);
  f.rho = rho;
  f.mu = mu;
  f.validate();
  return f;
}

void SampledVelocityField::validate() const {
  std::ostringstream err;
  if (!(rho > 0.0)) err << " density must be > 0;";
  if (!(mu > 0.0)) err << " viscosity must be > 0;";
  if (grid) {
    if (!(grid->spacing.array() > 0.0).all()) err << " grid spacing must be > 0;";
    for (int d : grid->dims)
      if (d < 1) err << " grid dimensions must be >= 1;";
  }
  if (points.size() != velocity.size() || cell_volumes.size() != velocity.size())
    err << " points, cell volumes and velocities differ in length;";
  for (double v : cell_volumes)
    if (!(v > 0.0)) {
      err << " cell volumes must be > 0;";
      break;
    }
  for (const auto& v : velocity)
    if (!v.allFinite()) {
      err << " non-finite velocity;";
      break;
    }
  if (!err.str().empty()) throw std::invalid_argument("velocity field:" + err.str());
}

double pairwise_sum(const double* v, std::size_t n) {
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += v[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(v, h) + pairwise_sum(v + h, n - h);
}

ChamberMask make_mask(const SampledVelocityField& f, const std::function<bool(const Vec3&)>& inside) {
  ChamberMask m;
  m.member.resize(f.size());
  std::vector<double> vols;
  for (std::size_t i = 0; i < f.size(); ++i) {
    m.member[i] = inside(f.points[i]);
    if (m.member[i]) vols.push_back(f.cell_volumes[i]);
  }
  m.volume = pairwise_sum(vols.data(), vols.size());
  return m;
}

void ChamberMask::validate(const SampledVelocityField& f) const {
  if (member.size() != f.size()) throw std::invalid_argument("chamber mask: size differs from the field");
  std::vector<double> vols;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (member[i]) vols.push_back(f.cell_volumes[i]);
  if (vols.empty()) throw std::invalid_argument("chamber mask: no member samples");
  const double sum = pairwise_sum(vols.data(), vols.size());
  if (std::abs(sum - volume) > 1e-9 * std::max(1.0, sum))
    throw std::invalid_argument("chamber mask: volume does not match its member cells");
}

std::vector<double> kinetic_energy_density(const SampledVelocityField& f) {
  std::vector<double> e(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) e[i] = 0.5 * f.rho * f.velocity[i].squaredNorm();
  return e;
}

std::vector<Eigen::Matrix3d> strain_rate(const SampledVelocityField& f) {
  if (!f.grid) throw std::invalid_argument("strain_rate: needs a regular grid");
  f.validate();
  const auto& g = *f.grid;
  for (int a = 0; a < 3; ++a)
    if (g.dims[a] == 2) throw std::invalid_argument("strain_rate: active axes need at least 3 samples");
  std::vector<Eigen::Matrix3d> out(f.size());
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::array<int, 3> c{i, j, k};
        Eigen::Matrix3d grad = Eigen::Matrix3d::Zero();  // grad(r, a) = d v_r / d x_a
        for (int a = 0; a < 3; ++a) {
          const int n = g.dims[a];
          if (n == 1) continue;
          auto at = [&](int m) {
            auto cc = c;
            cc[a] = m;
            return f.velocity[g.index(cc[0], cc[1], cc[2])];
          };
          const double h = g.spacing[a];
          Vec3 d;
          if (c[a] == 0)
            d = (-3.0 * at(0) + 4.0 * at(1) - at(2)) / (2.0 * h);
          else if (c[a] == n - 1)
            d = (3.0 * at(n - 1) - 4.0 * at(n - 2) + at(n - 3)) / (2.0 * h);
          else
            d = (at(c[a] + 1) - at(c[a] - 1)) / (2.0 * h);
          grad.col(a) = d;
        }
        out[g.index(i, j, k)] = 0.5 * (grad + grad.transpose());
      }
  return out;
}

std::vector<double> dissipation_density(const std::vector<Eigen::Matrix3d>& s, double mu) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = 2.0 * mu * s[i].cwiseAbs2().sum();
  return out;
}

std::vector<double> dissipation_density(const SampledVelocityField& f) {
  return dissipation_density(strain_rate(f), f.mu);
}

double chamber_average(const std::vector<double>& values, const SampledVelocityField& f, const ChamberMask& mask) {
  if (values.size() != f.size()) throw std::invalid_argument("chamber_average: value count differs from the field");
  mask.validate(f);
  std::vector<double> terms;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (mask.member[i]) terms.push_back(values[i] * f.cell_volumes[i]);
  return pairwise_sum(terms.data(), terms.size()) / mask.volume;
}

std::optional<double> dissipation_ke_ratio(double phi_mean, double ke_mean) {
  if (!(ke_mean > kKineticEnergyFloor)) return std::nullopt;
  return phi_mean / ke_mean;
}

EnergeticsSample chamber_energetics(double t, const SampledVelocityField& f, const ChamberMask& mask) {
  EnergeticsSample s;
  s.t = t;
  s.ke_mean = chamber_average(kinetic_energy_density(f), f, mask);
  s.dissipation_mean = chamber_average(dissipation_density(f), f, mask);
  s.ratio = dissipation_ke_ratio(s.dissipation_mean, s.ke_mean);
  return s;
}

}  // namespace heartflow::energetics
