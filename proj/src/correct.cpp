#include "nsreg/correct.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include <Eigen/Dense>

#include "nsreg/error.hpp"

namespace nsreg {

HomogeneityCriterion default_criterion(const Scene& scene, double fraction) {
  if (!(fraction >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "homogeneity fraction must be >= 0");
  }
  const Histogram h = foreground_histogram(scene);
  return {fraction * static_cast<double>(percentile_intensity(h, 50.0))};
}

double BiasModel::operator()(double x, double y, double z) const noexcept {
  const auto& c = coefficients;
  return c[0] + c[1] * x + c[2] * y + c[3] * z + c[4] * x * x + c[5] * y * y + c[6] * z * z +
         c[7] * x * y + c[8] * x * z + c[9] * y * z;
}

std::vector<std::size_t> largest_homogeneous_region(const Scene& scene,
                                                    HomogeneityCriterion crit) {
  if (!(crit.theta >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "theta must be >= 0");
  const Dims& d = scene.dims();
  const auto values = scene.intensities();
  std::vector<std::int32_t> component(values.size(), -1);

  std::vector<std::size_t> best;
  std::vector<std::size_t> current;
  std::deque<std::size_t> queue;
  std::int32_t next_id = 0;
  for (std::size_t seed = 0; seed < values.size(); ++seed) {
    if (values[seed] == 0 || component[seed] >= 0) continue;
    current.clear();
    component[seed] = next_id;
    queue.push_back(seed);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop_front();
      current.push_back(v);
      const Index3 p = scene.coords(v);
      const double fv = values[v];
      for (int dz = -1; dz <= 1; ++dz) {
        const int z = p[2] + dz;
        if (z < 0 || z >= d.nz) continue;
        for (int dy = -1; dy <= 1; ++dy) {
          const int y = p[1] + dy;
          if (y < 0 || y >= d.ny) continue;
          for (int dx = -1; dx <= 1; ++dx) {
            const int x = p[0] + dx;
            if (x < 0 || x >= d.nx) continue;
            const std::size_t u = scene.index(x, y, z);
            if (component[u] >= 0 || values[u] == 0) continue;
            if (std::abs(static_cast<double>(values[u]) - fv) > crit.theta) continue;
            component[u] = next_id;
            queue.push_back(u);
          }
        }
      }
    }
    if (current.size() > best.size()) best = current;
    ++next_id;
  }
  if (best.empty()) throw Error(ErrorCode::kEmptyForeground, "scene has no foreground voxels");
  std::sort(best.begin(), best.end());
  return best;
}

BiasModel fit_bias(const Scene& scene, const std::vector<std::size_t>& region) {
  constexpr int kTerms = 10;
  if (region.size() < kTerms) {
    throw Error(ErrorCode::kInvalidArgument, "bias fit needs at least 10 region voxels");
  }
  // Fit in centred, scaled coordinates for conditioning, then expand back to
  // raw voxel-coordinate monomials.
  std::array<double, 3> mean{0, 0, 0};
  std::array<double, 3> lo{1e300, 1e300, 1e300};
  std::array<double, 3> hi{-1e300, -1e300, -1e300};
  for (std::size_t i : region) {
    const Index3 p = scene.coords(i);
    for (int a = 0; a < 3; ++a) {
      mean[a] += p[a];
      lo[a] = std::min<double>(lo[a], p[a]);
      hi[a] = std::max<double>(hi[a], p[a]);
    }
  }
  std::array<double, 3> alpha{};
  std::array<double, 3> beta{};
  for (int a = 0; a < 3; ++a) {
    mean[a] /= static_cast<double>(region.size());
    const double half = std::max(0.5, (hi[a] - lo[a]) / 2.0);
    alpha[a] = 1.0 / half;
    beta[a] = -mean[a] / half;
  }

  const auto n = static_cast<Eigen::Index>(region.size());
  Eigen::MatrixXd design(n, kTerms);
  Eigen::VectorXd rhs(n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const std::size_t i = region[static_cast<std::size_t>(r)];
    const Index3 p = scene.coords(i);
    const double u = alpha[0] * p[0] + beta[0];
    const double v = alpha[1] * p[1] + beta[1];
    const double w = alpha[2] * p[2] + beta[2];
    design.row(r) << 1.0, u, v, w, u * u, v * v, w * w, u * v, u * w, v * w;
    rhs(r) = scene.intensities()[i];
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < kTerms) {
    throw Error(ErrorCode::kDegenerateFit, "bias fit design is rank deficient");
  }
  const Eigen::VectorXd a = qr.solve(rhs);

  const auto [ax, ay, az] = alpha;
  const auto [bx, by, bz] = beta;
  BiasModel model;
  auto& c = model.coefficients;
  c[0] = a[0] + a[1] * bx + a[2] * by + a[3] * bz + a[4] * bx * bx + a[5] * by * by +
         a[6] * bz * bz + a[7] * bx * by + a[8] * bx * bz + a[9] * by * bz;
  c[1] = a[1] * ax + 2 * a[4] * ax * bx + a[7] * ax * by + a[8] * ax * bz;
  c[2] = a[2] * ay + 2 * a[5] * ay * by + a[7] * bx * ay + a[9] * ay * bz;
  c[3] = a[3] * az + 2 * a[6] * az * bz + a[8] * bx * az + a[9] * by * az;
  c[4] = a[4] * ax * ax;
  c[5] = a[5] * ay * ay;
  c[6] = a[6] * az * az;
  c[7] = a[7] * ax * ay;
  c[8] = a[8] * ax * az;
  c[9] = a[9] * ay * az;

  const double fitted_mean = (design * a).mean();
  if (!(fitted_mean > 0.0) || !std::isfinite(fitted_mean)) {
    throw Error(ErrorCode::kDegenerateFit, "bias fit has non-positive mean");
  }
  for (double& coef : c) coef /= fitted_mean;
  return model;
}

CorrectionResult correct_scene_traced(const Scene& scene, HomogeneityCriterion crit,
                                      int max_iters, double growth_tol) {
  if (max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (!(growth_tol >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "growth_tol must be >= 0");

  CorrectionResult result{scene, 0, {}};
  const Dims& d = scene.dims();
  const double ceiling = scene.ceiling();
  for (int iter = 0; iter < max_iters; ++iter) {
    const std::vector<std::size_t> region = largest_homogeneous_region(result.scene, crit);
    if (!result.region_sizes.empty() &&
        static_cast<double>(region.size()) <=
            (1.0 + growth_tol) * static_cast<double>(result.region_sizes.back())) {
      result.region_sizes.push_back(region.size());
      break;
    }
    result.region_sizes.push_back(region.size());
    const BiasModel bias = fit_bias(result.scene, region);

    const auto src = result.scene.intensities();
    std::vector<Intensity> out(src.size(), 0);
    for (int z = 0; z < d.nz; ++z) {
      for (int y = 0; y < d.ny; ++y) {
        for (int x = 0; x < d.nx; ++x) {
          const double b = bias(x, y, z);
          if (!(b > 0.0) || !std::isfinite(b)) {
            throw Error(ErrorCode::kDegenerateFit, "fitted bias field is not positive");
          }
          const std::size_t i = result.scene.index(x, y, z);
          if (src[i] == 0) continue;
          const double v = std::floor(src[i] / b + 0.5);
          out[i] = static_cast<Intensity>(std::clamp(v, 1.0, ceiling));
        }
      }
    }
    result.scene = result.scene.with_intensities(std::move(out));
    ++result.passes;
  }
  return result;
}

Scene correct_scene(const Scene& scene, HomogeneityCriterion crit, int max_iters,
                    double growth_tol) {
  return correct_scene_traced(scene, crit, max_iters, growth_tol).scene;
}

}  // namespace nsreg
