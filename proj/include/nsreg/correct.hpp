#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "nsreg/scene.hpp"

namespace nsreg {

struct HomogeneityCriterion {
  // Max absolute intensity difference between 26-neighbours of one region.
  double theta = 0.0;
};

// theta = fraction * foreground median.
HomogeneityCriterion default_criterion(const Scene& scene, double fraction = 0.05);

// Full quadratic in voxel coordinates. Monomial order:
// 1, x, y, z, x^2, y^2, z^2, xy, xz, yz.
struct BiasModel {
  std::array<double, 10> coefficients{1.0, 0, 0, 0, 0, 0, 0, 0, 0, 0};

  double operator()(double x, double y, double z) const noexcept;
};

// Largest 26-connected foreground component in which adjacent members differ
// by at most theta. Ties go to the component whose first voxel comes first in
// scan order. Returned indices are sorted.
std::vector<std::size_t> largest_homogeneous_region(const Scene& scene,
                                                    HomogeneityCriterion crit);

// Least-squares quadratic over the region, scaled to mean 1 over the region.
BiasModel fit_bias(const Scene& scene, const std::vector<std::size_t>& region);

struct CorrectionResult {
  Scene scene;
  int passes = 0;                         // divide passes applied
  std::vector<std::size_t> region_sizes;  // largest region found per iteration
};

CorrectionResult correct_scene_traced(const Scene& scene, HomogeneityCriterion crit,
                                      int max_iters = 10, double growth_tol = 0.05);

Scene correct_scene(const Scene& scene, HomogeneityCriterion crit, int max_iters = 10,
                    double growth_tol = 0.05);

}  // namespace nsreg
