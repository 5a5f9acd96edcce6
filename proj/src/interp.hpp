#pragma once

// Trilinear sampling shared by resampling and registration. Voxels outside
// the grid read as 0, so the interpolant fades to 0 across the border.

#include <cmath>
#include <cstddef>
#include <vector>

#include "nsreg/scene.hpp"

namespace nsreg::detail {

struct Volume {
  Dims dims;
  std::vector<float> data;

  float at(int x, int y, int z) const noexcept {
    return data[static_cast<std::size_t>(x) +
                static_cast<std::size_t>(dims.nx) *
                    (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims.ny) * z)];
  }
};

struct Sample {
  double value = 0.0;
  double gx = 0.0;
  double gy = 0.0;
  double gz = 0.0;
};

template <typename Get>
inline bool corners(const Dims& d, double x, double y, double z, Get&& get, double c[8],
                    double& fx, double& fy, double& fz) {
  if (!(x > -1.0 && y > -1.0 && z > -1.0 && x < d.nx && y < d.ny && z < d.nz)) return false;
  const double flx = std::floor(x);
  const double fly = std::floor(y);
  const double flz = std::floor(z);
  const int x0 = static_cast<int>(flx);
  const int y0 = static_cast<int>(fly);
  const int z0 = static_cast<int>(flz);
  fx = x - flx;
  fy = y - fly;
  fz = z - flz;
  const bool interior = x0 >= 0 && y0 >= 0 && z0 >= 0 && x0 + 1 < d.nx && y0 + 1 < d.ny &&
                        z0 + 1 < d.nz;
  for (int k = 0; k < 8; ++k) {
    const int xi = x0 + (k & 1);
    const int yi = y0 + ((k >> 1) & 1);
    const int zi = z0 + ((k >> 2) & 1);
    if (interior || (xi >= 0 && yi >= 0 && zi >= 0 && xi < d.nx && yi < d.ny && zi < d.nz)) {
      c[k] = get(xi, yi, zi);
    } else {
      c[k] = 0.0;
    }
  }
  return true;
}

template <typename Get>
inline double trilinear(const Dims& d, double x, double y, double z, Get&& get) {
  double c[8];
  double fx, fy, fz;
  if (!corners(d, x, y, z, get, c, fx, fy, fz)) return 0.0;
  const double c00 = c[0] + fx * (c[1] - c[0]);
  const double c10 = c[2] + fx * (c[3] - c[2]);
  const double c01 = c[4] + fx * (c[5] - c[4]);
  const double c11 = c[6] + fx * (c[7] - c[6]);
  const double c0 = c00 + fy * (c10 - c00);
  const double c1 = c01 + fy * (c11 - c01);
  return c0 + fz * (c1 - c0);
}

// Value and analytic gradient of the trilinear interpolant.
template <typename Get>
inline Sample trilinear_gradient(const Dims& d, double x, double y, double z, Get&& get) {
  double c[8];
  double fx, fy, fz;
  Sample s;
  if (!corners(d, x, y, z, get, c, fx, fy, fz)) return s;
  const double c00 = c[0] + fx * (c[1] - c[0]);
  const double c10 = c[2] + fx * (c[3] - c[2]);
  const double c01 = c[4] + fx * (c[5] - c[4]);
  const double c11 = c[6] + fx * (c[7] - c[6]);
  const double c0 = c00 + fy * (c10 - c00);
  const double c1 = c01 + fy * (c11 - c01);
  s.value = c0 + fz * (c1 - c0);
  s.gz = c1 - c0;
  s.gy = (1.0 - fz) * (c10 - c00) + fz * (c11 - c01);
  const double d00 = c[1] - c[0];
  const double d10 = c[3] - c[2];
  const double d01 = c[5] - c[4];
  const double d11 = c[7] - c[6];
  s.gx = (1.0 - fz) * ((1.0 - fy) * d00 + fy * d10) + fz * ((1.0 - fy) * d01 + fy * d11);
  return s;
}

}  // namespace nsreg::detail
