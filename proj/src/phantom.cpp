#include "nsreg/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "nsreg/error.hpp"
#include "nsreg/rng.hpp"

namespace nsreg {

namespace {

// Curvature of the bias polynomial along its gradient direction. Below 0.5
// the quadratic stays monotone over [-1, 1], so its extremes sit on the
// head surface.
constexpr double kBiasCurvature = 0.25;

Intensity quantize(double v, std::uint32_t ceiling) {
  const double r = std::floor(v + 0.5);
  return static_cast<Intensity>(std::clamp(r, 1.0, static_cast<double>(ceiling)));
}

}  // namespace

PhantomSpec default_phantom_spec(Dims dims) {
  PhantomSpec spec;
  spec.dims = dims;
  spec.tissues = {
      {"scalp", 320.0, 760.0, {{{0.5, 0.5, 0.5}, {0.42, 0.46, 0.40}}}},
      {"gray_matter", 900.0, 1300.0, {{{0.5, 0.5, 0.5}, {0.36, 0.40, 0.34}}}},
      {"white_matter", 620.0, 1050.0, {{{0.5, 0.5, 0.5}, {0.27, 0.31, 0.25}}}},
      {"csf",
       2000.0,
       1180.0,
       {{{0.44, 0.47, 0.52}, {0.05, 0.12, 0.06}}, {{0.56, 0.47, 0.52}, {0.05, 0.12, 0.06}}}},
      {"lesion",
       1500.0,
       1500.0,
       {{{0.40, 0.60, 0.45}, {0.035, 0.035, 0.035}},
        {{0.60, 0.38, 0.58}, {0.03, 0.03, 0.03}},
        {{0.55, 0.64, 0.38}, {0.04, 0.04, 0.04}}}},
  };
  return spec;
}

void validate(const PhantomSpec& spec) {
  if (spec.dims.nx < 1 || spec.dims.ny < 1 || spec.dims.nz < 1) {
    throw Error(ErrorCode::kInvalidArgument, "phantom dims must be >= 1");
  }
  if (spec.tissues.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "phantom needs at least one tissue class");
  }
  if (spec.tissues.size() > 254) {
    throw Error(ErrorCode::kInvalidArgument, "too many tissue classes");
  }
  if (!(spec.noise_sigma >= 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "noise_sigma must be >= 0");
  }
  if (!(spec.bias_amplitude >= 0.0 && spec.bias_amplitude <= 0.5)) {
    throw Error(ErrorCode::kInvalidArgument, "bias_amplitude must lie in [0, 0.5]");
  }
  if (!(spec.intensity_gain > 0.0) || !(spec.geometry_scale > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "gain and geometry scale must be positive");
  }
  std::set<double> t2;
  std::set<double> pd;
  for (const TissueClass& t : spec.tissues) {
    if (!(t.mean_t2 > 0.0) || !(t.mean_pd > 0.0)) {
      throw Error(ErrorCode::kInvalidArgument, "tissue means must be positive: " + t.label);
    }
    if (!t2.insert(t.mean_t2).second || !pd.insert(t.mean_pd).second) {
      throw Error(ErrorCode::kInvalidArgument,
                  "tissue means must be distinct per protocol: " + t.label);
    }
    for (const Ellipsoid& e : t.shapes) {
      for (double r : e.radii) {
        if (!(r > 0.0)) throw Error(ErrorCode::kInvalidArgument, "ellipsoid radii must be > 0");
      }
    }
  }
}

std::vector<std::uint8_t> phantom_labels(const PhantomSpec& spec) {
  validate(spec);
  const Dims& d = spec.dims;
  std::vector<std::uint8_t> labels(d.count(), 0);
  const std::array<double, 3> extent{static_cast<double>(d.nx), static_cast<double>(d.ny),
                                     static_cast<double>(d.nz)};
  for (std::size_t k = 0; k < spec.tissues.size(); ++k) {
    for (const Ellipsoid& e : spec.tissues[k].shapes) {
      std::array<double, 3> c{};
      std::array<double, 3> r{};
      for (int a = 0; a < 3; ++a) {
        // Voxel centers sit at integer coordinates; the fractional center
        // 0.5 maps onto the geometric middle (n - 1) / 2.
        c[a] = e.center[a] * (extent[a] - 1.0);
        r[a] = e.radii[a] * extent[a] * spec.geometry_scale;
      }
      for (int z = 0; z < d.nz; ++z) {
        const double dz = (z - c[2]) / r[2];
        for (int y = 0; y < d.ny; ++y) {
          const double dy = (y - c[1]) / r[1];
          for (int x = 0; x < d.nx; ++x) {
            const double dx = (x - c[0]) / r[0];
            if (dx * dx + dy * dy + dz * dz <= 1.0) {
              labels[static_cast<std::size_t>(x) +
                     static_cast<std::size_t>(d.nx) *
                         (static_cast<std::size_t>(y) + static_cast<std::size_t>(d.ny) * z)] =
                  static_cast<std::uint8_t>(k + 1);
            }
          }
        }
      }
    }
  }
  return labels;
}

std::vector<double> phantom_bias_field(const PhantomSpec& spec,
                                       const std::vector<std::uint8_t>& labels) {
  const Dims& d = spec.dims;
  std::vector<double> field(d.count(), 1.0);
  if (spec.bias_amplitude == 0.0) return field;

  // Random gradient direction, uniform on the sphere.
  rng::Stream stream(rng::derive(spec.seed, {rng::hash_string("bias")}));
  const double cos_theta = stream.uniform(-1.0, 1.0);
  const double phi = stream.uniform(0.0, 2.0 * std::numbers::pi);
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));
  const std::array<double, 3> g{sin_theta * std::cos(phi), sin_theta * std::sin(phi), cos_theta};

  const std::array<double, 3> half{std::max(1.0, (d.nx - 1) / 2.0), std::max(1.0, (d.ny - 1) / 2.0),
                                   std::max(1.0, (d.nz - 1) / 2.0)};
  double qmin = std::numeric_limits<double>::infinity();
  double qmax = -qmin;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        const double s = g[0] * (x - half[0]) / half[0] + g[1] * (y - half[1]) / half[1] +
                         g[2] * (z - half[2]) / half[2];
        const double q = s + kBiasCurvature * s * s;
        const std::size_t i = static_cast<std::size_t>(x) +
                              static_cast<std::size_t>(d.nx) *
                                  (static_cast<std::size_t>(y) + static_cast<std::size_t>(d.ny) * z);
        field[i] = q;
        if (labels[i] != 0) {
          qmin = std::min(qmin, q);
          qmax = std::max(qmax, q);
        }
      }
    }
  }
  if (!(qmax > qmin)) {
    std::fill(field.begin(), field.end(), 1.0);
    return field;
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < field.size(); ++i) {
    field[i] = 1.0 + spec.bias_amplitude * (field[i] - qmin) / (qmax - qmin);
    if (labels[i] != 0) {
      sum += field[i];
      ++n;
    }
  }
  const double mean = sum / static_cast<double>(n);
  for (double& f : field) f /= mean;
  return field;
}

std::pair<Scene, Scene> generate_phantom_pair(const PhantomSpec& spec) {
  const std::vector<std::uint8_t> labels = phantom_labels(spec);
  if (std::none_of(labels.begin(), labels.end(), [](std::uint8_t l) { return l != 0; })) {
    throw Error(ErrorCode::kEmptyForeground, "phantom geometry has no foreground");
  }
  const std::vector<double> bias = phantom_bias_field(spec, labels);
  const std::uint64_t seed_t2 = rng::derive(spec.seed, {rng::hash_string("noise-T2")});
  const std::uint64_t seed_pd = rng::derive(spec.seed, {rng::hash_string("noise-PD")});

  std::vector<Intensity> t2(labels.size(), 0);
  std::vector<Intensity> pd(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == 0) continue;
    const TissueClass& t = spec.tissues[labels[i] - 1];
    double v2 = t.mean_t2 * bias[i];
    double vp = t.mean_pd * bias[i];
    if (spec.noise_sigma > 0.0) {
      v2 += spec.noise_sigma * rng::normal_at(seed_t2, i);
      vp += spec.noise_sigma * rng::normal_at(seed_pd, i);
    }
    // Receiver gain scales signal and noise alike.
    t2[i] = quantize(v2 * spec.intensity_gain, spec.ceiling);
    pd[i] = quantize(vp * spec.intensity_gain, spec.ceiling);
  }
  Scene scene_t2(spec.dims, spec.voxel_size, std::move(t2), spec.body_region, "T2", spec.ceiling);
  Scene scene_pd(spec.dims, spec.voxel_size, std::move(pd), spec.body_region, "PD", spec.ceiling);
  return {std::move(scene_t2), std::move(scene_pd)};
}

}  // namespace nsreg
