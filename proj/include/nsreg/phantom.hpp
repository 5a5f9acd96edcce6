#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsreg/scene.hpp"

namespace nsreg {

// Axis-aligned ellipsoid in fractions of the scene extent (0..1 per axis).
struct Ellipsoid {
  std::array<double, 3> center{0.5, 0.5, 0.5};
  std::array<double, 3> radii{0.25, 0.25, 0.25};
};

struct TissueClass {
  std::string label;
  double mean_t2 = 0.0;
  double mean_pd = 0.0;
  std::vector<Ellipsoid> shapes;
};

struct PhantomSpec {
  Dims dims{64, 64, 64};
  VoxelSize voxel_size{1.0, 1.0, 1.0};
  // Painted in order; later classes overwrite earlier ones.
  std::vector<TissueClass> tissues;
  double noise_sigma = 0.0;
  // Peak-to-peak fraction of the multiplicative field over the foreground.
  double bias_amplitude = 0.0;
  std::uint64_t seed = 0;
  // Per-subject variation knobs: global intensity gain and radius scale.
  double intensity_gain = 1.0;
  double geometry_scale = 1.0;
  std::string body_region = "head";
  std::uint32_t ceiling = kDefaultCeiling;
};

// Brain-like layout: scalp shell, gray matter, white matter, two ventricles,
// three small bright lesions placed off-center.
PhantomSpec default_phantom_spec(Dims dims = {64, 64, 64});

void validate(const PhantomSpec& spec);

// 0 for background, k + 1 for tissue k.
std::vector<std::uint8_t> phantom_labels(const PhantomSpec& spec);

// Multiplicative field (mean 1 over the foreground); all ones when
// bias_amplitude == 0.
std::vector<double> phantom_bias_field(const PhantomSpec& spec,
                                       const std::vector<std::uint8_t>& labels);

// T2 and PD scenes sharing one label map and one bias field.
std::pair<Scene, Scene> generate_phantom_pair(const PhantomSpec& spec);

}  // namespace nsreg
