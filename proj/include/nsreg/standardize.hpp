#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nsreg/scene.hpp"

namespace nsreg {

struct LandmarkSet {
  double p1 = 0.0;  // low percentile intensity
  double p2 = 0.0;  // high percentile intensity
  double mu = 0.0;  // foreground median
};

struct StandardizationModel {
  double pc1 = 0.0;
  double pc2 = 99.8;
  double s1 = 1.0;
  double s2 = 4095.0;
  double mu_s = 2048.0;
  std::string body_region = "head";
  std::string protocol;
  // Observed (min, max) of the per-scene lower/upper segment slopes when the
  // training scenes are standardized with this model.
  std::pair<double, double> training_slope_range{1.0, 1.0};
};

enum class ScaleClass { kNone, kSmall, kMedium, kLarge };

const char* to_string(ScaleClass c);

struct NonStandardnessLevel {
  std::string id;  // "clean", "psibar1" .. "psibar7"
  std::pair<double, double> slope_range{1.0, 1.0};
  ScaleClass scale_class = ScaleClass::kNone;

  bool is_clean() const noexcept { return scale_class == ScaleClass::kNone; }
};

struct TrainingOptions {
  double pc1 = 0.0;
  double pc2 = 99.8;
  double s1 = 1.0;
  double s2 = 4095.0;
};

LandmarkSet extract_landmarks(const Scene& scene, double pc1 = 0.0, double pc2 = 99.8);

// Training from landmarks directly; train_model() extracts them first.
StandardizationModel train_model_from_landmarks(const std::vector<LandmarkSet>& landmarks,
                                                const TrainingOptions& options,
                                                std::string body_region = "head",
                                                std::string protocol = "");

StandardizationModel train_model(const std::vector<Scene>& scenes,
                                 const TrainingOptions& options = {});

// Piecewise-linear landmark map [p1, mu] -> [s1, mu_s], [mu, p2] -> [mu_s, s2],
// clamped outside [p1, p2]; unrounded.
double standard_map(double value, const LandmarkSet& landmarks, const StandardizationModel& model);

Scene standardize_scene(const Scene& scene, const StandardizationModel& model);

// Slopes (m1, m2) that standardize_scene would apply to a scene with these
// landmarks.
std::pair<double, double> standardization_slopes(const LandmarkSet& landmarks,
                                                 const StandardizationModel& model);

// Slopes drawn for a level and seed; (1, 1) for the clean level.
std::pair<double, double> sample_slopes(const NonStandardnessLevel& level, std::uint64_t seed);

// Inverse landmark mapping with fixed slopes. The standard-scale median is
// taken from the scene itself (it equals mu_s for a standardized scene).
Scene apply_inverse_mapping(const Scene& scene, double m1, double m2);

Scene inject_nonstandardness(const Scene& scene, const NonStandardnessLevel& level,
                             std::uint64_t seed);

std::vector<NonStandardnessLevel> default_levels();

// Lookup by id ("clean", "psibar3", ...).
NonStandardnessLevel level_by_id(const std::string& id);

}  // namespace nsreg
