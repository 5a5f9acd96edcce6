#include "nsreg/standardize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nsreg/error.hpp"
#include "nsreg/rng.hpp"

namespace nsreg {

namespace {

double round_half_up(double v) { return std::floor(v + 0.5); }

void check_protocol(const StandardizationModel& model, const Scene& scene) {
  if (!model.protocol.empty() && model.protocol != scene.protocol()) {
    throw Error(ErrorCode::kProtocolMismatch, "model trained for protocol '" + model.protocol +
                                                  "' applied to '" + scene.protocol() + "'");
  }
  if (!model.body_region.empty() && model.body_region != scene.body_region()) {
    throw Error(ErrorCode::kProtocolMismatch, "model trained for body region '" +
                                                  model.body_region + "' applied to '" +
                                                  scene.body_region() + "'");
  }
}

}  // namespace

const char* to_string(ScaleClass c) {
  switch (c) {
    case ScaleClass::kNone: return "none";
    case ScaleClass::kSmall: return "small";
    case ScaleClass::kMedium: return "medium";
    case ScaleClass::kLarge: return "large";
  }
  return "none";
}

LandmarkSet extract_landmarks(const Scene& scene, double pc1, double pc2) {
  if (!(pc1 < pc2)) throw Error(ErrorCode::kInvalidArgument, "pc1 must be below pc2");
  const Histogram h = foreground_histogram(scene);
  LandmarkSet lm;
  lm.p1 = percentile_intensity(h, pc1);
  lm.p2 = percentile_intensity(h, pc2);
  if (!(lm.p1 < lm.p2)) {
    throw Error(ErrorCode::kDegenerateLandmarks, "low and high landmarks coincide");
  }
  lm.mu = std::clamp<double>(percentile_intensity(h, 50.0), lm.p1, lm.p2);
  return lm;
}

std::pair<double, double> standardization_slopes(const LandmarkSet& lm,
                                                 const StandardizationModel& model) {
  const double inf = std::numeric_limits<double>::infinity();
  const double m1 = lm.mu > lm.p1 ? (model.mu_s - model.s1) / (lm.mu - lm.p1) : inf;
  const double m2 = lm.p2 > lm.mu ? (model.s2 - model.mu_s) / (lm.p2 - lm.mu) : inf;
  return {m1, m2};
}

StandardizationModel train_model_from_landmarks(const std::vector<LandmarkSet>& landmarks,
                                                const TrainingOptions& options,
                                                std::string body_region, std::string protocol) {
  if (landmarks.empty()) throw Error(ErrorCode::kInvalidArgument, "training needs >= 1 scene");
  if (!(options.s1 < options.s2)) throw Error(ErrorCode::kInvalidArgument, "s1 must be below s2");

  double sum = 0.0;
  for (const LandmarkSet& lm : landmarks) {
    if (!(lm.p1 < lm.p2)) {
      throw Error(ErrorCode::kDegenerateLandmarks, "training scene has coincident landmarks");
    }
    sum += options.s1 + (lm.mu - lm.p1) * (options.s2 - options.s1) / (lm.p2 - lm.p1);
  }
  StandardizationModel model;
  model.pc1 = options.pc1;
  model.pc2 = options.pc2;
  model.s1 = options.s1;
  model.s2 = options.s2;
  model.mu_s = round_half_up(sum / static_cast<double>(landmarks.size()));
  model.body_region = std::move(body_region);
  model.protocol = std::move(protocol);
  if (!(model.s1 < model.mu_s && model.mu_s < model.s2)) {
    throw Error(ErrorCode::kDegenerateLandmarks, "mean median maps onto a scale end");
  }

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const LandmarkSet& lm : landmarks) {
    const auto [m1, m2] = standardization_slopes(lm, model);
    for (double m : {m1, m2}) {
      if (!std::isfinite(m)) continue;
      lo = std::min(lo, m);
      hi = std::max(hi, m);
    }
  }
  model.training_slope_range = std::isfinite(lo) ? std::pair{lo, hi} : std::pair{1.0, 1.0};
  return model;
}

StandardizationModel train_model(const std::vector<Scene>& scenes, const TrainingOptions& options) {
  if (scenes.empty()) throw Error(ErrorCode::kInvalidArgument, "training needs >= 1 scene");
  std::vector<LandmarkSet> landmarks;
  landmarks.reserve(scenes.size());
  for (const Scene& s : scenes) {
    if (s.protocol() != scenes.front().protocol() ||
        s.body_region() != scenes.front().body_region()) {
      throw Error(ErrorCode::kProtocolMismatch, "training scenes mix body regions or protocols");
    }
    landmarks.push_back(extract_landmarks(s, options.pc1, options.pc2));
  }
  return train_model_from_landmarks(landmarks, options, scenes.front().body_region(),
                                    scenes.front().protocol());
}

double standard_map(double v, const LandmarkSet& lm, const StandardizationModel& model) {
  if (v >= lm.p2) return model.s2;
  if (v <= lm.mu) {
    if (!(lm.mu > lm.p1)) return model.mu_s;
    if (v <= lm.p1) return model.s1;
    return model.s1 + (v - lm.p1) * (model.mu_s - model.s1) / (lm.mu - lm.p1);
  }
  return model.mu_s + (v - lm.mu) * (model.s2 - model.mu_s) / (lm.p2 - lm.mu);
}

Scene standardize_scene(const Scene& scene, const StandardizationModel& model) {
  check_protocol(model, scene);
  const LandmarkSet lm = extract_landmarks(scene, model.pc1, model.pc2);
  const auto ceiling = static_cast<std::uint32_t>(
      std::clamp(round_half_up(model.s2), 1.0, static_cast<double>(kMaxCeiling)));

  // Every distinct input value maps once; cache over the u16 range.
  std::vector<Intensity> lut(65536, 0);
  for (std::uint32_t v = 1; v < lut.size(); ++v) {
    const double mapped = round_half_up(standard_map(v, lm, model));
    lut[v] = static_cast<Intensity>(std::clamp(mapped, 1.0, static_cast<double>(ceiling)));
  }
  const auto src = scene.intensities();
  std::vector<Intensity> out(src.size());
  std::transform(src.begin(), src.end(), out.begin(), [&](Intensity v) { return lut[v]; });
  return scene.with_intensities(std::move(out), ceiling);
}

std::pair<double, double> sample_slopes(const NonStandardnessLevel& level, std::uint64_t seed) {
  if (level.is_clean()) return {1.0, 1.0};
  rng::Stream stream(seed);
  const double m1 = stream.uniform(level.slope_range.first, level.slope_range.second);
  const double m2 = stream.uniform(level.slope_range.first, level.slope_range.second);
  return {m1, m2};
}

Scene apply_inverse_mapping(const Scene& scene, double m1, double m2) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "non-standardness slopes must be positive");
  }
  const Histogram h = foreground_histogram(scene);
  const double mu_s = percentile_intensity(h, 50.0);
  // Output-scale median chosen so both segments meet at mu_s.
  const double mu = std::ceil(mu_s / m1);
  const double ceiling = kMaxCeiling;

  std::vector<Intensity> lut(65536, 0);
  for (std::uint32_t f = 1; f < lut.size(); ++f) {
    // Above the knee the anchor is mu itself; rounding keeps that residual
    // centred where ceil would bias it by m2 / 2.
    const double v = f <= mu_s ? std::ceil(f / m1) : round_half_up((f - mu_s) / m2 + mu);
    lut[f] = static_cast<Intensity>(std::clamp(v, 1.0, ceiling));
  }
  const auto src = scene.intensities();
  std::vector<Intensity> out(src.size());
  std::transform(src.begin(), src.end(), out.begin(), [&](Intensity v) { return lut[v]; });
  return scene.with_intensities(std::move(out), kMaxCeiling);
}

Scene inject_nonstandardness(const Scene& scene, const NonStandardnessLevel& level,
                             std::uint64_t seed) {
  if (!(level.slope_range.first > 0.0) || level.slope_range.second < level.slope_range.first) {
    throw Error(ErrorCode::kInvalidArgument, "level slope range must satisfy 0 < lo <= hi");
  }
  if (level.is_clean()) return scene;
  const auto [m1, m2] = sample_slopes(level, seed);
  return apply_inverse_mapping(scene, m1, m2);
}

std::vector<NonStandardnessLevel> default_levels() {
  return {
      {"clean", {1.0, 1.0}, ScaleClass::kNone},
      {"psibar1", {0.9, 1.5}, ScaleClass::kSmall},
      {"psibar2", {0.6, 0.9}, ScaleClass::kSmall},
      {"psibar3", {1.5, 2.0}, ScaleClass::kMedium},
      {"psibar4", {2.0, 2.4}, ScaleClass::kMedium},
      {"psibar5", {2.4, 2.7}, ScaleClass::kLarge},
      {"psibar6", {2.7, 3.0}, ScaleClass::kLarge},
      {"psibar7", {3.0, 3.3}, ScaleClass::kLarge},
  };
}

NonStandardnessLevel level_by_id(const std::string& id) {
  for (const NonStandardnessLevel& l : default_levels()) {
    if (l.id == id) return l;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown non-standardness level '" + id + "'");
}

}  // namespace nsreg
