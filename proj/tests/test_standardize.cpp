#include <doctest.h>

#include <cmath>
#include <numeric>

#include "nsreg/error.hpp"
#include "nsreg/phantom.hpp"
#include "nsreg/standardize.hpp"
#include "support.hpp"

using namespace nsreg;
using nsreg::testing::make_scene;

namespace {

Scene ramp(int n, std::string protocol = "T2") {
  std::vector<Intensity> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Intensity{1});
  return Scene({n, 1, 1}, {1, 1, 1}, v, "head", std::move(protocol));
}

std::vector<Scene> phantom_cohort(int n, const std::string& protocol) {
  std::vector<Scene> out;
  for (int k = 0; k < n; ++k) {
    PhantomSpec spec = default_phantom_spec({32, 32, 32});
    spec.seed = 40 + k;
    spec.noise_sigma = 15.0;
    spec.intensity_gain = 0.7 + 0.12 * k;
    auto [t2, pd] = generate_phantom_pair(spec);
    out.push_back(protocol == "T2" ? t2 : pd);
  }
  return out;
}

}  // namespace

TEST_CASE("landmark extraction") {
  const LandmarkSet l = extract_landmarks(ramp(1000));
  CHECK(l.p1 == 1);
  CHECK(l.p2 == 998);
  CHECK(l.mu == 500);

  const Scene flat = make_scene({4, 4, 4}, [](int, int, int) { return Intensity(7); });
  try {
    extract_landmarks(flat);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kDegenerateLandmarks);
  }

  // Three equal-volume tissues.
  const Scene three = make_scene({9, 4, 4}, [](int x, int, int) { return Intensity(100 * (x / 3 + 1)); });
  CHECK(extract_landmarks(three).mu == 200);
  CHECK_THROWS_AS(extract_landmarks(ramp(10), 50.0, 40.0), Error);
}

TEST_CASE("model training") {
  const StandardizationModel m = train_model_from_landmarks({{0.0, 1000.0, 400.0}}, TrainingOptions{});
  CHECK(m.mu_s == 1639);  // 1 + 400 * 4094 / 1000 = 1638.6
  CHECK(m.s1 == 1);
  CHECK(m.s2 == 4095);

  const Scene r = ramp(1000);
  CHECK(train_model({r, r}).mu_s == train_model({r}).mu_s);
  CHECK_THROWS_AS(train_model({r, ramp(1000, "PD")}), Error);

  const StandardizationModel pd = train_model({ramp(1000, "PD")});
  try {
    standardize_scene(r, pd);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kProtocolMismatch);
  }
}

TEST_CASE("standard map arithmetic") {
  StandardizationModel m;
  m.mu_s = 2048;
  const LandmarkSet l{0.0, 1000.0, 400.0};
  CHECK(standard_map(200, l, m) == doctest::Approx(1024.5));
  CHECK(standard_map(400, l, m) == doctest::Approx(2048));
  CHECK(standard_map(1200, l, m) == doctest::Approx(4095));  // clamped

  // standardize_scene = round-half-up of standard_map, voxel by voxel.
  const Scene s = phantom_cohort(1, "T2").front();
  StandardizationModel model = train_model({s});
  const LandmarkSet ls = extract_landmarks(s);
  const Scene out = standardize_scene(s, model);
  for (std::size_t i = 0; i < s.intensities().size(); ++i) {
    const Intensity v = s.intensities()[i];
    const Intensity want = v == 0 ? 0 : static_cast<Intensity>(std::floor(standard_map(v, ls, model) + 0.5));
    if (out.intensities()[i] != want) FAIL("voxel " << i);
  }
  // Landmark median lands on mu_s.
  CHECK(extract_landmarks(out).mu == doctest::Approx(model.mu_s).epsilon(0.001));
}

TEST_CASE("standardization properties") {
  for (const std::string protocol : {"T2", "PD"}) {
    const auto cohort = phantom_cohort(5, protocol);
    const StandardizationModel model = train_model(cohort);
    std::vector<double> medians;
    for (const Scene& s : cohort) {
      const Scene out = standardize_scene(s, model);
      medians.push_back(extract_landmarks(out).mu);
      // Monotone: order of inputs never reverses.
      std::vector<std::pair<Intensity, Intensity>> pairs;
      for (std::size_t i = 0; i < s.intensities().size(); ++i) pairs.push_back({s.intensities()[i], out.intensities()[i]});
      std::sort(pairs.begin(), pairs.end());
      for (std::size_t i = 1; i < pairs.size(); ++i) CHECK(pairs[i - 1].second <= pairs[i].second);
    }
    for (double m : medians) CHECK(m == medians.front());
    CHECK(medians.front() == model.mu_s);
  }
}

TEST_CASE("non-standardness injection") {
  SUBCASE("levels") {
    const auto levels = default_levels();
    REQUIRE(levels.size() == 8);
    CHECK(levels[0].is_clean());
    CHECK(level_by_id("psibar2").slope_range == std::pair{0.6, 0.9});
    CHECK(level_by_id("psibar2").scale_class == ScaleClass::kSmall);
    CHECK(level_by_id("psibar5").slope_range == std::pair{2.4, 2.7});
    CHECK(level_by_id("psibar5").scale_class == ScaleClass::kLarge);
    CHECK(level_by_id("psibar1").slope_range == std::pair{0.9, 1.5});
    CHECK(level_by_id("psibar3").scale_class == ScaleClass::kMedium);
    CHECK(level_by_id("psibar7").slope_range == std::pair{3.0, 3.3});
    CHECK_THROWS_AS(level_by_id("psibar8"), Error);
  }
  SUBCASE("slope draws stay in band and are seeded") {
    for (const auto& level : default_levels()) {
      for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto [m1, m2] = sample_slopes(level, seed);
        CHECK(m1 >= level.slope_range.first);
        CHECK(m1 <= level.slope_range.second);
        CHECK(m2 >= level.slope_range.first);
        CHECK(m2 <= level.slope_range.second);
      }
      CHECK(sample_slopes(level, 9) == sample_slopes(level, 9));
    }
  }
  SUBCASE("arithmetic at the knee") {
    // Median 2048 acts as mu_s.
    const Scene s({3, 1, 1}, {1, 1, 1}, {1000, 2048, 3000});
    const Scene out = apply_inverse_mapping(s, 2.0, 4.0);
    CHECK(out.intensities()[1] == 1024);
    CHECK(out.intensities()[0] == 500);
    CHECK(out.intensities()[2] == 1024 + 238);  // (3000 - 2048) / 4 = 238
    CHECK(apply_inverse_mapping(s, 1.0, 1.0).intensities()[0] == 1000);
    // Lower segment rounds up: 1000 / 3 -> 334, mu = ceil(2048 / 3) = 683.
    const Scene up = apply_inverse_mapping(s, 3.0, 5.0);
    CHECK(up.intensities()[0] == 334);
    CHECK(up.intensities()[1] == 683);
    CHECK(up.intensities()[2] == 873);  // round(952 / 5 + 683) = round(873.4)
    CHECK_THROWS_AS(apply_inverse_mapping(s, 0.0, 1.0), Error);
  }
  SUBCASE("identity slopes and determinism") {
    const auto cohort = phantom_cohort(2, "T2");
    const StandardizationModel model = train_model(cohort);
    const Scene clean = standardize_scene(cohort[0], model);
    CHECK(apply_inverse_mapping(clean, 1.0, 1.0).intensities().size() == clean.intensities().size());
    CHECK(std::equal(clean.intensities().begin(), clean.intensities().end(),
                     apply_inverse_mapping(clean, 1.0, 1.0).intensities().begin()));
    CHECK(inject_nonstandardness(clean, level_by_id("clean"), 4) == clean);
    CHECK(inject_nonstandardness(clean, level_by_id("psibar3"), 4) ==
          inject_nonstandardness(clean, level_by_id("psibar3"), 4));
    CHECK_FALSE(inject_nonstandardness(clean, level_by_id("psibar2"), 4) ==
                inject_nonstandardness(clean, level_by_id("psibar7"), 4));
  }
  SUBCASE("roundtrip through standardization") {
    const auto cohort = phantom_cohort(3, "PD");
    const StandardizationModel model = train_model(cohort);
    const Scene clean = standardize_scene(cohort[1], model);
    for (const auto& level : default_levels()) {
      for (std::uint64_t seed : {1u, 2u}) {
        const Scene back = standardize_scene(inject_nonstandardness(clean, level, seed), model);
        std::size_t fg = 0;
        std::size_t close = 0;
        for (std::size_t i = 0; i < clean.intensities().size(); ++i) {
          if (clean.intensities()[i] == 0) continue;
          ++fg;
          close += std::abs(int(back.intensities()[i]) - int(clean.intensities()[i])) <= 2;
        }
        CAPTURE(level.id);
        // Above slope ~2.7 the lattice of the compressed scene is coarser than
        // +-2 after expansion; reported, not enforced (see acceptance A3).
        if (level.slope_range.second <= 2.7) {
          CHECK(double(close) / fg >= 0.99);
        } else {
          WARN(double(close) / fg >= 0.99);
        }
      }
    }
  }
}
