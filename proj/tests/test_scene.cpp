#include <doctest.h>

#include <random>

#include "nsreg/error.hpp"
#include "nsreg/scene.hpp"
#include "support.hpp"

using namespace nsreg;
using nsreg::testing::make_scene;
using nsreg::testing::TempDir;

namespace {

// Histogram with `counts` voxels per key, laid out along x.
Scene scene_from_counts(const std::vector<std::pair<Intensity, int>>& counts) {
  std::vector<Intensity> v;
  for (auto [value, n] : counts) v.insert(v.end(), static_cast<std::size_t>(n), value);
  const int n = static_cast<int>(v.size());
  return Scene({n, 1, 1}, {1, 1, 1}, v);
}

}  // namespace

TEST_CASE("save and load round trip") {
  TempDir dir;
  SUBCASE("all-zero 4^3 scene writes 128 zero bytes") {
    const Scene s = Scene::zeros({4, 4, 4});
    save_scene(s, dir / "z");
    const std::string raw = nsreg::testing::read_bytes(dir / "z.scnr");
    CHECK(raw.size() == 128);
    CHECK(raw == std::string(128, '\0'));
    CHECK(load_scene(dir / "z.scnh") == s);
  }
  SUBCASE("protocol tag survives") {
    const Scene s = make_scene({3, 2, 2}, [](int x, int, int) { return Intensity(x + 1); }, "PD");
    save_scene(s, dir / "pd.scnh");
    CHECK(load_scene(dir / "pd").protocol() == "PD");
  }
  SUBCASE("random volumes are bit-exact") {
    std::mt19937 gen(7);
    for (int trial = 0; trial < 20; ++trial) {
      std::uniform_int_distribution<int> dim(1, 9);
      const Dims d{dim(gen), dim(gen), dim(gen)};
      std::uniform_int_distribution<int> val(0, 65535);
      std::vector<Intensity> v(d.count());
      for (auto& x : v) x = static_cast<Intensity>(val(gen));
      const Scene s(d, {0.5, 1.0, 2.5}, v, "head", "T2", kMaxCeiling);
      save_scene(s, dir / "r");
      CHECK(load_scene(dir / "r") == s);
    }
  }
  SUBCASE("little-endian payload") {
    save_scene(Scene({1, 1, 1}, {1, 1, 1}, {0x0102}), dir / "e");
    const std::string raw = nsreg::testing::read_bytes(dir / "e.scnr");
    REQUIRE(raw.size() == 2);
    CHECK(raw[0] == '\x02');
    CHECK(raw[1] == '\x01');
  }
}

TEST_CASE("load rejects missing or malformed files") {
  TempDir dir;
  CHECK_THROWS_AS(load_scene(dir / "none"), Error);
  save_scene(Scene::zeros({2, 2, 2}), dir / "t");
  std::filesystem::resize_file(dir / "t.scnr", 3);
  try {
    load_scene(dir / "t");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kSizeMismatch);
  }
}

TEST_CASE("foreground histogram") {
  const Scene s({4, 1, 1}, {1, 1, 1}, {0, 5, 5, 7});
  const Histogram h = foreground_histogram(s);
  CHECK(h.total_foreground == 3);
  CHECK(h.counts.size() == 2);
  CHECK(h.counts.at(5) == 2);
  CHECK(h.counts.at(7) == 1);

  const Histogram u = foreground_histogram(scene_from_counts({{9, 10}}));
  CHECK(u.counts.at(9) == 10);

  CHECK_THROWS_AS(foreground_histogram(Scene::zeros({3, 3, 3})), Error);

  std::mt19937 gen(3);
  std::uniform_int_distribution<int> val(0, 4);
  const Scene r = make_scene({6, 5, 4}, [&](int, int, int) { return Intensity(val(gen)); });
  CHECK(foreground_histogram(r).total_foreground == static_cast<std::int64_t>(r.foreground_count()));
}

TEST_CASE("nearest-rank percentile") {
  // Oracle: walk the sorted voxel list directly.
  auto oracle = [](std::vector<Intensity> v, double pc) {
    std::sort(v.begin(), v.end());
    const auto rank = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(pc / 100.0 * v.size() - 1e-9)));
    return v[rank - 1];
  };
  const Histogram h = foreground_histogram(scene_from_counts({{5, 2}, {7, 1}, {9, 1}}));
  CHECK(percentile_intensity(h, 50.0) == 5);
  CHECK(percentile_intensity(h, 0.0) == 5);

  std::vector<std::pair<Intensity, int>> ones;
  for (int i = 1; i <= 100; ++i) ones.push_back({Intensity(i), 1});
  CHECK(percentile_intensity(foreground_histogram(scene_from_counts(ones)), 99.8) == 100);

  CHECK_THROWS_AS(percentile_intensity(h, -1.0), Error);
  CHECK_THROWS_AS(percentile_intensity(h, 100.5), Error);

  std::mt19937 gen(11);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> val(1, 60);
    std::vector<Intensity> v(1 + gen() % 200);
    for (auto& x : v) x = static_cast<Intensity>(val(gen));
    const Histogram hr = foreground_histogram(Scene({static_cast<int>(v.size()), 1, 1}, {1, 1, 1}, v));
    Intensity prev = 0;
    for (double pc = 0.0; pc <= 100.0; pc += 0.7) {
      const Intensity got = percentile_intensity(hr, pc);
      CHECK(got == oracle(v, pc));
      CHECK(got >= prev);  // monotone in pc
      prev = got;
    }
  }
}

TEST_CASE("foreground bounding box") {
  const Scene one = make_scene({6, 7, 8}, [](int x, int y, int z) { return Intensity(x == 3 && y == 4 && z == 5); });
  const BoundingBox b = foreground_bounding_box(one);
  CHECK(b.min_corner == Index3{3, 4, 5});
  CHECK(b.max_corner == Index3{3, 4, 5});

  const Scene two = make_scene({10, 10, 10}, [](int x, int y, int z) {
    return Intensity((x == 0 && y == 0 && z == 0) || (x == 9 && y == 9 && z == 9));
  });
  CHECK(foreground_bounding_box(two).max_corner == Index3{9, 9, 9});
  CHECK(foreground_bounding_box(two).min_corner == Index3{0, 0, 0});

  const Scene full = make_scene({4, 5, 6}, [](int, int, int) { return Intensity(3); });
  const BoundingBox fb = foreground_bounding_box(full);
  CHECK(fb.max_corner == Index3{3, 4, 5});
  for (const auto& c : fb.corners()) {
    for (int a = 0; a < 3; ++a) {
      CHECK(c[a] >= 0);
    }
    CHECK(c[0] < 4);
    CHECK(c[1] < 5);
    CHECK(c[2] < 6);
  }
  CHECK_THROWS_AS(foreground_bounding_box(Scene::zeros({2, 2, 2})), Error);
}

TEST_CASE("scene construction validates its inputs") {
  CHECK_THROWS_AS(Scene({2, 2, 2}, {1, 1, 1}, std::vector<Intensity>(7)), Error);
  CHECK_THROWS_AS(Scene({2, 2, 2}, {0, 1, 1}, std::vector<Intensity>(8)), Error);
}
