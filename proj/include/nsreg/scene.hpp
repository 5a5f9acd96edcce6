#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace nsreg {

using Intensity = std::uint16_t;

inline constexpr std::uint32_t kDefaultCeiling = 4095;
inline constexpr std::uint32_t kMaxCeiling = 65535;

struct Dims {
  int nx = 1;
  int ny = 1;
  int nz = 1;

  std::size_t count() const noexcept {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  friend bool operator==(const Dims&, const Dims&) = default;
};

using VoxelSize = std::array<double, 3>;
using Index3 = std::array<int, 3>;

// A scene: voxel grid plus integer intensity function. Intensity 0 marks
// voxels without measured data; everything > 0 is foreground.
class Scene {
 public:
  Scene() = default;
  Scene(Dims dims, VoxelSize voxel_size, std::vector<Intensity> intensities,
        std::string body_region = "head", std::string protocol = "",
        std::uint32_t ceiling = kDefaultCeiling);

  // All-zero scene.
  static Scene zeros(Dims dims, VoxelSize voxel_size = {1.0, 1.0, 1.0},
                     std::string body_region = "head", std::string protocol = "",
                     std::uint32_t ceiling = kDefaultCeiling);

  const Dims& dims() const noexcept { return dims_; }
  const VoxelSize& voxel_size() const noexcept { return voxel_size_; }
  std::span<const Intensity> intensities() const noexcept { return intensities_; }
  const std::string& body_region() const noexcept { return body_region_; }
  const std::string& protocol() const noexcept { return protocol_; }
  std::uint32_t ceiling() const noexcept { return ceiling_; }

  std::size_t index(int x, int y, int z) const noexcept {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(dims_.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(dims_.ny) * z);
  }
  Intensity at(int x, int y, int z) const noexcept { return intensities_[index(x, y, z)]; }
  Index3 coords(std::size_t i) const noexcept;

  // Same geometry and metadata, new voxel values.
  Scene with_intensities(std::vector<Intensity> values) const;
  Scene with_intensities(std::vector<Intensity> values, std::uint32_t ceiling) const;
  Scene with_protocol(std::string protocol) const;

  std::size_t foreground_count() const noexcept;

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  Dims dims_{};
  VoxelSize voxel_size_{1.0, 1.0, 1.0};
  std::vector<Intensity> intensities_;
  std::string body_region_ = "head";
  std::string protocol_;
  std::uint32_t ceiling_ = kDefaultCeiling;
};

struct Histogram {
  std::map<Intensity, std::int64_t> counts;
  std::int64_t total_foreground = 0;
};

struct BoundingBox {
  Index3 min_corner{};
  Index3 max_corner{};

  std::array<Index3, 8> corners() const noexcept;
  friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
};

// Header path for a scene stem: "dir/name" or "dir/name.scnh" -> .scnh/.scnr pair.
std::filesystem::path header_path(const std::filesystem::path& path);
std::filesystem::path raw_path(const std::filesystem::path& path);

Scene load_scene(const std::filesystem::path& path);
void save_scene(const Scene& scene, const std::filesystem::path& path);

Histogram foreground_histogram(const Scene& scene);

// Nearest-rank percentile: smallest v with cumulative count(<= v) >=
// ceil(pc/100 * total). pc = 0 yields the minimum foreground intensity.
Intensity percentile_intensity(const Histogram& hist, double pc);

BoundingBox foreground_bounding_box(const Scene& scene);

}  // namespace nsreg
