#include "nsreg/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "nsreg/error.hpp"

namespace nsreg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void validate(const Dims& dims, const VoxelSize& voxel_size, std::size_t n,
              std::uint32_t ceiling) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scene dims must be >= 1");
  }
  for (double s : voxel_size) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::kInvalidArgument, "voxel size must be positive");
    }
  }
  if (n != dims.count()) {
    throw Error(ErrorCode::kSizeMismatch, "intensity count does not match dims");
  }
  if (ceiling < 1 || ceiling > kMaxCeiling) {
    throw Error(ErrorCode::kInvalidArgument, "intensity ceiling out of range");
  }
}

}  // namespace

Scene::Scene(Dims dims, VoxelSize voxel_size, std::vector<Intensity> intensities,
             std::string body_region, std::string protocol, std::uint32_t ceiling)
    : dims_(dims),
      voxel_size_(voxel_size),
      intensities_(std::move(intensities)),
      body_region_(std::move(body_region)),
      protocol_(std::move(protocol)),
      ceiling_(ceiling) {
  validate(dims_, voxel_size_, intensities_.size(), ceiling_);
}

Scene Scene::zeros(Dims dims, VoxelSize voxel_size, std::string body_region,
                   std::string protocol, std::uint32_t ceiling) {
  if (dims.nx < 1 || dims.ny < 1 || dims.nz < 1) {
    throw Error(ErrorCode::kInvalidArgument, "scene dims must be >= 1");
  }
  return Scene(dims, voxel_size, std::vector<Intensity>(dims.count(), 0),
               std::move(body_region), std::move(protocol), ceiling);
}

Index3 Scene::coords(std::size_t i) const noexcept {
  const auto nx = static_cast<std::size_t>(dims_.nx);
  const auto ny = static_cast<std::size_t>(dims_.ny);
  return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
          static_cast<int>(i / (nx * ny))};
}

Scene Scene::with_intensities(std::vector<Intensity> values) const {
  return with_intensities(std::move(values), ceiling_);
}

Scene Scene::with_intensities(std::vector<Intensity> values, std::uint32_t ceiling) const {
  return Scene(dims_, voxel_size_, std::move(values), body_region_, protocol_, ceiling);
}

Scene Scene::with_protocol(std::string protocol) const {
  Scene out = *this;
  out.protocol_ = std::move(protocol);
  return out;
}

std::size_t Scene::foreground_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(intensities_.begin(), intensities_.end(), [](Intensity v) { return v > 0; }));
}

std::array<Index3, 8> BoundingBox::corners() const noexcept {
  std::array<Index3, 8> out{};
  for (int k = 0; k < 8; ++k) {
    out[k] = {(k & 1) ? max_corner[0] : min_corner[0], (k & 2) ? max_corner[1] : min_corner[1],
              (k & 4) ? max_corner[2] : min_corner[2]};
  }
  return out;
}

fs::path header_path(const fs::path& path) {
  fs::path p = path;
  if (p.extension() == ".scnr" || p.extension() == ".scnh") p.replace_extension();
  p += ".scnh";
  return p;
}

fs::path raw_path(const fs::path& path) {
  fs::path p = path;
  if (p.extension() == ".scnr" || p.extension() == ".scnh") p.replace_extension();
  p += ".scnr";
  return p;
}

Scene load_scene(const fs::path& path) {
  const fs::path hp = header_path(path);
  const fs::path rp = raw_path(path);
  std::ifstream hs(hp);
  if (!hs) throw Error(ErrorCode::kIo, "cannot open scene header " + hp.string());

  json header;
  try {
    hs >> header;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "malformed scene header " + hp.string() + ": " + e.what());
  }

  Dims dims;
  VoxelSize voxel_size{1.0, 1.0, 1.0};
  std::string body_region = "head";
  std::string protocol;
  std::uint32_t ceiling = kDefaultCeiling;
  try {
    const auto d = header.at("dims").get<std::vector<long long>>();
    if (d.size() != 3) throw Error(ErrorCode::kFormat, "dims must have 3 entries");
    for (long long v : d) {
      if (v < 1 || v > std::numeric_limits<int>::max()) {
        throw Error(ErrorCode::kFormat, "dims must be positive");
      }
    }
    dims = {static_cast<int>(d[0]), static_cast<int>(d[1]), static_cast<int>(d[2])};
    if (header.contains("voxel_size_mm")) {
      const auto vs = header.at("voxel_size_mm").get<std::vector<double>>();
      if (vs.size() != 3) throw Error(ErrorCode::kFormat, "voxel_size_mm must have 3 entries");
      voxel_size = {vs[0], vs[1], vs[2]};
    }
    if (header.value("dtype", std::string("u16")) != "u16") {
      throw Error(ErrorCode::kFormat, "only dtype u16 is supported");
    }
    if (header.value("byte_order", std::string("le")) != "le") {
      throw Error(ErrorCode::kFormat, "only little-endian byte order is supported");
    }
    body_region = header.value("body_region", body_region);
    protocol = header.value("protocol", protocol);
    ceiling = header.value("intensity_ceiling", ceiling);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kFormat, "bad scene header " + hp.string() + ": " + e.what());
  }

  std::ifstream rs(rp, std::ios::binary);
  if (!rs) throw Error(ErrorCode::kIo, "cannot open scene data " + rp.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(rs)),
                                         std::istreambuf_iterator<char>());
  if (bytes.size() != dims.count() * 2) {
    std::ostringstream msg;
    msg << "scene data " << rp.string() << " has " << bytes.size() << " bytes, expected "
        << dims.count() * 2;
    throw Error(ErrorCode::kSizeMismatch, msg.str());
  }
  std::vector<Intensity> values(dims.count());
  for (std::size_t i = 0; i < values.size(); ++i) {
    values[i] = static_cast<Intensity>(bytes[2 * i] | (bytes[2 * i + 1] << 8));
  }
  return Scene(dims, voxel_size, std::move(values), body_region, protocol, ceiling);
}

void save_scene(const Scene& scene, const fs::path& path) {
  const fs::path hp = header_path(path);
  const fs::path rp = raw_path(path);
  if (hp.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(hp.parent_path(), ec);
  }

  json header;
  header["dims"] = {scene.dims().nx, scene.dims().ny, scene.dims().nz};
  header["voxel_size_mm"] = scene.voxel_size();
  header["dtype"] = "u16";
  header["byte_order"] = "le";
  header["body_region"] = scene.body_region();
  header["protocol"] = scene.protocol();
  header["intensity_ceiling"] = scene.ceiling();

  std::ofstream hs(hp, std::ios::trunc);
  if (!hs) throw Error(ErrorCode::kIo, "cannot write scene header " + hp.string());
  hs << header.dump(2) << '\n';

  std::vector<char> bytes(scene.intensities().size() * 2);
  for (std::size_t i = 0; i < scene.intensities().size(); ++i) {
    const Intensity v = scene.intensities()[i];
    bytes[2 * i] = static_cast<char>(v & 0xff);
    bytes[2 * i + 1] = static_cast<char>(v >> 8);
  }
  std::ofstream rs(rp, std::ios::binary | std::ios::trunc);
  if (!rs) throw Error(ErrorCode::kIo, "cannot write scene data " + rp.string());
  rs.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!hs || !rs) throw Error(ErrorCode::kIo, "write failed for " + hp.string());
}

Histogram foreground_histogram(const Scene& scene) {
  Histogram h;
  for (Intensity v : scene.intensities()) {
    if (v > 0) {
      ++h.counts[v];
      ++h.total_foreground;
    }
  }
  if (h.total_foreground == 0) {
    throw Error(ErrorCode::kEmptyForeground, "scene has no foreground voxels");
  }
  return h;
}

Intensity percentile_intensity(const Histogram& hist, double pc) {
  if (!(pc >= 0.0 && pc <= 100.0)) {
    throw Error(ErrorCode::kInvalidArgument, "percentile must lie in [0, 100]");
  }
  if (hist.counts.empty() || hist.total_foreground <= 0) {
    throw Error(ErrorCode::kEmptyForeground, "percentile of an empty histogram");
  }
  // Guard against 0.998 * 1000 landing a hair above an integer.
  const double exact = pc / 100.0 * static_cast<double>(hist.total_foreground);
  const auto rank = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(exact - 1e-9)));
  std::int64_t cumulative = 0;
  for (const auto& [value, count] : hist.counts) {
    cumulative += count;
    if (cumulative >= rank) return value;
  }
  return hist.counts.rbegin()->first;
}

BoundingBox foreground_bounding_box(const Scene& scene) {
  const Dims& d = scene.dims();
  BoundingBox box{{d.nx, d.ny, d.nz}, {-1, -1, -1}};
  bool any = false;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x) {
        if (scene.at(x, y, z) == 0) continue;
        any = true;
        box.min_corner = {std::min(box.min_corner[0], x), std::min(box.min_corner[1], y),
                          std::min(box.min_corner[2], z)};
        box.max_corner = {std::max(box.max_corner[0], x), std::max(box.max_corner[1], y),
                          std::max(box.max_corner[2], z)};
      }
    }
  }
  if (!any) throw Error(ErrorCode::kEmptyForeground, "scene has no foreground voxels");
  return box;
}

}  // namespace nsreg
