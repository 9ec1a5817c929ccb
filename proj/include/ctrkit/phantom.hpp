#pragma once

// Voxel occupancy grid of a segmented clot, with a header-plus-raw file
// format and import from a thresholded PGM slice stack.

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ctrkit/error.hpp"
#include "ctrkit/kinematics.hpp"

namespace ctrkit {

struct VoxelIndex {
  int i = 0, j = 0, k = 0;
  friend bool operator==(const VoxelIndex&, const VoxelIndex&) = default;
};

class ClotPhantom {
 public:
  ClotPhantom() = default;
  ClotPhantom(std::array<int, 3> dims, Vec3 spacing = Vec3::Ones(),
              Vec3 origin = Vec3::Zero())
      : dims_(dims), spacing_(spacing), origin_(origin) {
    for (int d : dims_)
      if (d < 0) throw Error(ErrorCode::InvalidArgument, "ClotPhantom: negative dimension");
    if (!(spacing_.minCoeff() > 0.0))
      throw Error(ErrorCode::InvalidArgument, "ClotPhantom: spacing must be > 0");
    cells_.assign(std::size_t(dims_[0]) * std::size_t(dims_[1]) * std::size_t(dims_[2]), 0);
  }

  const std::array<int, 3>& dims() const { return dims_; }
  const Vec3& spacing() const { return spacing_; }
  const Vec3& origin() const { return origin_; }
  std::size_t size() const { return cells_.size(); }

  bool in_bounds(int i, int j, int k) const {
    return i >= 0 && j >= 0 && k >= 0 && i < dims_[0] && j < dims_[1] && k < dims_[2];
  }
  std::size_t linear(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(dims_[0]) * (std::size_t(j) + std::size_t(dims_[1]) * std::size_t(k));
  }
  VoxelIndex unlinear(std::size_t n) const {
    const auto nx = std::size_t(dims_[0]), ny = std::size_t(dims_[1]);
    return {int(n % nx), int((n / nx) % ny), int(n / (nx * ny))};
  }

  bool at(int i, int j, int k) const { return in_bounds(i, j, k) && cells_[linear(i, j, k)]; }
  bool at_linear(std::size_t n) const { return cells_[n] != 0; }
  void set(int i, int j, int k, bool v) {
    if (!in_bounds(i, j, k)) throw Error(ErrorCode::DomainError, "ClotPhantom: index out of range");
    set_linear(linear(i, j, k), v);
  }
  void set_linear(std::size_t n, bool v) {
    if (bool(cells_[n]) == v) return;
    cells_[n] = v ? 1 : 0;
    count_ += v ? 1 : -1;
  }

  /// Voxel center in the image frame: origin + index * spacing.
  Vec3 center(int i, int j, int k) const {
    return origin_ + Vec3(i * spacing_.x(), j * spacing_.y(), k * spacing_.z());
  }
  Vec3 center(const VoxelIndex& v) const { return center(v.i, v.j, v.k); }

  std::size_t count() const { return count_; }
  double voxel_volume_mm3() const { return spacing_.prod(); }
  double volume_ml() const { return double(count_) * voxel_volume_mm3() / 1000.0; }

  const std::vector<std::uint8_t>& cells() const { return cells_; }

  friend bool operator==(const ClotPhantom& a, const ClotPhantom& b) {
    return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.origin_ == b.origin_ &&
           a.cells_ == b.cells_;
  }

 private:
  std::array<int, 3> dims_{0, 0, 0};
  Vec3 spacing_ = Vec3::Ones();
  Vec3 origin_ = Vec3::Zero();
  std::vector<std::uint8_t> cells_;
  std::size_t count_ = 0;
};

/// Voxelized axis-aligned ellipsoid; a voxel is occupied when its center is
/// inside. The grid covers the ellipsoid with `margin` empty voxels per side.
inline ClotPhantom make_ellipsoid(const Vec3& center, const Vec3& semi_axes,
                                  const Vec3& spacing = Vec3::Ones(), int margin = 2) {
  if (!(semi_axes.minCoeff() > 0.0))
    throw Error(ErrorCode::InvalidArgument, "make_ellipsoid: semi-axes must be > 0");
  std::array<int, 3> dims{};
  Vec3 origin;
  for (int a = 0; a < 3; ++a) {
    const int half = int(std::ceil(semi_axes(a) / spacing(a))) + margin;
    dims[a] = 2 * half + 1;
    origin(a) = center(a) - half * spacing(a);
  }
  ClotPhantom ph(dims, spacing, origin);
  for (int k = 0; k < dims[2]; ++k)
    for (int j = 0; j < dims[1]; ++j)
      for (int i = 0; i < dims[0]; ++i) {
        const Vec3 u = (ph.center(i, j, k) - center).cwiseQuotient(semi_axes);
        if (u.squaredNorm() <= 1.0) ph.set(i, j, k, true);
      }
  return ph;
}

/// Ellipsoid with the given axis proportions, scaled so its voxel volume is
/// as close as possible to `target_ml`.
inline ClotPhantom make_ellipsoid_with_volume(const Vec3& center, const Vec3& proportions,
                                              double target_ml,
                                              const Vec3& spacing = Vec3::Ones()) {
  if (!(target_ml > 0.0))
    throw Error(ErrorCode::InvalidArgument, "make_ellipsoid_with_volume: volume must be > 0");
  const double unit = 4.0 / 3.0 * std::numbers::pi * proportions.prod() / 1000.0;
  double lo = 0.8 * std::cbrt(target_ml / unit);
  double hi = 1.2 * std::cbrt(target_ml / unit);
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (make_ellipsoid(center, proportions * mid, spacing).volume_ml() < target_ml) lo = mid;
    else hi = mid;
  }
  ClotPhantom a = make_ellipsoid(center, proportions * lo, spacing);
  ClotPhantom b = make_ellipsoid(center, proportions * hi, spacing);
  return std::abs(a.volume_ml() - target_ml) <= std::abs(b.volume_ml() - target_ml) ? a : b;
}

// --- File formats -------------------------------------------------------------

enum class RawEncoding { Byte, Bit };

/// Writes `<stem>.json` (dims, spacing, origin, encoding, data file name) and
/// `<stem>.raw`. Voxel order: i fastest, then j, then k.
inline void save_phantom(const ClotPhantom& ph, const std::filesystem::path& header,
                         RawEncoding enc = RawEncoding::Byte) {
  std::filesystem::path raw = header;
  raw.replace_extension(".raw");
  nlohmann::json h;
  h["dims"] = ph.dims();
  h["spacing"] = {ph.spacing().x(), ph.spacing().y(), ph.spacing().z()};
  h["origin"] = {ph.origin().x(), ph.origin().y(), ph.origin().z()};
  h["encoding"] = enc == RawEncoding::Byte ? "byte" : "bit";
  h["data_file"] = raw.filename().string();

  std::ofstream out(raw, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "save_phantom: cannot write " + raw.string());
  const auto& cells = ph.cells();
  if (enc == RawEncoding::Byte) {
    out.write(reinterpret_cast<const char*>(cells.data()), std::streamsize(cells.size()));
  } else {
    std::vector<std::uint8_t> packed((cells.size() + 7) / 8, 0);
    for (std::size_t n = 0; n < cells.size(); ++n)
      if (cells[n]) packed[n / 8] |= std::uint8_t(1u << (n % 8));
    out.write(reinterpret_cast<const char*>(packed.data()), std::streamsize(packed.size()));
  }
  std::ofstream hout(header);
  if (!hout) throw Error(ErrorCode::Io, "save_phantom: cannot write " + header.string());
  hout << h.dump(2) << '\n';
}

inline ClotPhantom load_phantom(const std::filesystem::path& header) {
  std::ifstream hin(header);
  if (!hin) throw Error(ErrorCode::Io, "load_phantom: cannot read " + header.string());
  nlohmann::json h;
  try {
    hin >> h;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("load_phantom: ") + e.what());
  }
  std::array<int, 3> dims{};
  Vec3 spacing, origin;
  std::string enc_name;
  std::filesystem::path raw;
  try {
    dims = h.at("dims").get<std::array<int, 3>>();
    const auto sp = h.at("spacing").get<std::array<double, 3>>();
    const auto og = h.at("origin").get<std::array<double, 3>>();
    spacing = Vec3(sp[0], sp[1], sp[2]);
    origin = Vec3(og[0], og[1], og[2]);
    enc_name = h.value("encoding", "byte");
    raw = header.parent_path() / h.at("data_file").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("load_phantom: bad header: ") + e.what());
  }
  if (enc_name != "byte" && enc_name != "bit")
    throw Error(ErrorCode::Parse, "load_phantom: encoding must be \"byte\" or \"bit\"");
  ClotPhantom ph(dims, spacing, origin);

  std::ifstream in(raw, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "load_phantom: cannot read " + raw.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::size_t n = ph.size();
  const std::size_t need = enc_name == "byte" ? n : (n + 7) / 8;
  if (bytes.size() != need) {
    std::ostringstream os;
    os << "load_phantom: " << raw.string() << " has " << bytes.size() << " bytes, expected "
       << need;
    throw Error(ErrorCode::Parse, os.str());
  }
  for (std::size_t c = 0; c < n; ++c) {
    const bool v = enc_name == "byte"
                       ? bytes[c] != 0
                       : ((static_cast<unsigned char>(bytes[c / 8]) >> (c % 8)) & 1u) != 0;
    if (v) ph.set_linear(c, true);
  }
  return ph;
}

struct GrayImage {
  int width = 0, height = 0;
  int maxval = 255;
  std::vector<int> pixels;  ///< row-major
};

/// Reads a binary (P5) or ASCII (P2) PGM file.
inline GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "read_pgm: cannot read " + path.string());
  auto token = [&]() {
    std::string t;
    char c;
    while (in.get(c)) {
      if (c == '#') {
        std::string skip;
        std::getline(in, skip);
      } else if (!std::isspace(static_cast<unsigned char>(c))) {
        t.push_back(c);
        break;
      }
    }
    while (in.get(c) && !std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    return t;
  };
  auto number = [&](const char* what) {
    const std::string t = token();
    try {
      return std::stoi(t);
    } catch (const std::exception&) {
      throw Error(ErrorCode::Parse, std::string("read_pgm: bad ") + what + " in " + path.string());
    }
  };
  const std::string magic = token();
  if (magic != "P5" && magic != "P2")
    throw Error(ErrorCode::Parse, "read_pgm: " + path.string() + " is not a P2/P5 PGM");
  GrayImage img;
  img.width = number("width");
  img.height = number("height");
  img.maxval = number("maxval");
  if (img.width <= 0 || img.height <= 0 || img.maxval <= 0 || img.maxval > 65535)
    throw Error(ErrorCode::Parse, "read_pgm: bad header in " + path.string());
  const std::size_t n = std::size_t(img.width) * std::size_t(img.height);
  img.pixels.resize(n);
  if (magic == "P2") {
    for (std::size_t p = 0; p < n; ++p) img.pixels[p] = number("pixel");
  } else {
    const int bpp = img.maxval < 256 ? 1 : 2;
    std::vector<unsigned char> buf(n * std::size_t(bpp));
    in.read(reinterpret_cast<char*>(buf.data()), std::streamsize(buf.size()));
    if (std::size_t(in.gcount()) != buf.size())
      throw Error(ErrorCode::Parse, "read_pgm: truncated pixel data in " + path.string());
    for (std::size_t p = 0; p < n; ++p)
      img.pixels[p] = bpp == 1 ? buf[p] : (buf[2 * p] << 8) | buf[2 * p + 1];
  }
  return img;
}

/// Stacks slices along k; a voxel is occupied when its gray value >= threshold.
/// Image rows map to j, columns to i.
inline ClotPhantom load_pgm_stack(const std::vector<std::filesystem::path>& slices,
                                  int threshold, const Vec3& spacing = Vec3::Ones(),
                                  const Vec3& origin = Vec3::Zero()) {
  if (slices.empty()) throw Error(ErrorCode::InvalidArgument, "load_pgm_stack: no slices");
  std::vector<GrayImage> imgs;
  imgs.reserve(slices.size());
  for (const auto& s : slices) imgs.push_back(read_pgm(s));
  for (const auto& im : imgs)
    if (im.width != imgs[0].width || im.height != imgs[0].height)
      throw Error(ErrorCode::SizeMismatch, "load_pgm_stack: slice sizes differ");
  ClotPhantom ph({imgs[0].width, imgs[0].height, int(imgs.size())}, spacing, origin);
  for (int k = 0; k < int(imgs.size()); ++k)
    for (int j = 0; j < imgs[0].height; ++j)
      for (int i = 0; i < imgs[0].width; ++i)
        if (imgs[std::size_t(k)].pixels[std::size_t(j) * std::size_t(imgs[0].width) + std::size_t(i)] >= threshold)
          ph.set(i, j, k, true);
  return ph;
}

}  // namespace ctrkit
