#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "textspot/densemaps.hpp"
#include "textspot/io_error.hpp"

namespace textspot {

// Fixed-layout binary tensor container ("CNMP"):
//
//   magic       4 bytes "CNMP"
//   version     u32 LE (currently 1)
//   channels    u32 LE
//   height      u32 LE
//   width       u32 LE
//   plane_count u32 LE
//   plane_count entries of { name_len u32 LE, name bytes,
//                            channel_offset u32 LE, channel_count u32 LE }
//   payload     channels*height*width f32 LE, channel-major then row-major
//
// A full map stack carries the five planes det_seg/det_geo/char_seg/
// char_geo/char_cls with channel counts 2/5/2/5/68 (82 total). Any trainer
// can emit this in a few lines.
struct TensorPlane {
  std::string name;
  uint32_t channel_offset = 0;
  uint32_t channel_count = 0;
};

struct TensorFile {
  uint32_t channels = 0;
  uint32_t height = 0;
  uint32_t width = 0;
  std::vector<TensorPlane> planes;
  std::vector<float> data;  // channels * height * width
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "tensor io assumes a little-endian host");
static_assert(sizeof(float) == 4, "tensor payload is 32-bit floats");

inline void put_u32(std::string& out, uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

}  // namespace detail

inline constexpr char kTensorMagic[4] = {'C', 'N', 'M', 'P'};
inline constexpr uint32_t kTensorVersion = 1;

inline void write_tensor(const std::filesystem::path& path, const TensorFile& t) {
  size_t cells = static_cast<size_t>(t.channels) * t.height * t.width;
  if (t.data.size() != cells) {
    throw IoError(IoError::Kind::ChannelMismatch,
                  "write_tensor: payload size does not match channels*height*width");
  }
  for (const TensorPlane& p : t.planes) {
    if (static_cast<uint64_t>(p.channel_offset) + p.channel_count > t.channels) {
      throw IoError(IoError::Kind::BadManifest,
                    "write_tensor: plane '" + p.name + "' exceeds channel range");
    }
  }
  std::string header;
  header.append(kTensorMagic, 4);
  detail::put_u32(header, kTensorVersion);
  detail::put_u32(header, t.channels);
  detail::put_u32(header, t.height);
  detail::put_u32(header, t.width);
  detail::put_u32(header, static_cast<uint32_t>(t.planes.size()));
  for (const TensorPlane& p : t.planes) {
    detail::put_u32(header, static_cast<uint32_t>(p.name.size()));
    header.append(p.name);
    detail::put_u32(header, p.channel_offset);
    detail::put_u32(header, p.channel_count);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError(IoError::Kind::MissingFile, "cannot open for writing: " + path.string());
  }
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
  if (!out) {
    throw IoError(IoError::Kind::Truncated, "short write: " + path.string());
  }
}

inline TensorFile read_tensor(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError(IoError::Kind::MissingFile, "cannot open: " + path.string());
  }
  auto read_exact = [&](void* dst, size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (static_cast<size_t>(in.gcount()) != n) {
      throw IoError(IoError::Kind::Truncated,
                    path.string() + ": truncated while reading " + what);
    }
  };
  auto read_u32 = [&](const char* what) {
    uint32_t v = 0;
    read_exact(&v, 4, what);
    return v;
  };

  char magic[4];
  read_exact(magic, 4, "magic");
  if (std::memcmp(magic, kTensorMagic, 4) != 0) {
    throw IoError(IoError::Kind::BadMagic, path.string() + ": bad magic");
  }
  uint32_t version = read_u32("version");
  if (version != kTensorVersion) {
    throw IoError(IoError::Kind::BadVersion,
                  path.string() + ": unsupported version " + std::to_string(version));
  }
  TensorFile t;
  t.channels = read_u32("channels");
  t.height = read_u32("height");
  t.width = read_u32("width");
  uint32_t plane_count = read_u32("plane count");
  if (t.channels == 0 || t.height == 0 || t.width == 0 || plane_count > 1024) {
    throw IoError(IoError::Kind::BadManifest, path.string() + ": implausible header");
  }
  uint64_t covered = 0;
  for (uint32_t i = 0; i < plane_count; ++i) {
    TensorPlane p;
    uint32_t name_len = read_u32("plane name length");
    if (name_len > 256) {
      throw IoError(IoError::Kind::BadManifest, path.string() + ": plane name too long");
    }
    p.name.resize(name_len);
    read_exact(p.name.data(), name_len, "plane name");
    p.channel_offset = read_u32("plane offset");
    p.channel_count = read_u32("plane channel count");
    if (static_cast<uint64_t>(p.channel_offset) + p.channel_count > t.channels) {
      throw IoError(IoError::Kind::BadManifest,
                    path.string() + ": plane '" + p.name + "' exceeds channel range");
    }
    covered += p.channel_count;
    t.planes.push_back(std::move(p));
  }
  if (covered != t.channels) {
    throw IoError(IoError::Kind::BadManifest,
                  path.string() + ": manifest covers " + std::to_string(covered) + " of " +
                      std::to_string(t.channels) + " channels");
  }
  size_t cells = static_cast<size_t>(t.channels) * t.height * t.width;
  t.data.resize(cells);
  read_exact(t.data.data(), cells * sizeof(float), "payload");
  // trailing bytes mean the header lied about the size
  char extra;
  in.read(&extra, 1);
  if (in.gcount() == 1) {
    throw IoError(IoError::Kind::ChannelMismatch, path.string() + ": trailing payload bytes");
  }
  return t;
}

// --- map-stack adapters --------------------------------------------------

inline TensorFile to_tensor(const DenseMapStack& m) {
  TensorFile t;
  t.channels = DenseMapStack::kTotalChannels;
  t.height = static_cast<uint32_t>(m.height);
  t.width = static_cast<uint32_t>(m.width);
  t.planes = {{"det_seg", 0, 2},
              {"det_geo", 2, 5},
              {"char_seg", 7, 2},
              {"char_geo", 9, 5},
              {"char_cls", 14, 68}};
  t.data.reserve(static_cast<size_t>(t.channels) * m.cell_count());
  for (const auto* plane : {&m.det_seg, &m.det_geo, &m.char_seg, &m.char_geo, &m.char_cls}) {
    t.data.insert(t.data.end(), plane->begin(), plane->end());
  }
  return t;
}

inline DenseMapStack from_tensor(const TensorFile& t, int stride = 4) {
  if (t.channels != DenseMapStack::kTotalChannels) {
    throw IoError(IoError::Kind::ChannelMismatch,
                  "map stack needs " + std::to_string(DenseMapStack::kTotalChannels) +
                      " channels, file has " + std::to_string(t.channels));
  }
  struct Want {
    const char* name;
    uint32_t count;
  };
  constexpr Want wants[] = {
      {"det_seg", 2}, {"det_geo", 5}, {"char_seg", 2}, {"char_geo", 5}, {"char_cls", 68}};
  DenseMapStack m = DenseMapStack::zeros(static_cast<int>(t.height),
                                         static_cast<int>(t.width), stride);
  std::vector<float>* dests[] = {&m.det_seg, &m.det_geo, &m.char_seg, &m.char_geo, &m.char_cls};
  size_t hw = m.cell_count();
  for (size_t i = 0; i < 5; ++i) {
    const TensorPlane* found = nullptr;
    for (const TensorPlane& p : t.planes) {
      if (p.name == wants[i].name) {
        found = &p;
        break;
      }
    }
    if (found == nullptr || found->channel_count != wants[i].count) {
      throw IoError(IoError::Kind::ChannelMismatch,
                    std::string("map stack plane missing or wrong size: ") + wants[i].name);
    }
    const float* src = t.data.data() + static_cast<size_t>(found->channel_offset) * hw;
    std::copy(src, src + static_cast<size_t>(wants[i].count) * hw, dests[i]->begin());
  }
  return m;
}

inline void write_stack(const std::filesystem::path& path, const DenseMapStack& m) {
  write_tensor(path, to_tensor(m));
}

inline DenseMapStack read_stack(const std::filesystem::path& path, int stride = 4) {
  return from_tensor(read_tensor(path), stride);
}

// The dont_care mask rides in its own single-plane file.
inline void write_ignore_mask(const std::filesystem::path& path, const std::vector<uint8_t>& mask,
                              int height, int width) {
  TensorFile t;
  t.channels = 1;
  t.height = static_cast<uint32_t>(height);
  t.width = static_cast<uint32_t>(width);
  t.planes = {{"ignore", 0, 1}};
  t.data.reserve(mask.size());
  for (uint8_t v : mask) t.data.push_back(v ? 1.0f : 0.0f);
  write_tensor(path, t);
}

}  // namespace textspot
