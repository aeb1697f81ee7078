#include "ofgsc/video.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace ofgsc {

namespace fs = std::filesystem;

Frame::Frame(int h, int w, int c) : height(h), width(w), channels(c) {
  if (h < 1 || w < 1 || c < 1) throw InputError("frame dimensions must be positive");
  data.assign(static_cast<std::size_t>(h) * w * c, 0);
}

void Video::validate() const {
  if (frames.size() < 2) throw InputError("insufficient frames: need at least 2, got " + std::to_string(frames.size()));
  const Frame& first = frames.front();
  for (const Frame& f : frames) {
    if (f.height != first.height || f.width != first.width || f.channels != first.channels)
      throw InputError("frame dimension mismatch");
    if (f.data.size() != static_cast<std::size_t>(f.height) * f.width * f.channels)
      throw InputError("frame sample count does not match dimensions");
  }
}

PatchGrid PatchGrid::for_size(int height, int width, int patch_h, int patch_w) {
  if (patch_h < 1 || patch_w < 1) throw InputError("patch dimensions must be positive");
  if (patch_h > height || patch_w > width) throw InputError("patch larger than field");
  PatchGrid g;
  g.patch_h = patch_h;
  g.patch_w = patch_w;
  g.rows = (height + patch_h - 1) / patch_h;
  g.cols = (width + patch_w - 1) / patch_w;
  return g;
}

Image to_gray(const Frame& frame) {
  if (frame.channels != 3) throw InputError("grayscale conversion expects RGB frames");
  Image out(frame.height, frame.width);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x) {
      const int sum = frame.at(y, x, 0) + 2 * frame.at(y, x, 1) + frame.at(y, x, 2);
      out.at(y, x) = static_cast<double>(sum / 4);
    }
  return out;
}

Image to_luma(const Frame& frame) {
  Image out(frame.height, frame.width);
  if (frame.channels == 1) {
    std::transform(frame.data.begin(), frame.data.end(), out.data.begin(), [](std::uint8_t s) { return double(s); });
    return out;
  }
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      out.at(y, x) = 0.299 * frame.at(y, x, 0) + 0.587 * frame.at(y, x, 1) + 0.114 * frame.at(y, x, 2);
  return out;
}

// ---------------------------------------------------------------------------
// PPM

namespace {

std::string read_all(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(const std::string& buf, std::size_t& pos) {
  for (;;) {
    while (pos < buf.size() && std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
    if (pos < buf.size() && buf[pos] == '#') {
      while (pos < buf.size() && buf[pos] != '\n') ++pos;
      continue;
    }
    break;
  }
  const std::size_t start = pos;
  while (pos < buf.size() && !std::isspace(static_cast<unsigned char>(buf[pos]))) ++pos;
  return buf.substr(start, pos - start);
}

int header_int(const std::string& buf, std::size_t& pos, const fs::path& path) {
  const std::string tok = header_token(buf, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw InputError("bad PPM header in " + path.string());
  }
}

}  // namespace

Frame read_ppm(const fs::path& path) {
  const std::string buf = read_all(path);
  std::size_t pos = 0;
  if (header_token(buf, pos) != "P6") throw InputError("not a binary P6 PPM: " + path.string());
  const int w = header_int(buf, pos, path);
  const int h = header_int(buf, pos, path);
  const int maxval = header_int(buf, pos, path);
  if (w < 1 || h < 1) throw InputError("bad PPM dimensions in " + path.string());
  if (maxval != 255) throw InputError("PPM maxval must be 255: " + path.string());
  ++pos;  // single whitespace byte before the raster
  Frame f(h, w, 3);
  if (buf.size() < pos + f.data.size()) throw InputError("truncated PPM raster: " + path.string());
  std::memcpy(f.data.data(), buf.data() + pos, f.data.size());
  return f;
}

void write_ppm(const fs::path& path, const Frame& frame) {
  if (frame.channels != 3) throw InputError("PPM output requires 3 channels");
  std::string out = "P6\n" + std::to_string(frame.width) + " " + std::to_string(frame.height) + "\n255\n";
  out.append(reinterpret_cast<const char*>(frame.data.data()), frame.data.size());
  write_file_atomic(path, out);
}

Video load_ppm_sequence(const fs::path& directory) {
  if (!fs::is_directory(directory)) throw InputError("missing directory: " + directory.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(directory))
    if (entry.is_regular_file() && entry.path().extension() == ".ppm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.size() < 2) throw InputError("insufficient frames in " + directory.string());
  Video video;
  video.frames.reserve(files.size());
  for (const auto& f : files) video.frames.push_back(read_ppm(f));
  video.validate();
  return video;
}

void save_ppm_sequence(const fs::path& directory, const Video& video) {
  fs::create_directories(directory);
  char name[32];
  for (int t = 0; t < video.size(); ++t) {
    std::snprintf(name, sizeof name, "frame_%04d.ppm", t);
    write_ppm(directory / name, video.frames[t]);
  }
}

// ---------------------------------------------------------------------------
// Middlebury .flo

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFU));
}

std::uint32_t get_u32(const std::string& buf, std::size_t pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  return v;
}

}  // namespace

void write_flo(const fs::path& path, const FlowField& flow) {
  std::string out = "PIEH";
  out.reserve(12 + flow.u.size() * 8);
  put_u32(out, static_cast<std::uint32_t>(flow.width));
  put_u32(out, static_cast<std::uint32_t>(flow.height));
  for (std::size_t i = 0; i < flow.u.size(); ++i) {
    put_u32(out, std::bit_cast<std::uint32_t>(flow.u[i]));
    put_u32(out, std::bit_cast<std::uint32_t>(flow.v[i]));
  }
  write_file_atomic(path, out);
}

FlowField read_flo(const fs::path& path) {
  const std::string buf = read_all(path);
  if (buf.size() < 12) throw InputError("truncated .flo header: " + path.string());
  if (buf.compare(0, 4, "PIEH") != 0) throw InputError("bad .flo magic: " + path.string());
  const auto w = static_cast<int>(get_u32(buf, 4));
  const auto h = static_cast<int>(get_u32(buf, 8));
  if (w < 1 || h < 1 || w > (1 << 16) || h > (1 << 16)) throw InputError("bad .flo dimensions: " + path.string());
  FlowField flow(h, w);
  if (buf.size() < 12 + flow.u.size() * 8) throw InputError("truncated .flo data: " + path.string());
  std::size_t pos = 12;
  for (std::size_t i = 0; i < flow.u.size(); ++i, pos += 8) {
    flow.u[i] = std::bit_cast<float>(get_u32(buf, pos));
    flow.v[i] = std::bit_cast<float>(get_u32(buf, pos + 4));
  }
  return flow;
}

FlowField flo_roundtrip(const FlowField& flow, const fs::path& path) {
  write_flo(path, flow);
  return read_flo(path);
}

// ---------------------------------------------------------------------------
// Patches

std::vector<FlowPatch> partition_patches(const FlowField& field, const PatchGrid& grid) {
  const PatchGrid expect = PatchGrid::for_size(field.height, field.width, grid.patch_h, grid.patch_w);
  if (expect != grid) throw InputError("patch grid does not match field dimensions");
  const std::size_t plane = static_cast<std::size_t>(grid.patch_h) * grid.patch_w;
  std::vector<FlowPatch> out;
  out.reserve(grid.count());
  for (int i = 0; i < grid.rows; ++i)
    for (int j = 0; j < grid.cols; ++j) {
      FlowPatch p{i, j, grid.patch_h, grid.patch_w, std::vector<float>(2 * plane, 0.0F)};
      for (int y = 0; y < grid.patch_h; ++y) {
        const int fy = i * grid.patch_h + y;
        if (fy >= field.height) break;
        for (int x = 0; x < grid.patch_w; ++x) {
          const int fx = j * grid.patch_w + x;
          if (fx >= field.width) break;
          const std::size_t k = static_cast<std::size_t>(y) * grid.patch_w + x;
          p.payload[k] = field.u[field.index(fy, fx)];
          p.payload[plane + k] = field.v[field.index(fy, fx)];
        }
      }
      out.push_back(std::move(p));
    }
  return out;
}

FlowField assemble_patches(const std::vector<FlowPatch>& patches, const PatchGrid& grid, int height, int width) {
  FlowField field(height, width);
  for (const FlowPatch& p : patches) {
    if (p.row < 0 || p.row >= grid.rows || p.col < 0 || p.col >= grid.cols || p.patch_h != grid.patch_h ||
        p.patch_w != grid.patch_w || p.payload.size() != 2 * static_cast<std::size_t>(p.patch_h) * p.patch_w)
      throw InputError("patch does not fit grid");
    for (int y = 0; y < p.patch_h; ++y) {
      const int fy = p.row * p.patch_h + y;
      if (fy >= height) break;
      for (int x = 0; x < p.patch_w; ++x) {
        const int fx = p.col * p.patch_w + x;
        if (fx >= width) break;
        field.u[field.index(fy, fx)] = p.u(y, x);
        field.v[field.index(fy, fx)] = p.v(y, x);
      }
    }
  }
  return field;
}

void write_file_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed: " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace ofgsc
