#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace ofgsc {

// Bad input data or a violated precondition. The CLI maps this to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Interleaved RGB, row-major, 8-bit samples.
struct Frame {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<std::uint8_t> data;

  Frame() = default;
  Frame(int h, int w, int c = 3);

  std::uint8_t& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Frame&) const = default;
};

struct Video {
  std::vector<Frame> frames;
  double frame_rate = 25.0;

  int size() const { return static_cast<int>(frames.size()); }
  int height() const { return frames.empty() ? 0 : frames.front().height; }
  int width() const { return frames.empty() ? 0 : frames.front().width; }
  // Throws InputError unless T >= 2 and all frames share geometry.
  void validate() const;
};

// Single-channel real plane (luma, pyramid levels, warped images).
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, double fill = 0.0) : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }
};

// Per-pixel displacement from frame t-1 to frame t, sampled on the t-1 grid.
// Stored at 32-bit precision so .flo round trips are exact.
struct FlowField {
  int height = 0;
  int width = 0;
  std::vector<float> u;
  std::vector<float> v;

  FlowField() = default;
  FlowField(int h, int w, float u0 = 0.0F, float v0 = 0.0F)
      : height(h), width(w), u(static_cast<std::size_t>(h) * w, u0), v(static_cast<std::size_t>(h) * w, v0) {}

  std::size_t index(int y, int x) const { return static_cast<std::size_t>(y) * width + x; }
  bool operator==(const FlowField&) const = default;
};

struct PatchGrid {
  int patch_h = 16;
  int patch_w = 16;
  int rows = 0;
  int cols = 0;

  int count() const { return rows * cols; }
  // ceil(H/H') x ceil(W/W') grid; throws InputError if the patch exceeds the field.
  static PatchGrid for_size(int height, int width, int patch_h, int patch_w);
  bool operator==(const PatchGrid&) const = default;
};

// One C'=2 flow patch: u plane followed by v plane, each patch_h x patch_w.
struct FlowPatch {
  int row = 0;
  int col = 0;
  int patch_h = 0;
  int patch_w = 0;
  std::vector<float> payload;

  float u(int y, int x) const { return payload[static_cast<std::size_t>(y) * patch_w + x]; }
  float v(int y, int x) const {
    return payload[static_cast<std::size_t>(patch_h) * patch_w + static_cast<std::size_t>(y) * patch_w + x];
  }
};

Image to_gray(const Frame& frame);  // (R + 2G + B) / 4, integer arithmetic
Image to_luma(const Frame& frame);  // BT.601 weights, real-valued; used by quality metrics

Frame read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const Frame& frame);
Video load_ppm_sequence(const std::filesystem::path& directory);
// Writes frame_0000.ppm, frame_0001.ppm, ... into directory (created if missing).
void save_ppm_sequence(const std::filesystem::path& directory, const Video& video);

void write_flo(const std::filesystem::path& path, const FlowField& flow);
FlowField read_flo(const std::filesystem::path& path);
FlowField flo_roundtrip(const FlowField& flow, const std::filesystem::path& path);

// Row-major (i, j) order; boundary patches zero-padded to full size.
std::vector<FlowPatch> partition_patches(const FlowField& field, const PatchGrid& grid);
// Inverse of partition_patches, cropping the padding. Missing patches read as zero flow.
FlowField assemble_patches(const std::vector<FlowPatch>& patches, const PatchGrid& grid, int height, int width);

// Writes to a sibling temp file and renames into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace ofgsc
