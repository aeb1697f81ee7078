#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

#include "ofgsc/video.hpp"

namespace testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("ofgsc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline ofgsc::Frame random_frame(int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(0, 255);
  ofgsc::Frame f(h, w, 3);
  for (auto& v : f.data) v = static_cast<std::uint8_t>(d(rng));
  return f;
}

inline ofgsc::Image random_image(int h, int w, std::uint64_t seed, double lo = 0.0, double hi = 255.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(lo, hi);
  ofgsc::Image img(h, w);
  for (double& v : img.data) v = d(rng);
  return img;
}

inline ofgsc::FlowField random_flow(int h, int w, std::uint64_t seed, float scale = 4.0F) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> d(-scale, scale);
  ofgsc::FlowField f(h, w);
  for (auto& v : f.u) v = d(rng);
  for (auto& v : f.v) v = d(rng);
  return f;
}

}  // namespace testing
