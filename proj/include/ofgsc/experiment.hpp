#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ofgsc/channel.hpp"
#include "ofgsc/config.hpp"
#include "ofgsc/ddpg.hpp"
#include "ofgsc/load_model.hpp"
#include "ofgsc/optical_flow.hpp"
#include "ofgsc/reconstruction.hpp"
#include "ofgsc/semantic_extractor.hpp"
#include "ofgsc/synthetic.hpp"

namespace ofgsc::exp {

inline constexpr const char* kVersion = "0.1.0";

// A failure inside a named pipeline stage. bad_input() selects exit code 2.
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, std::string inputs_digest, const std::string& message, bool bad_input);

  const std::string& stage() const { return stage_; }
  const std::string& inputs_digest() const { return digest_; }
  bool bad_input() const { return bad_input_; }

 private:
  std::string stage_;
  std::string digest_;
  bool bad_input_;
};

// Runs fn, rethrowing any failure as a StageError tagged with the stage name.
void run_stage(const std::string& stage, const std::string& inputs_digest, const std::function<void()>& fn);

struct VideoSource {
  std::string id;
  std::filesystem::path directory;       // PPM sequence, or
  std::optional<synth::SceneSpec> scene;  // an in-memory synthetic scene
};

struct ExperimentConfig {
  std::vector<VideoSource> videos;
  int patch_h = 16;
  int patch_w = 16;
  flow::FlowEstimatorParams flow;
  semantic::ExtractorParams extractor;
  channel::CodecParams codec;
  channel::LinkParams link;
  load::LoadParams load;
  std::vector<double> rhos{0.0};
  std::vector<double> snrs_db{std::numeric_limits<double>::infinity()};
  std::uint64_t seed = 0;
  std::filesystem::path out = "out";
  int workers = 1;
  bool persist = false;

  void validate() const;
};

ExperimentConfig experiment_from_config(const config::Config& cfg);
// [load] section; frames/height/width are overridden by the video in pipeline runs.
load::LoadParams load_params_from_config(const config::Config& cfg);

struct PreparedVideo {
  std::string id;
  std::size_t index = 0;
  Video video;
  std::vector<FlowField> flows;
};

struct PointResult {
  std::string video_id;
  double rho = 0.0;
  double snr_db = 0.0;
  recon::QualityReport quality;
  load::LoadBreakdown load;
  int selected_patches = 0;
  std::size_t symbols = 0;
};

// Stages "load" and "flow".
PreparedVideo prepare_video(const VideoSource& source, std::size_t index, const ExperimentConfig& cfg);

// Codec, power normalization, channel and decoding for every selected patch.
// snr_db is the received per-symbol SNR; +inf is noiseless.
semantic::SelectionResult transmit_selection(const semantic::SelectionResult& sel, const channel::CodecParams& codec,
                                             const channel::LinkParams& link, double snr_db, std::uint64_t fading_seed,
                                             std::uint64_t noise_seed, std::size_t* symbol_count = nullptr);

// Stages "extract", "load_model", "transmit", "reconstruct", "quality".
PointResult run_point(const PreparedVideo& video, double rho, double snr_db, const ExperimentConfig& cfg);

// Every (video, rho, snr) point, up to cfg.workers at a time; results are in
// (video, rho, snr) order regardless of scheduling.
std::vector<PointResult> run_pipeline(const ExperimentConfig& cfg);

std::string summary_csv(const std::vector<PointResult>& results);
std::string quality_csv(const std::vector<PointResult>& results);

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first
// failure by index.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

struct AllocationConfig {
  ddpg::AllocationScenario scenario;
  ddpg::DdpgHyper hyper;
  std::uint64_t seed = 0;
};

AllocationConfig allocation_from_config(const config::Config& cfg);

struct AllocationReport {
  ddpg::TrainingResult training;
  ddpg::Allocation greedy;
  ddpg::Allocation oracle;
  ddpg::Allocation equal_split;
};

AllocationReport run_allocation(const AllocationConfig& cfg);

std::string learning_curve_csv(const AllocationReport& r);  // episode,mean_reward,greedy_t_max
std::string allocation_csv(const AllocationReport& r);      // method,ue,fraction,bandwidth_hz,t_s
std::string comparison_csv(const AllocationReport& r);      // method,t_max,ratio_to_oracle,reduction_vs_equal

// The [runtime] section (output directory, worker count) never changes results
// and is excluded from the digest.
std::string run_digest(const config::Config& cfg);
// Resolved config plus a [manifest] section; loading it back with --config
// reproduces the run.
std::string manifest_text(const config::Config& resolved, const std::string& subcommand);
config::Config strip_manifest(config::Config cfg);

}  // namespace ofgsc::exp
