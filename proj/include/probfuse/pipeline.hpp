#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "probfuse/dataset_io.hpp"
#include "probfuse/metrics.hpp"
#include "probfuse/photometric.hpp"
#include "probfuse/regularizer.hpp"
#include "probfuse/solver.hpp"
#include "probfuse/volume.hpp"
#include "probfuse/warp.hpp"

namespace probfuse {

enum class PriorSource { kFile, kSynthetic, kUniform };
enum class NormalsSource { kFile, kFromGtDepth };
enum class BoundarySource { kFile, kNone, kFromGtDepth };
/// Which probability volumes enter the keyframe fusion.
enum class FusionMode { kFused, kNetworkOnly, kPhotometricOnly };

struct PipelineConfig {
  PriorSource prior_source = PriorSource::kSynthetic;
  NormalsSource normals_source = NormalsSource::kFromGtDepth;
  BoundarySource boundary_source = BoundarySource::kFromGtDepth;
  /// File templates; "{name}" expands to the keyframe rgb file stem. Relative
  /// paths resolve against the dataset directory.
  std::string prior_template = "priors/{name}.pvol";
  std::string normals_template = "normals/{name}.nrml";
  std::string boundary_template = "boundary/{name}.obnd";
  double boundary_threshold = kDefaultBoundaryThreshold;
  /// Relative depth jump treated as an occlusion boundary for kFromGtDepth.
  double gt_boundary_jump = 0.05;
  PriorModel prior_model;

  double d_min = 0.1;
  double d_max = 12.0;
  int k_count = 64;
  int width = kProcessingWidth;
  int height = kProcessingHeight;

  double overlap_threshold = 0.8;
  /// Hard cap on reference frames per keyframe; 0 disables it.
  int max_reference_frames = 0;
  bool warp = true;
  double default_occupancy = kDefaultOccupancy;
  FusionMode mode = FusionMode::kFused;
  CostConversionOptions conversion;
  SolverConfig solver;
  /// When false the solver init follows the mode (expected for photometric-only).
  bool explicit_init = false;
  double association_tolerance = kDefaultAssociationTolerance;

  DepthBinning binning() const { return make_binning(d_min, d_max, k_count); }
  /// Solver settings with the mode-dependent initialisation applied.
  SolverConfig effective_solver() const;
  void validate() const;
};

/// Applies one key=value setting. Throws kInvalidConfig for unknown keys or bad values.
void apply_setting(PipelineConfig& config, const std::string& key, const std::string& value);
/// Reads key=value lines ('#' comments, blank lines ignored).
void apply_config_file(PipelineConfig& config, const std::filesystem::path& path);

/// Keyframe image and pose together with everything fused into it so far.
struct KeyframeState {
  std::size_t frame_index = 0;
  std::string name;
  RgbImage color;
  GrayImage gray;
  Pose pose;
  /// Fused distribution; the solver's input.
  ProbabilityVolume volume;
  /// Sum of all reference frames' photometric costs.
  PhotoCostVolume cost;
  NormalMap normals;
  OcclusionMask mask;
  std::optional<DepthMap> gt_depth;
  int reference_count = 0;
};

/// A frame resampled to processing resolution.
struct LoadedFrame {
  std::size_t index = 0;
  std::string name;
  RgbImage color;
  std::optional<DepthMap> gt_depth;
  Pose pose;
};

struct FrameUpdate {
  double overlap = 1.0;
  bool new_keyframe = false;
};

/// Fraction of keyframe pixels whose argmax-depth point projects inside a
/// camera at `frame_pose` (in front of it and within the image).
double overlap_fraction(const ProbabilityVolume& volume, const Pose& kf_pose,
                        const Pose& frame_pose, const Intrinsics& intrinsics);

/// Adds one reference frame to the keyframe: its photometric cost is
/// accumulated, converted and fused (unless the mode is network-only), and
/// the overlap test decides whether a new keyframe is due.
FrameUpdate process_frame(KeyframeState& state, const RgbImage& frame_rgb,
                          const Pose& frame_pose, const Intrinsics& intrinsics,
                          const PipelineConfig& config);

struct KeyframeResult {
  std::size_t frame_index = 0;
  std::string name;
  int reference_count = 0;
  DepthMap depth;
  std::optional<EvalReport> report;
  SolverDiagnostics diagnostics;
};

struct SequenceResult {
  std::vector<KeyframeResult> keyframes;
  /// Combined over keyframes with ground truth.
  std::optional<EvalReport> overall;
};

/// Resamples a sequence's frames on demand and builds keyframe inputs.
class SequenceSource {
 public:
  SequenceSource(SequenceIndex sequence, const PipelineConfig& config);

  std::size_t size() const { return sequence_.frames.size(); }
  /// Intrinsics at processing resolution.
  const Intrinsics& intrinsics() const { return intrinsics_; }
  LoadedFrame load(std::size_t index) const;
  /// The network prior for a keyframe.
  ProbabilityVolume prior(const LoadedFrame& frame, const DepthBinning& binning) const;
  NormalMap normals(const LoadedFrame& frame) const;
  OcclusionMask mask(const LoadedFrame& frame) const;

 private:
  std::filesystem::path expand(const std::string& templ, const LoadedFrame& frame) const;

  SequenceIndex sequence_;
  PipelineConfig config_;
  Intrinsics intrinsics_;
};

/// Starts a keyframe at `frame`. `initial` is the prior (possibly already
/// fused with a warped predecessor) for modes that use it.
KeyframeState make_keyframe(const LoadedFrame& frame, ProbabilityVolume initial,
                            const SequenceSource& source, const PipelineConfig& config);

/// Runs the whole pipeline. `on_keyframe`, when set, sees each finished keyframe.
SequenceResult run_sequence(const SequenceIndex& sequence, const PipelineConfig& config,
                            const std::function<void(const KeyframeResult&)>& on_keyframe = {});

enum class AblationTable { kFusion = 1, kRegularization = 2, kWarping = 3 };

/// Rows shaped like the fusion, regularisation and warping ablations
/// (Network-Only / Photometric-Only / Fused; No Optimisation / Smoothing-Only /
/// Total Variation / Normals + Occlusions; No Keyframe Warping / Keyframe Warping).
std::vector<ReportRow> run_ablation(const SequenceIndex& sequence, const std::string& label,
                                    const PipelineConfig& base, AblationTable table);

std::string_view to_string(FusionMode mode);
std::string_view to_string(RegularizerKind kind);

}  // namespace probfuse
