#include "probfuse/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "probfuse/error.hpp"
#include "probfuse/warp.hpp"

namespace fs = std::filesystem;

namespace probfuse {

std::string_view to_string(FusionMode mode) {
  switch (mode) {
    case FusionMode::kFused: return "fused";
    case FusionMode::kNetworkOnly: return "network-only";
    case FusionMode::kPhotometricOnly: return "photometric-only";
  }
  return "unknown";
}

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::kNone: return "none";
    case RegularizerKind::kTv: return "tv";
    case RegularizerKind::kNormals: return "normals";
  }
  return "unknown";
}

SolverConfig PipelineConfig::effective_solver() const {
  SolverConfig s = solver;
  if (!explicit_init) {
    s.init = mode == FusionMode::kPhotometricOnly ? InitKind::kExpected : InitKind::kArgmax;
  }
  return s;
}

void PipelineConfig::validate() const {
  (void)binning();
  solver.validate();
  prior_model.validate();
  if (!(overlap_threshold > 0.0 && overlap_threshold <= 1.0) || max_reference_frames < 0 ||
      width <= 0 || height <= 0 || !(default_occupancy >= 0.0 && default_occupancy <= 1.0) ||
      !(association_tolerance >= 0.0)) {
    throw Error(ErrorCode::kInvalidConfig, "invalid pipeline configuration");
  }
}

// ---------------------------------------------------------------------------
// key=value configuration

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw Error(ErrorCode::kInvalidConfig, "bad value '" + value + "' for key '" + key + "'");
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  long long out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "on" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "off" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

template <typename Enum>
Enum parse_enum(const std::string& key, const std::string& value,
                std::initializer_list<std::pair<std::string_view, Enum>> names) {
  for (const auto& [name, e] : names) {
    if (value == name) return e;
  }
  bad_value(key, value);
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void apply_setting(PipelineConfig& c, const std::string& key, const std::string& value) {
  SolverConfig& s = c.solver;
  if (key == "mode") {
    c.mode = parse_enum<FusionMode>(key, value, {{"fused", FusionMode::kFused},
                                                 {"network-only", FusionMode::kNetworkOnly},
                                                 {"photometric-only", FusionMode::kPhotometricOnly}});
  } else if (key == "regularizer") {
    s.regularizer = parse_enum<RegularizerKind>(
        key, value, {{"none", RegularizerKind::kNone}, {"tv", RegularizerKind::kTv},
                     {"normals", RegularizerKind::kNormals}});
  } else if (key == "init") {
    s.init = parse_enum<InitKind>(key, value, {{"argmax", InitKind::kArgmax},
                                               {"expected", InitKind::kExpected}});
    c.explicit_init = true;
  } else if (key == "warp") {
    c.warp = parse_bool(key, value);
  } else if (key == "lambda") {
    s.lambda = parse_double(key, value);
  } else if (key == "step_size") {
    s.step_size = parse_double(key, value);
  } else if (key == "tv_step_size") {
    s.tv_step_size = parse_double(key, value);
  } else if (key == "max_iters") {
    s.max_iters = static_cast<int>(parse_int(key, value));
  } else if (key == "stop_tol") {
    s.stop_tol = parse_double(key, value);
  } else if (key == "backtracking") {
    s.backtracking = parse_bool(key, value);
  } else if (key == "kde_sigma") {
    s.kde_sigma = parse_double(key, value);
  } else if (key == "d_min") {
    c.d_min = parse_double(key, value);
  } else if (key == "d_max") {
    c.d_max = parse_double(key, value);
  } else if (key == "k_count") {
    c.k_count = static_cast<int>(parse_int(key, value));
  } else if (key == "width") {
    c.width = static_cast<int>(parse_int(key, value));
  } else if (key == "height") {
    c.height = static_cast<int>(parse_int(key, value));
  } else if (key == "overlap_threshold") {
    c.overlap_threshold = parse_double(key, value);
  } else if (key == "max_reference_frames") {
    c.max_reference_frames = static_cast<int>(parse_int(key, value));
  } else if (key == "default_occupancy") {
    c.default_occupancy = parse_double(key, value);
  } else if (key == "prior_source") {
    c.prior_source = parse_enum<PriorSource>(key, value, {{"file", PriorSource::kFile},
                                                          {"synthetic", PriorSource::kSynthetic},
                                                          {"uniform", PriorSource::kUniform}});
  } else if (key == "normals_source") {
    c.normals_source = parse_enum<NormalsSource>(
        key, value, {{"file", NormalsSource::kFile}, {"from-gt-depth", NormalsSource::kFromGtDepth}});
  } else if (key == "boundary_source") {
    c.boundary_source = parse_enum<BoundarySource>(
        key, value, {{"file", BoundarySource::kFile}, {"none", BoundarySource::kNone},
                     {"from-gt-depth", BoundarySource::kFromGtDepth}});
  } else if (key == "prior_template") {
    c.prior_template = value;
  } else if (key == "normals_template") {
    c.normals_template = value;
  } else if (key == "boundary_template") {
    c.boundary_template = value;
  } else if (key == "boundary_threshold") {
    c.boundary_threshold = parse_double(key, value);
  } else if (key == "gt_boundary_jump") {
    c.gt_boundary_jump = parse_double(key, value);
  } else if (key == "prior_sigma_bins") {
    c.prior_model.sigma_bins = parse_double(key, value);
  } else if (key == "prior_floor") {
    c.prior_model.uniform_floor = parse_double(key, value);
  } else if (key == "prior_spurious_prob") {
    c.prior_model.spurious_mode_prob = parse_double(key, value);
  } else if (key == "prior_spurious_offset") {
    c.prior_model.spurious_offset_bins = parse_double(key, value);
  } else if (key == "prior_seed") {
    c.prior_model.seed = static_cast<std::uint64_t>(parse_int(key, value));
  } else if (key == "cost_conversion") {
    c.conversion.mode = parse_enum<CostConversion>(
        key, value, {{"shift-linear", CostConversion::kShiftLinear},
                     {"softmax", CostConversion::kSoftmax}});
  } else if (key == "softmax_temperature") {
    c.conversion.temperature = parse_double(key, value);
  } else if (key == "association_tolerance") {
    c.association_tolerance = parse_double(key, value);
  } else {
    throw Error(ErrorCode::kInvalidConfig, "unknown configuration key '" + key + "'");
  }
}

void apply_config_file(PipelineConfig& config, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig,
                  path.string() + ":" + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------------------
// Frame processing

double overlap_fraction(const ProbabilityVolume& volume, const Pose& kf_pose,
                        const Pose& frame_pose, const Intrinsics& intrinsics) {
  const Pose frame_from_kf = relative_pose(kf_pose, frame_pose);
  const DepthMap depth = argmax_depth(volume);
  std::size_t inside = 0;
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      const Eigen::Vector3d p = frame_from_kf * backproject(intrinsics, x, y, depth(x, y));
      if (!(p.z() > 0.0)) continue;
      const double u = intrinsics.fx * p.x() / p.z() + intrinsics.cx;
      const double v = intrinsics.fy * p.y() / p.z() + intrinsics.cy;
      // A point counts when it lands on a pixel's footprint.
      if (u >= -0.5 && v >= -0.5 && u < intrinsics.width - 0.5 && v < intrinsics.height - 0.5) {
        ++inside;
      }
    }
  }
  return static_cast<double>(inside) / static_cast<double>(depth.size());
}

FrameUpdate process_frame(KeyframeState& state, const RgbImage& frame_rgb,
                          const Pose& frame_pose, const Intrinsics& intrinsics,
                          const PipelineConfig& config) {
  const GrayImage gray = normalize_image(frame_rgb);
  const Pose ref_from_kf = relative_pose(state.pose, frame_pose);
  PhotoCostVolume frame_cost(state.volume.width(), state.volume.height(),
                             state.volume.binning());
  accumulate_cost(frame_cost, state.gray, gray, ref_from_kf, intrinsics);
  for (std::size_t i = 0; i < frame_cost.cost().size(); ++i) {
    state.cost.cost()[i] += frame_cost.cost()[i];
    state.cost.sample_count()[i] += frame_cost.sample_count()[i];
  }
  if (config.mode != FusionMode::kNetworkOnly) {
    fuse_into(state.volume, cost_to_probability(frame_cost, config.conversion));
  }
  ++state.reference_count;

  FrameUpdate update;
  update.overlap = overlap_fraction(state.volume, state.pose, frame_pose, intrinsics);
  update.new_keyframe =
      update.overlap < config.overlap_threshold ||
      (config.max_reference_frames > 0 && state.reference_count >= config.max_reference_frames);
  return update;
}

// ---------------------------------------------------------------------------
// Sequence driver

SequenceSource::SequenceSource(SequenceIndex sequence, const PipelineConfig& config)
    : sequence_(std::move(sequence)), config_(config) {
  const Intrinsics& raw = sequence_.intrinsics;
  const double sx = static_cast<double>(config.width) / raw.width;
  const double sy = static_cast<double>(config.height) / raw.height;
  if (std::abs(sx - sy) > 1e-9) {
    throw Error(ErrorCode::kInvalidConfig, "processing size changes the aspect ratio");
  }
  intrinsics_ = raw.scaled(sx);
  intrinsics_.width = config.width;
  intrinsics_.height = config.height;
}

LoadedFrame SequenceSource::load(std::size_t index) const {
  const FrameRecord& record = sequence_.frames.at(index);
  LoadedFrame frame;
  frame.index = index;
  frame.name = record.rgb_path.stem().string();
  frame.pose = record.pose;
  frame.color = downsample_rgb(load_rgb_png(record.rgb_path), config_.width, config_.height);
  if (record.depth_path) {
    frame.gt_depth = downsample_depth(load_depth_png(*record.depth_path), config_.width,
                                      config_.height);
  }
  return frame;
}

fs::path SequenceSource::expand(const std::string& templ, const LoadedFrame& frame) const {
  std::string out = templ;
  for (auto pos = out.find("{name}"); pos != std::string::npos; pos = out.find("{name}")) {
    out.replace(pos, 6, frame.name);
  }
  fs::path p(out);
  return p.is_absolute() ? p : sequence_.root / p;
}

namespace {

const DepthMap& require_gt(const LoadedFrame& frame, std::string_view what) {
  if (!frame.gt_depth) {
    throw Error(ErrorCode::kMissingFile,
                std::string(what) + " needs ground-truth depth for frame " + frame.name);
  }
  return *frame.gt_depth;
}

}  // namespace

ProbabilityVolume SequenceSource::prior(const LoadedFrame& frame,
                                        const DepthBinning& binning) const {
  switch (config_.prior_source) {
    case PriorSource::kUniform:
      return uniform_volume(config_.width, config_.height, binning);
    case PriorSource::kSynthetic: {
      PriorModel model = config_.prior_model;
      model.seed += frame.index;
      return synth_prior(require_gt(frame, "synthetic prior"), model, binning);
    }
    case PriorSource::kFile: {
      ProbabilityVolume vol = load_prior(expand(config_.prior_template, frame));
      if (vol.width() != config_.width || vol.height() != config_.height ||
          !(vol.binning() == binning)) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "prior file for " + frame.name + " does not match the configured grid");
      }
      return vol;
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown prior source");
}

NormalMap SequenceSource::normals(const LoadedFrame& frame) const {
  NormalMap normals;
  if (config_.normals_source == NormalsSource::kFile) {
    normals = load_normals(expand(config_.normals_template, frame));
  } else {
    normals = normals_from_depth(require_gt(frame, "normals from depth"), intrinsics_);
  }
  if (!normals.same_shape(config_.width, config_.height)) {
    throw Error(ErrorCode::kDimensionMismatch, "normals for " + frame.name + " have the wrong size");
  }
  return normals;
}

OcclusionMask SequenceSource::mask(const LoadedFrame& frame) const {
  switch (config_.boundary_source) {
    case BoundarySource::kNone:
      return OcclusionMask(config_.width, config_.height, 1);
    case BoundarySource::kFromGtDepth:
      return mask_from_boundary_prob(
          boundary_prob_from_depth(require_gt(frame, "boundary from depth"),
                                   config_.gt_boundary_jump),
          config_.boundary_threshold);
    case BoundarySource::kFile: {
      const BoundaryProbMap prob = load_boundary(expand(config_.boundary_template, frame));
      if (!prob.same_shape(config_.width, config_.height)) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "boundary map for " + frame.name + " has the wrong size");
      }
      return mask_from_boundary_prob(prob, config_.boundary_threshold);
    }
  }
  throw Error(ErrorCode::kInvalidConfig, "unknown boundary source");
}

KeyframeState make_keyframe(const LoadedFrame& frame, ProbabilityVolume initial,
                            const SequenceSource& source, const PipelineConfig& config) {
  KeyframeState kf;
  kf.frame_index = frame.index;
  kf.name = frame.name;
  kf.color = frame.color;
  kf.gray = normalize_image(frame.color);
  kf.pose = frame.pose;
  kf.cost = PhotoCostVolume(initial.width(), initial.height(), initial.binning());
  kf.volume = std::move(initial);
  kf.gt_depth = frame.gt_depth;
  if (config.solver.regularizer == RegularizerKind::kNormals) {
    kf.normals = source.normals(frame);
    kf.mask = source.mask(frame);
  }
  return kf;
}

namespace {

KeyframeResult finish_keyframe(const KeyframeState& kf, const Intrinsics& intrinsics,
                               const PipelineConfig& config) {
  KeyframeResult result;
  result.frame_index = kf.frame_index;
  result.name = kf.name;
  result.reference_count = kf.reference_count;
  SolverResult solved =
      extract_depth({kf.volume, kf.normals, kf.mask, intrinsics}, config.effective_solver());
  result.depth = std::move(solved.depth);
  result.diagnostics = std::move(solved.diagnostics);
  if (kf.gt_depth) result.report = evaluate(result.depth, *kf.gt_depth);
  return result;
}

}  // namespace

SequenceResult run_sequence(const SequenceIndex& sequence, const PipelineConfig& config,
                            const std::function<void(const KeyframeResult&)>& on_keyframe) {
  config.validate();
  if (sequence.frames.empty()) {
    throw Error(ErrorCode::kEmptyAssociation, "sequence has no frames");
  }
  const DepthBinning binning = config.binning();
  const SequenceSource source(sequence, config);
  const Intrinsics& intrinsics = source.intrinsics();

  auto initial_volume = [&](const LoadedFrame& frame) {
    return config.mode == FusionMode::kPhotometricOnly
               ? uniform_volume(config.width, config.height, binning)
               : source.prior(frame, binning);
  };

  SequenceResult result;
  auto finish = [&](const KeyframeState& kf) {
    result.keyframes.push_back(finish_keyframe(kf, intrinsics, config));
    if (on_keyframe) on_keyframe(result.keyframes.back());
  };

  const LoadedFrame first = source.load(0);
  KeyframeState kf = make_keyframe(first, initial_volume(first), source, config);
  for (std::size_t i = 1; i < source.size(); ++i) {
    const LoadedFrame frame = source.load(i);
    const FrameUpdate update = process_frame(kf, frame.color, frame.pose, intrinsics, config);
    if (!update.new_keyframe) continue;
    finish(kf);
    ProbabilityVolume initial = initial_volume(frame);
    if (config.warp) {
      initial = propagate_keyframe(kf.volume, initial, relative_pose(kf.pose, frame.pose),
                                   intrinsics, config.default_occupancy);
    }
    kf = make_keyframe(frame, std::move(initial), source, config);
  }
  finish(kf);

  std::vector<EvalReport> reports;
  for (const KeyframeResult& k : result.keyframes) {
    if (k.report) reports.push_back(*k.report);
  }
  if (!reports.empty()) result.overall = combine(reports);
  return result;
}

std::vector<ReportRow> run_ablation(const SequenceIndex& sequence, const std::string& label,
                                    const PipelineConfig& base, AblationTable table) {
  struct Variant {
    std::string name;
    PipelineConfig config;
  };
  std::vector<Variant> variants;
  switch (table) {
    case AblationTable::kFusion:
      for (auto [name, mode] : {std::pair{"Network-Only", FusionMode::kNetworkOnly},
                                std::pair{"Photometric-Only", FusionMode::kPhotometricOnly},
                                std::pair{"Fused", FusionMode::kFused}}) {
        PipelineConfig c = base;
        c.mode = mode;
        variants.push_back({name, c});
      }
      break;
    case AblationTable::kRegularization: {
      PipelineConfig none = base;
      none.solver.max_iters = 0;
      none.solver.regularizer = RegularizerKind::kNone;
      variants.push_back({"No Optimisation", none});
      PipelineConfig smooth = base;
      smooth.solver.regularizer = RegularizerKind::kNone;
      variants.push_back({"Smoothing-Only", smooth});
      PipelineConfig tv = base;
      tv.solver.regularizer = RegularizerKind::kTv;
      tv.solver.lambda.reset();
      variants.push_back({"Total Variation", tv});
      PipelineConfig normals = base;
      normals.solver.regularizer = RegularizerKind::kNormals;
      normals.solver.lambda.reset();
      variants.push_back({"Normals + Occlusions", normals});
      break;
    }
    case AblationTable::kWarping: {
      PipelineConfig off = base;
      off.warp = false;
      variants.push_back({"No Keyframe Warping", off});
      PipelineConfig on = base;
      on.warp = true;
      variants.push_back({"Keyframe Warping", on});
      break;
    }
  }
  std::vector<ReportRow> rows;
  for (const Variant& v : variants) {
    const SequenceResult r = run_sequence(sequence, v.config);
    if (!r.overall) {
      throw Error(ErrorCode::kEmptyValidSet, "ablation needs ground-truth depth");
    }
    rows.push_back({label, v.name, *r.overall});
  }
  return rows;
}

}  // namespace probfuse
