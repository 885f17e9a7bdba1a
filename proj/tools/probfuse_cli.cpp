// Command-line front end: run, make-priors, fuse, eval, ablate, synth-dataset.

#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "probfuse/dataset_io.hpp"
#include "probfuse/error.hpp"
#include "probfuse/metrics.hpp"
#include "probfuse/pipeline.hpp"
#include "probfuse/synthetic.hpp"
#include "probfuse/volume.hpp"

namespace fs = std::filesystem;
using namespace probfuse;

namespace {

struct CommonOptions {
  std::string dataset;
  std::string config_file;
  std::vector<std::string> settings;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("-d,--dataset", opts.dataset, "TUM-layout dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  cmd->add_option("-c,--config", opts.config_file, "key=value configuration file")
      ->check(CLI::ExistingFile);
  cmd->add_option("-s,--set", opts.settings, "override one setting, key=value");
}

PipelineConfig build_config(const CommonOptions& opts) {
  PipelineConfig config;
  if (!opts.config_file.empty()) apply_config_file(config, opts.config_file);
  for (const std::string& kv : opts.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidConfig, "expected key=value, got '" + kv + "'");
    }
    apply_setting(config, kv.substr(0, eq), kv.substr(eq + 1));
  }
  config.validate();
  return config;
}

void write_csv_file(const std::string& path, const std::vector<ReportRow>& rows) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIoFailure, "cannot write " + path);
  write_csv(out, rows);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Probabilistic fusion of depth priors with multi-view photometric evidence"};
  app.require_subcommand(1);

  // run
  CommonOptions run_opts;
  std::string run_output = "depth_out";
  std::string run_csv;
  std::string mode, regularizer, warp, prior_template, normals_template, boundary_template;
  int max_refs = -1;
  bool run_trace = false;
  auto* run = app.add_subcommand("run", "reconstruct keyframe depth maps for a sequence");
  add_common(run, run_opts);
  run->add_option("-o,--output", run_output, "directory for depth PNGs");
  run->add_option("--csv", run_csv, "write per-keyframe metrics as CSV");
  run->add_option("--mode", mode, "fused | network-only | photometric-only");
  run->add_option("--regularizer", regularizer, "none | tv | normals");
  run->add_option("--warp", warp, "on | off");
  run->add_option("--prior-template", prior_template, "PVOL1 path template, {name} = frame stem");
  run->add_option("--normals-template", normals_template, "NRML1 path template");
  run->add_option("--boundary-template", boundary_template, "OBND1 path template");
  run->add_option("--max-refs", max_refs, "hard cap on reference frames per keyframe");
  run->add_flag("--trace", run_trace, "write each keyframe's cost trace next to its PNG");

  // make-priors
  CommonOptions mp_opts;
  std::string mp_template = "priors/{name}.pvol";
  std::string mp_normals, mp_boundary;
  auto* make_priors = app.add_subcommand("make-priors", "synthesise PVOL1 priors from ground-truth depth");
  add_common(make_priors, mp_opts);
  make_priors->add_option("--template", mp_template, "output path template, {name} = frame stem");
  make_priors->add_option("--normals-template", mp_normals, "also write NRML1 normals from depth");
  make_priors->add_option("--boundary-template", mp_boundary, "also write OBND1 boundaries from depth");

  // fuse
  std::string fuse_a, fuse_b, fuse_out;
  auto* fuse_cmd = app.add_subcommand("fuse", "fuse two PVOL1 volumes");
  fuse_cmd->add_option("a", fuse_a)->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("b", fuse_b)->required()->check(CLI::ExistingFile);
  fuse_cmd->add_option("output", fuse_out)->required();

  // eval
  std::string eval_pred, eval_gt;
  bool eval_csv = false;
  auto* eval_cmd = app.add_subcommand("eval", "compare two 16-bit depth PNGs");
  eval_cmd->add_option("prediction", eval_pred)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("ground_truth", eval_gt)->required()->check(CLI::ExistingFile);
  eval_cmd->add_flag("--csv", eval_csv, "print CSV instead of a table");

  // ablate
  CommonOptions ab_opts;
  std::string ab_table = "all";
  std::string ab_csv, ab_label;
  auto* ablate = app.add_subcommand("ablate", "fusion / regularisation / warping ablation tables");
  add_common(ablate, ab_opts);
  ablate->add_option("-t,--table", ab_table, "1 | 2 | 3 | all");
  ablate->add_option("--csv", ab_csv, "also write all rows as CSV");
  ablate->add_option("--label", ab_label, "sequence label (default: directory name)");

  // synth-dataset
  std::string sd_output;
  int sd_frames = 10;
  double sd_step_x = 0.02;
  double sd_step_y = 0.004;
  double sd_step_z = 0.0;
  auto* synth = app.add_subcommand("synth-dataset", "render a synthetic plane-and-box sequence");
  synth->add_option("-o,--output", sd_output)->required();
  synth->add_option("--frames", sd_frames, "number of frames");
  synth->add_option("--step-x", sd_step_x, "sideways camera motion per frame (metres)");
  synth->add_option("--step-y", sd_step_y, "vertical camera motion per frame (metres)");
  synth->add_option("--step-z", sd_step_z, "forward camera motion per frame (metres)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      PipelineConfig config = build_config(run_opts);
      if (!mode.empty()) apply_setting(config, "mode", mode);
      if (!regularizer.empty()) apply_setting(config, "regularizer", regularizer);
      if (!warp.empty()) apply_setting(config, "warp", warp);
      if (!prior_template.empty()) {
        apply_setting(config, "prior_template", prior_template);
        apply_setting(config, "prior_source", "file");
      }
      if (!normals_template.empty()) {
        apply_setting(config, "normals_template", normals_template);
        apply_setting(config, "normals_source", "file");
      }
      if (!boundary_template.empty()) {
        apply_setting(config, "boundary_template", boundary_template);
        apply_setting(config, "boundary_source", "file");
      }
      if (max_refs >= 0) config.max_reference_frames = max_refs;
      config.validate();

      const SequenceIndex seq = load_tum_sequence(run_opts.dataset, config.association_tolerance);
      fs::create_directories(run_output);
      std::vector<ReportRow> rows;
      const SequenceResult result = run_sequence(seq, config, [&](const KeyframeResult& kf) {
        const fs::path png = fs::path(run_output) / (kf.name + ".png");
        const int clamped = export_depth_png(kf.depth, png);
        if (run_trace) {
          std::ofstream trace(fs::path(run_output) / (kf.name + ".trace.txt"));
          write_cost_trace(trace, kf.diagnostics);
        }
        std::cerr << "keyframe " << kf.name << ": " << kf.reference_count
                  << " reference frames, " << kf.diagnostics.iterations
                  << " iterations, " << clamped << " clamped pixels\n";
        if (kf.report) rows.push_back({kf.name, std::string(to_string(config.mode)), *kf.report});
      });
      if (result.overall) {
        rows.push_back({"overall", std::string(to_string(config.mode)), *result.overall});
        write_table(std::cout, rows);
      }
      write_csv_file(run_csv, rows);
    } else if (*make_priors) {
      PipelineConfig config = build_config(mp_opts);
      const SequenceIndex seq = load_tum_sequence(mp_opts.dataset, config.association_tolerance);
      config.prior_source = PriorSource::kSynthetic;
      config.normals_source = NormalsSource::kFromGtDepth;
      config.boundary_source = BoundarySource::kFromGtDepth;
      const SequenceSource source(seq, config);
      const DepthBinning binning = config.binning();
      auto expand = [&](const std::string& templ, const std::string& name) {
        std::string out = templ;
        for (auto p = out.find("{name}"); p != std::string::npos; p = out.find("{name}")) {
          out.replace(p, 6, name);
        }
        fs::path path(out);
        if (path.is_relative()) path = fs::path(mp_opts.dataset) / path;
        fs::create_directories(path.parent_path());
        return path;
      };
      for (std::size_t i = 0; i < source.size(); ++i) {
        const LoadedFrame frame = source.load(i);
        save_prior(source.prior(frame, binning), expand(mp_template, frame.name));
        if (!mp_normals.empty()) save_normals(source.normals(frame), expand(mp_normals, frame.name));
        if (!mp_boundary.empty()) {
          save_boundary(boundary_prob_from_depth(*frame.gt_depth, config.gt_boundary_jump),
                        expand(mp_boundary, frame.name));
        }
      }
      std::cerr << "wrote priors for " << source.size() << " frames\n";
    } else if (*fuse_cmd) {
      save_prior(fuse(load_prior(fuse_a), load_prior(fuse_b)), fuse_out);
    } else if (*eval_cmd) {
      const EvalReport r = evaluate(load_depth_png(eval_pred), load_depth_png(eval_gt));
      const std::vector<ReportRow> rows{{fs::path(eval_pred).stem().string(), "eval", r}};
      if (eval_csv) {
        write_csv(std::cout, rows);
      } else {
        write_table(std::cout, rows);
      }
    } else if (*ablate) {
      const PipelineConfig config = build_config(ab_opts);
      const SequenceIndex seq = load_tum_sequence(ab_opts.dataset, config.association_tolerance);
      const std::string label =
          ab_label.empty() ? fs::path(ab_opts.dataset).lexically_normal().filename().string()
                           : ab_label;
      std::vector<AblationTable> tables;
      if (ab_table == "1" || ab_table == "all") tables.push_back(AblationTable::kFusion);
      if (ab_table == "2" || ab_table == "all") tables.push_back(AblationTable::kRegularization);
      if (ab_table == "3" || ab_table == "all") tables.push_back(AblationTable::kWarping);
      if (tables.empty()) throw Error(ErrorCode::kInvalidConfig, "unknown table '" + ab_table + "'");
      std::vector<ReportRow> all;
      for (AblationTable t : tables) {
        const std::vector<ReportRow> rows = run_ablation(seq, label, config, t);
        std::cout << "Table " << static_cast<int>(t) << '\n';
        write_table(std::cout, rows);
        std::cout << '\n';
        all.insert(all.end(), rows.begin(), rows.end());
      }
      write_csv_file(ab_csv, all);
    } else if (*synth) {
      synthetic::SequenceOptions options;
      options.frames = sd_frames;
      options.step = {sd_step_x, sd_step_y, sd_step_z};
      const Intrinsics k = synthetic::default_intrinsics();
      synthetic::write_dataset(sd_output, synthetic::render_sequence(options, k), k);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
