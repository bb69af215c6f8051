#include "ephmap/parallel.hpp"
#include "ephmap/pipeline.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonOpts {
  std::string config_path;
  int threads = 0;
  int passes = 1;
  bool no_compact = false;
};

void add_common(CLI::App* cmd, CommonOpts& common, bool with_passes = true) {
  cmd->add_option("--config", common.config_path,
                  "Pipeline configuration file (key = value lines)");
  if (with_passes) {
    cmd->add_option("--passes", common.passes,
                    "Evidence propagation sweeps per session")
        ->check(CLI::PositiveNumber);
  }
  cmd->add_flag("--no-compact", common.no_compact,
                "Skip voxel compaction of session and map clouds");
}

ephmap::PipelineOptions make_options(const CommonOpts& common) {
  ephmap::PipelineOptions opt;
  if (!common.config_path.empty()) {
    opt.config = ephmap::PipelineConfig::load(common.config_path);
  }
  opt.passes = common.passes;
  opt.compact_session = !common.no_compact;
  opt.compact_map = !common.no_compact;
  ephmap::set_worker_threads(common.threads);
  return opt;
}

void print_counts(const ephmap::CategoryCounts& c) {
  std::printf("coexisting: %zu\n", c.coexisting);
  std::printf("deleted: %zu\n", c.deleted);
  std::printf("emerged: %zu\n", c.emerged);
  std::printf("prev explored only: %zu\n", c.prev_explored_only);
  std::printf("newly explored: %zu\n", c.newly_explored);
}

std::string metric_or_na(const std::optional<double>& v) {
  return v ? ephmap::format_double(*v) : "n/a";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lifelong point-cloud mapping across sessions"};
  app.require_subcommand(1);

  CommonOpts common;
  app.add_option("--threads", common.threads,
                 "Worker threads, 0 = all hardware threads")
      ->check(CLI::NonNegativeNumber);

  // init
  auto* init = app.add_subcommand(
      "init", "Build the first map archive from one session");
  std::string init_session, init_archive;
  init->add_option("session_dir", init_session, "Session directory")
      ->required();
  init->add_option("archive_out", init_archive, "Output map archive")
      ->required();
  add_common(init, common);

  // update
  auto* update = app.add_subcommand(
      "update", "Fold a new session into an existing archive");
  std::string up_archive_in, up_session, up_archive_out, up_delta,
      up_align_log;
  std::vector<double> up_t_init;
  double up_loop_gate = ephmap::kLoopGateDefault;
  bool up_force_config = false;
  update->add_option("archive_in", up_archive_in, "Existing map archive")
      ->required();
  update->add_option("session_dir", up_session, "Session directory")
      ->required();
  update->add_option("archive_out", up_archive_out, "Output map archive")
      ->required();
  update->add_option("--delta", up_delta,
                     "Write the per-session change ledger here");
  update->add_option("--align-log", up_align_log,
                     "Write per-scan alignment diagnostics here");
  update->add_option("--loop-gate", up_loop_gate,
                     "Descriptor distance a loop candidate must beat");
  update
      ->add_option("--t-init", up_t_init,
                   "Manual session-to-map seed: x y z yaw_deg")
      ->expected(4);
  update->add_flag("--force-config", up_force_config,
                   "Update even when the archive was built with other "
                   "settings");
  add_common(update, common);

  // extract-static
  auto* extract = app.add_subcommand(
      "extract-static", "Keep only points below the cross-session "
                        "transiency threshold");
  std::string ex_archive_in, ex_archive_out, ex_xyz;
  extract->add_option("archive_in", ex_archive_in, "Map archive")
      ->required();
  extract->add_option("archive_out", ex_archive_out, "Output map archive")
      ->required();
  extract->add_option("--xyz", ex_xyz, "Also write a plain x y z text file");
  add_common(extract, common, false);

  // delta
  auto* delta = app.add_subcommand("delta", "Work with change ledgers");
  delta->require_subcommand(1);

  auto* replay = delta->add_subcommand(
      "replay", "Re-apply a ledger to the archive it came from");
  std::string rp_archive_in, rp_delta, rp_archive_out;
  replay->add_option("archive_in", rp_archive_in, "Pre-update archive")
      ->required();
  replay->add_option("delta", rp_delta, "Change ledger")->required();
  replay->add_option("archive_out", rp_archive_out, "Output map archive")
      ->required();
  add_common(replay, common, false);

  auto* rollback = delta->add_subcommand(
      "rollback", "Undo the most recent update of an archive");
  std::string rb_archive_in, rb_delta, rb_archive_out;
  rollback->add_option("archive_in", rb_archive_in, "Post-update archive")
      ->required();
  rollback->add_option("delta", rb_delta, "Change ledger")->required();
  rollback->add_option("archive_out", rb_archive_out, "Output map archive")
      ->required();

  auto* info = delta->add_subcommand("info", "Summarize a change ledger");
  std::string in_delta;
  info->add_option("delta", in_delta, "Change ledger")->required();

  // heatmap
  auto* heatmap = app.add_subcommand(
      "heatmap", "Aggregate change frequency across ledgers");
  std::vector<std::string> hm_deltas;
  std::string hm_out;
  double hm_cell = 1.0;
  double hm_floor = 0.1;
  heatmap->add_option("deltas", hm_deltas, "Change ledgers, oldest first")
      ->required()
      ->expected(-1);
  heatmap->add_option("--out", hm_out, "Output heatmap file")->required();
  heatmap->add_option("--cell", hm_cell, "Heatmap cell size in meters");
  heatmap->add_option("--floor", hm_floor,
                      "Smallest belief change that counts");

  // eval
  auto* eval = app.add_subcommand("eval", "Score maps against references");
  eval->require_subcommand(1);

  auto* eval_align = eval->add_subcommand(
      "align", "Nearest-neighbor agreement between two clouds");
  std::string ea_cloud_a, ea_cloud_b;
  eval_align->add_option("cloud_a", ea_cloud_a, "Archive or x y z text")
      ->required();
  eval_align->add_option("cloud_b", ea_cloud_b, "Archive or x y z text")
      ->required();
  add_common(eval_align, common, false);

  auto* eval_clean = eval->add_subcommand(
      "clean", "Single-session cleaning quality on a labeled session");
  std::string ec_session;
  eval_clean->add_option("session_dir", ec_session, "Labeled session")
      ->required();
  add_common(eval_clean, common);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate labeled sessions from a scene description");
  std::string sy_scene, sy_out;
  std::uint64_t sy_seed = 0;
  synth->add_option("scene", sy_scene,
                    "Scene file, or the built-in name 'parking_lot'")
      ->required();
  synth->add_option("out_dir", sy_out, "Output directory")->required();
  auto* sy_seed_opt =
      synth->add_option("--seed", sy_seed, "Override the scene seed");

  try {
    app.parse(argc, argv);

    if (*init) {
      const auto report =
          ephmap::run_init(init_session, init_archive, make_options(common));
      std::printf("session: %s\n", report.session_id.c_str());
      std::printf("ray samples: %zu\n", report.ray_samples);
      std::printf("aggregated points: %zu\n", report.aggregated_points);
      std::printf("static points: %zu\n", report.static_points);
      std::printf("removed points: %zu\n", report.removed_points);
      std::printf("archive: %s\n", init_archive.c_str());
    } else if (*update) {
      ephmap::PipelineOptions opt = make_options(common);
      opt.loop_gate = up_loop_gate;
      opt.force_config = up_force_config;
      opt.align_log = up_align_log;
      if (!up_t_init.empty()) {
        opt.manual_seed = ephmap::Pose::from_yaw(
            up_t_init[3] * M_PI / 180.0,
            {up_t_init[0], up_t_init[1], up_t_init[2]});
      }
      const auto report = ephmap::run_update(up_archive_in, up_session,
                                             up_archive_out, up_delta, opt);
      if (report.config_mismatch) {
        std::fprintf(stderr,
                     "warning: archive settings differ from the current "
                     "config, continuing as forced\n");
      }
      std::printf("session: %s\n", report.session_id.c_str());
      if (!opt.manual_seed) {
        std::printf("loop: anchor scan %zu, session scan %zu, distance %s, "
                    "yaw %.1f deg\n",
                    report.seed.anchor_index, report.seed.session_index,
                    ephmap::format_double(report.seed.descriptor_distance)
                        .c_str(),
                    report.seed.yaw_rad * 180.0 / M_PI);
      }
      std::printf("scans: %zu (%zu failed alignment)\n", report.scan_count,
                  report.failed_scans);
      std::printf("session static points: %zu\n",
                  report.session_static_points);
      print_counts(report.counts);
      std::printf("map points: %zu\n", report.map_points);
      std::printf("delta records: %zu\n", report.delta_records);
      std::printf("archive: %s\n", up_archive_out.c_str());
    } else if (*extract) {
      const auto report = ephmap::run_extract_static(
          ex_archive_in, ex_archive_out, ex_xyz, make_options(common));
      std::printf("points in: %zu\n", report.points_in);
      std::printf("points out: %zu\n", report.points_out);
    } else if (*replay) {
      const auto report = ephmap::run_delta_replay(
          rp_archive_in, rp_delta, rp_archive_out, make_options(common));
      std::printf("replayed session: %s\n", report.session_id.c_str());
      std::printf("map points: %zu\n", report.points);
    } else if (*rollback) {
      const auto report =
          ephmap::run_delta_rollback(rb_archive_in, rb_delta, rb_archive_out);
      std::printf("rolled back session: %s\n", report.session_id.c_str());
      std::printf("map points: %zu\n", report.points);
    } else if (*info) {
      const auto report = ephmap::run_delta_info(in_delta);
      std::printf("session: %s\n", report.session_id.c_str());
      std::printf("config hash: %016llx\n",
                  static_cast<unsigned long long>(report.config_hash));
      std::printf("records: %zu\n", report.records);
      print_counts(report.counts);
    } else if (*heatmap) {
      const auto report =
          ephmap::run_heatmap(hm_deltas, hm_out, hm_cell, hm_floor);
      std::printf("deltas: %zu\n", report.deltas);
      std::printf("cells: %zu\n", report.cells);
      std::printf("heatmap: %s\n", hm_out.c_str());
    } else if (*eval_align) {
      const auto metrics = ephmap::run_eval_align(ea_cloud_a, ea_cloud_b,
                                                  make_options(common));
      std::printf("acceptance: %s\n",
                  ephmap::format_double(metrics.acceptance).c_str());
      std::printf("rmse: %s\n", metric_or_na(metrics.rmse).c_str());
      std::printf("chamfer: %s\n", metric_or_na(metrics.chamfer).c_str());
    } else if (*eval_clean) {
      const auto report =
          ephmap::run_eval_clean(ec_session, make_options(common));
      std::printf("cleaned points: %zu\n", report.cleaned_points);
      std::printf("truth static: %zu\n", report.truth_static);
      std::printf("truth transient: %zu\n", report.truth_transient);
      std::printf("preservation: %s\n",
                  metric_or_na(report.metrics.preservation).c_str());
      std::printf("rejection: %s\n",
                  metric_or_na(report.metrics.rejection).c_str());
      std::printf("f1: %s\n", metric_or_na(report.metrics.f1).c_str());
    } else if (*synth) {
      const auto report = ephmap::run_synth(
          sy_scene, sy_out,
          sy_seed_opt->count() ? std::optional<std::uint64_t>(sy_seed)
                               : std::nullopt);
      std::printf("sessions: %d\n", report.sessions);
      std::printf("scans: %zu\n", report.scans);
      std::printf("points: %zu\n", report.points);
      std::printf("scene: %s\n", report.scene_path.c_str());
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ephmap::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ephmap::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const ephmap::AlignmentError& e) {
    std::fprintf(stderr, "error: %s\n%s", e.what(),
                 e.diagnostics.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
