// SPDX-License-Identifier: Apache-2.0
#include "apsim/cli.hpp"

#include "apsim/image.hpp"
#include "apsim/metrics.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace apsim {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitScene = 3;
constexpr int kExitEndpoint = 4;
constexpr int kExitCorruptLog = 5;

std::optional<Pose> parse_pose_flag(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string part;
  while (std::getline(in, part, ',')) {
    try {
      size_t used = 0;
      values.push_back(std::stod(part, &used));
      if (used != part.size()) return std::nullopt;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (values.size() != 3 && values.size() != 5) return std::nullopt;
  for (double v : values)
    if (!std::isfinite(v)) return std::nullopt;

  Pose pose;
  pose.position = Vec3(values[0], values[1], values[2]);
  const double rx = values.size() == 5 ? values[3] * M_PI / 180.0 : 0.0;
  const double ry = values.size() == 5 ? values[4] * M_PI / 180.0 : 0.0;
  pose.orientation = Quat(Eigen::AngleAxisd(ry, Vec3::UnitY())) *
                     Quat(Eigen::AngleAxisd(rx, Vec3::UnitX())) * top_down_orientation();
  return pose;
}

std::string trial_log_name(const std::string& scene_id, ActionSpaceKind space, int trial) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "_t%02d.jsonl", trial);
  return scene_id + "_" + to_string(space) + buf;
}

int cmd_run(const std::string& config_path, const std::string& out_dir) {
  ExperimentConfig cfg;
  try {
    cfg = load_experiment_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  // Preflight every scene so a bad path produces no partial outputs.
  try {
    for (const auto& path : cfg.scene_paths) load_scene(path);
  } catch (const SceneError& e) {
    std::cerr << "scene error: " << e.what() << "\n";
    return kExitScene;
  }

  const std::filesystem::path out(out_dir);
  const std::filesystem::path episodes = out / "episodes";
  std::error_code ec;
  std::filesystem::create_directories(episodes, ec);
  if (ec) {
    std::cerr << "config error: cannot create output directory " << out_dir << "\n";
    return kExitConfig;
  }

  int episode_count = 0;
  const EpisodeSink sink = [&](const SceneSpec& scene, ActionSpaceKind space, int trial,
                               const EpisodeConfig& episode_cfg, const EpisodeResult& result) {
    EpisodeLogHeader header;
    header.scene_id = scene.id;
    header.space = space;
    header.analyzer = cfg.analyzer;
    header.policy = cfg.policy;
    header.cfg = episode_cfg;
    header.grid = rules_for(space, scene.grid).grid;
    header.home_pose = scene.home_pose;
    write_episode_log((episodes / trial_log_name(scene.id, space, trial)).string(), header,
                      result);
    ++episode_count;
  };

  std::vector<CellResult> cells;
  try {
    cells = run_experiment(cfg, sink);
  } catch (const SceneError& e) {
    std::cerr << "scene error: " << e.what() << "\n";
    return kExitScene;
  } catch (const EndpointUnavailableError& e) {
    std::cerr << "endpoint error: " << e.what() << "\n";
    return kExitEndpoint;
  }

  std::ofstream(out / "results.json") << cells_to_json(cells);
  std::ofstream(out / "report.md") << emit_report(cells, ReportFormat::Markdown);
  std::ofstream(out / "report.csv") << emit_report(cells, ReportFormat::Csv);
  std::cout << "ran " << episode_count << " episodes over " << cells.size()
            << " cells; outputs in " << out_dir << "\n";
  return kExitOk;
}

int cmd_render(const std::string& scene_path, const std::string& pose_flag,
               const std::string& out_path) {
  const auto pose = parse_pose_flag(pose_flag);
  if (!pose) {
    std::cerr << "config error: --pose expects \"x,y,z\" or \"x,y,z,rx,ry\" (degrees)\n";
    return kExitConfig;
  }
  SceneSpec scene;
  try {
    scene = load_scene(scene_path);
  } catch (const SceneError& e) {
    std::cerr << "scene error: " << e.what() << "\n";
    return kExitScene;
  }

  const OverlayPrimitiveSet overlay = project_grid(scene.grid, scene.camera, *pose);
  const RasterImage image = render(scene, *pose, scene.camera, overlay);
  try {
    write_png(out_path, image);
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  const std::filesystem::path svg_path =
      std::filesystem::path(out_path).replace_extension(".svg");
  std::ofstream(svg_path) << overlay_to_svg(overlay, scene.camera.width, scene.camera.height);
  std::cout << "wrote " << out_path << " and " << svg_path.string() << " ("
            << overlay.segments.size() << " grid segments, " << overlay.labels.size()
            << " labels)\n";
  return kExitOk;
}

int cmd_replay(const std::string& log_path) {
  LoadedEpisodeLog log;
  try {
    log = read_episode_log(log_path);
  } catch (const LogError& e) {
    std::cerr << "corrupt log: " << e.what() << "\n";
    return kExitCorruptLog;
  }

  if (const auto violation = verify_episode_log(log)) {
    std::cerr << "corrupt log: invariant violated: " << *violation << "\n";
    return kExitCorruptLog;
  }

  auto pos = [](const Vec3& p) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "(%.3f, %.3f, %.3f)", p.x(), p.y(), p.z());
    return std::string(buf);
  };

  std::cout << "episode: scene=" << log.header.scene_id << " space="
            << to_string(log.header.space) << " seed=" << log.header.cfg.random_seed
            << " analyzer=" << log.header.analyzer << " policy=" << log.header.policy << "\n";
  for (const auto& s : log.result.steps) {
    std::cout << "step " << s.index << ": " << pos(s.pose_before.position) << " -> "
              << pos(s.pose_after.position);
    if (s.action) {
      const GridIndex v = snapped_vertex(rules_for(log.header.space, log.header.grid), *s.action);
      std::cout << " move vertex(" << v.i << "," << v.j << "," << v.k << ")";
      if (s.action->rot_x_deg) std::cout << " rot_x=" << s.action->rot_x_deg;
      if (s.action->rot_y_deg) std::cout << " rot_y=" << s.action->rot_y_deg;
    }
    char conf[32];
    std::snprintf(conf, sizeof(conf), "%.2f", s.answer.confidence);
    std::cout << " answer=" << (s.answer.conclusive ? "conclusive" : "inconclusive") << "("
              << conf << ")";
    if (s.answer.conclusive) std::cout << " \"" << s.answer.text << "\"";
    std::cout << " seg=" << s.segment_length << "\n";
  }
  if (!log.complete) {
    std::cout << "warning: log is truncated (no footer); narrative is partial\n";
    return kExitOk;
  }
  std::cout << "terminated: " << to_string(log.result.terminated_by)
            << "; trajectory length " << trajectory_length(log.result) << " m over "
            << log.result.steps.size() << " steps\n";
  return kExitOk;
}

int cmd_report(const std::string& results_path, const std::string& format) {
  ReportFormat fmt;
  if (format == "csv")
    fmt = ReportFormat::Csv;
  else if (format == "markdown")
    fmt = ReportFormat::Markdown;
  else {
    std::cerr << "config error: --format must be csv or markdown\n";
    return kExitConfig;
  }
  std::ifstream f(results_path);
  if (!f) {
    std::cerr << "config error: cannot open results file " << results_path << "\n";
    return kExitConfig;
  }
  std::stringstream buf;
  buf << f.rdbuf();
  try {
    std::cout << emit_report(cells_from_json(buf.str()), fmt);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"Active-perception tabletop simulator and evaluation harness"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  auto* run = app.add_subcommand("run", "Run an experiment from a config file");
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out", out_dir, "Output directory");

  std::string scene_path, pose_flag = "-0.1,0.3,0.8,0,0", image_out = "view.png";
  auto* render_cmd = app.add_subcommand("render", "Render a scene with the grid overlay");
  render_cmd->add_option("--scene", scene_path, "Scene JSON")->required();
  render_cmd->add_option("--pose", pose_flag, "Camera pose \"x,y,z[,rx,ry]\" (degrees)");
  render_cmd->add_option("--out", image_out, "Output PNG path (SVG written alongside)");

  std::string log_path;
  auto* replay = app.add_subcommand("replay", "Replay and verify an episode log");
  replay->add_option("--log", log_path, "Episode log (JSON lines)")->required();

  std::string results_path, format = "markdown";
  auto* report = app.add_subcommand("report", "Format a results file as a table");
  report->add_option("--results", results_path, "results.json from a run")->required();
  report->add_option("--format", format, "csv or markdown");

  try {
    app.parse(argc, const_cast<char**>(argv));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  if (run->parsed()) return cmd_run(config_path, out_dir);
  if (render_cmd->parsed()) return cmd_render(scene_path, pose_flag, image_out);
  if (replay->parsed()) return cmd_replay(log_path);
  if (report->parsed()) return cmd_report(results_path, format);
  return kExitConfig;
}

}  // namespace apsim
