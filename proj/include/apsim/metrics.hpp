// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/loop.hpp"
#include "apsim/vlmclient.hpp"

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace apsim {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EndpointUnavailableError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrialOutcome {
  EpisodeResult episode;
  bool correct = false;  // inconclusive answers are never correct
  Pose goal_pose;
  bool rotation_allowed = false;  // whether the trial's action space permits rotations
};

/// One table cell: success rate, travel lengths (m), position error (m),
/// orientation error (deg, absent for rotationless spaces), oracle success
/// rate.
struct MetricsRow {
  double sr = 0.0;
  double tlp = 0.0;
  double tlps = 0.0;
  double pe = 0.0;
  std::optional<double> oe;
  double osr = 0.0;
};

/// True iff the answer is conclusive and the normalized truth is a substring
/// of the normalized answer text.
bool correctness(const Answer& answer, const std::string& truth);

/// Aggregates a non-empty trial list. osr counts trials whose closest
/// trajectory point lies within osr_margin of the goal position (inclusive).
MetricsRow compute_metrics(const std::vector<TrialOutcome>& trials, double osr_margin = 0.1);

struct ExperimentConfig {
  std::vector<std::string> scene_paths;
  std::vector<ActionSpaceKind> spaces = all_action_spaces();
  int trials_per_cell = 10;
  uint64_t base_seed = 0;
  std::string analyzer = "oracle";  // "oracle" | "vlm"
  std::string policy = "greedy";    // "greedy" | "random" | "fixed-views" | "vlm"
  double osr_margin = 0.1;
  EpisodeConfig episode;
  std::optional<EndpointConfig> endpoint;  // required for vlm agents
};

/// Parses the experiment JSON; scene paths resolve relative to the file.
/// Throws ConfigError on malformed input.
ExperimentConfig load_experiment_config(const std::string& path);
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::string& base_dir = ".");

struct CellResult {
  std::string scene_id;
  ActionSpaceKind space = ActionSpaceKind::NAP;
  MetricsRow row;
};

/// Called once per finished episode (scene, space, trial index, config used,
/// result); used by the CLI to write logs.
using EpisodeSink = std::function<void(const SceneSpec&, ActionSpaceKind, int,
                                       const EpisodeConfig&, const EpisodeResult&)>;

/// Runs trials_per_cell episodes for every (scene, action space) cell with
/// per-trial seeds base_seed + trial index. Deterministic for builtin
/// agents. Throws SceneError on unloadable scenes (fail fast, before any
/// episode runs) and EndpointUnavailableError when a vlm agent cannot reach
/// its endpoint.
std::vector<CellResult> run_experiment(const ExperimentConfig& cfg,
                                       const EpisodeSink& sink = nullptr);

enum class ReportFormat { Csv, Markdown };

/// Csv: one line per (scene, space) under a fixed header. Markdown: action
/// spaces as rows with per-scene column blocks; absent OE renders as "--".
std::string emit_report(const std::vector<CellResult>& cells, ReportFormat format);

std::string cells_to_json(const std::vector<CellResult>& cells);
std::vector<CellResult> cells_from_json(const std::string& text);

}  // namespace apsim
