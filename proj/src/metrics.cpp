// SPDX-License-Identifier: Apache-2.0
#include "apsim/metrics.hpp"

#include "json_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <sstream>

namespace apsim {

namespace {

using jsonutil::json;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::string oe_cell(const std::optional<double>& oe) { return oe ? fmt(*oe) : "--"; }

}  // namespace

bool correctness(const Answer& answer, const std::string& truth) {
  if (!answer.conclusive) return false;
  const std::string t = normalize_text(truth);
  if (t.empty()) return false;
  return normalize_text(answer.text).find(t) != std::string::npos;
}

MetricsRow compute_metrics(const std::vector<TrialOutcome>& trials, double osr_margin) {
  if (trials.empty()) throw std::invalid_argument("compute_metrics: empty trial list");
  if (!(osr_margin > 0.0)) throw std::invalid_argument("compute_metrics: osr_margin must be > 0");

  MetricsRow row;
  double length_sum = 0.0, length_success_sum = 0.0, pe_sum = 0.0, oe_sum = 0.0;
  int correct = 0, within_margin = 0, rotating = 0;
  for (const auto& trial : trials) {
    const double length = trajectory_length(trial.episode);
    length_sum += length;
    if (trial.correct) {
      ++correct;
      length_success_sum += length;
    }
    pe_sum += (trial.episode.final_pose.position - trial.goal_pose.position).norm();
    if (trial.rotation_allowed) {
      ++rotating;
      oe_sum += quat_angle_deg(trial.episode.final_pose.orientation,
                               trial.goal_pose.orientation);
    }
    double closest = std::numeric_limits<double>::infinity();
    for (const auto& p : trial.episode.trajectory)
      closest = std::min(closest, (p - trial.goal_pose.position).norm());
    if (closest <= osr_margin) ++within_margin;
  }

  const double n = static_cast<double>(trials.size());
  row.sr = correct / n;
  row.tlp = length_sum / n;
  row.tlps = correct > 0 ? length_success_sum / correct : 0.0;
  row.pe = pe_sum / n;
  if (rotating > 0) row.oe = oe_sum / rotating;
  row.osr = within_margin / n;
  return row;
}

ExperimentConfig parse_experiment_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("experiment config is not valid JSON: ") + e.what());
  }
  try {
    ExperimentConfig cfg;
    for (const auto& p : j.at("scenes")) {
      const std::filesystem::path path = p.get<std::string>();
      cfg.scene_paths.push_back(
          path.is_absolute() ? path.string() : (std::filesystem::path(base_dir) / path).string());
    }
    if (cfg.scene_paths.empty()) throw ConfigError("experiment config lists no scenes");
    if (j.contains("spaces")) {
      cfg.spaces.clear();
      for (const auto& name : j.at("spaces")) {
        const auto kind = parse_action_space(name.get<std::string>());
        if (!kind) throw ConfigError("unknown action space: " + name.get<std::string>());
        cfg.spaces.push_back(*kind);
      }
      if (cfg.spaces.empty()) throw ConfigError("experiment config lists no action spaces");
    }
    cfg.trials_per_cell = j.value("trials_per_cell", 10);
    if (cfg.trials_per_cell < 1) throw ConfigError("trials_per_cell must be >= 1");
    cfg.base_seed = j.value("base_seed", 0ull);
    cfg.analyzer = j.value("analyzer", "oracle");
    cfg.policy = j.value("policy", "greedy");
    if (cfg.analyzer != "oracle" && cfg.analyzer != "vlm")
      throw ConfigError("analyzer must be \"oracle\" or \"vlm\"");
    if (cfg.policy != "greedy" && cfg.policy != "random" && cfg.policy != "fixed-views" &&
        cfg.policy != "vlm")
      throw ConfigError("policy must be one of greedy, random, fixed-views, vlm");
    cfg.osr_margin = j.value("osr_margin", 0.1);
    if (!(cfg.osr_margin > 0.0)) throw ConfigError("osr_margin must be > 0");
    if (j.contains("episode")) {
      const auto& je = j.at("episode");
      cfg.episode.max_iterations = je.value("max_iterations", 10);
      cfg.episode.confidence_threshold = je.value("confidence_threshold", 0.8);
      cfg.episode.marker_noise_std = je.value("marker_noise_std", 0.0);
    }
    if (j.contains("endpoint")) {
      const auto& jep = j.at("endpoint");
      EndpointConfig ep;
      ep.base_url = jep.at("base_url").get<std::string>();
      ep.model_name = jep.value("model_name", "");
      ep.api_key_env_var = jep.value("api_key_env_var", ep.api_key_env_var);
      ep.timeout_s = jep.value("timeout_s", ep.timeout_s);
      ep.max_retries = jep.value("max_retries", ep.max_retries);
      ep.temperature = jep.value("temperature", ep.temperature);
      if (ep.base_url.empty()) throw ConfigError("endpoint.base_url must be non-empty");
      cfg.endpoint = ep;
    }
    if ((cfg.analyzer == "vlm" || cfg.policy == "vlm") && !cfg.endpoint)
      throw ConfigError("vlm agents need an endpoint block");
    return cfg;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("experiment config missing or mistyped field: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open experiment config: " + path);
  std::stringstream buf;
  buf << f.rdbuf();
  return parse_experiment_config(buf.str(),
                                 std::filesystem::path(path).parent_path().string());
}

std::vector<CellResult> run_experiment(const ExperimentConfig& cfg, const EpisodeSink& sink) {
  // Fail fast: all scenes must load before the first episode runs.
  std::vector<SceneSpec> scenes;
  scenes.reserve(cfg.scene_paths.size());
  for (const auto& path : cfg.scene_paths) scenes.push_back(load_scene(path));

  const bool uses_vlm = cfg.analyzer == "vlm" || cfg.policy == "vlm";
  std::vector<CellResult> cells;
  for (const auto& scene : scenes) {
    for (const ActionSpaceKind space : cfg.spaces) {
      const ActionSpaceRules rules = rules_for(space, scene.grid);
      std::vector<TrialOutcome> trials;
      trials.reserve(cfg.trials_per_cell);
      for (int trial = 0; trial < cfg.trials_per_cell; ++trial) {
        EpisodeConfig episode_cfg = cfg.episode;
        episode_cfg.random_seed = cfg.base_seed + static_cast<uint64_t>(trial);

        std::unique_ptr<PerceptionAnalyzer> analyzer;
        if (cfg.analyzer == "vlm")
          analyzer = std::make_unique<VlmAnalyzer>(
              *cfg.endpoint, make_initial_knowledge(rules, Query{scene.query}).eta);
        else
          analyzer = std::make_unique<OracleAnalyzer>(scene);

        EpisodeResult result;
        if (cfg.policy == "fixed-views") {
          result = run_fixed_views_episode(scene, *analyzer, episode_cfg);
        } else {
          std::unique_ptr<ActivePerceptionPolicy> policy;
          if (cfg.policy == "random")
            policy = std::make_unique<RandomPolicy>(episode_cfg.random_seed ^
                                                    0x9e3779b97f4a7c15ull);
          else if (cfg.policy == "vlm")
            policy = std::make_unique<VlmPolicy>(*cfg.endpoint, Query{scene.query});
          else
            policy = std::make_unique<GreedyPolicy>(scene);
          result = run_episode(scene, rules, *analyzer,
                               rules.allows_movement ? policy.get() : nullptr, episode_cfg);
        }

        if (uses_vlm && result.terminated_by == Termination::AgentUnavailable)
          throw EndpointUnavailableError("vlm endpoint unreachable for scene " + scene.id);

        if (sink) sink(scene, space, trial, episode_cfg, result);

        TrialOutcome outcome;
        outcome.correct = correctness(result.final_answer, scene.truth_answer);
        outcome.episode = std::move(result);
        outcome.goal_pose = scene.goal_pose;
        outcome.rotation_allowed = rules.allows_rot_x || rules.allows_rot_y;
        trials.push_back(std::move(outcome));
      }
      cells.push_back({scene.id, space, compute_metrics(trials, cfg.osr_margin)});
    }
  }
  return cells;
}

std::string emit_report(const std::vector<CellResult>& cells, ReportFormat format) {
  if (format == ReportFormat::Csv) {
    std::ostringstream out;
    out << "scene,space,sr,tlp,tlps,pe,oe,osr\n";
    for (const auto& cell : cells) {
      out << cell.scene_id << "," << to_string(cell.space) << "," << fmt(cell.row.sr) << ","
          << fmt(cell.row.tlp) << "," << fmt(cell.row.tlps) << "," << fmt(cell.row.pe) << ","
          << oe_cell(cell.row.oe) << "," << fmt(cell.row.osr) << "\n";
    }
    return out.str();
  }

  // Markdown: method rows, one column block per scene in first-seen order.
  std::vector<std::string> scenes;
  std::vector<std::string> spaces;
  for (const auto& cell : cells) {
    if (std::find(scenes.begin(), scenes.end(), cell.scene_id) == scenes.end())
      scenes.push_back(cell.scene_id);
    const std::string space = to_string(cell.space);
    if (std::find(spaces.begin(), spaces.end(), space) == spaces.end()) spaces.push_back(space);
  }
  auto find_cell = [&](const std::string& scene, const std::string& space) -> const CellResult* {
    for (const auto& cell : cells)
      if (cell.scene_id == scene && to_string(cell.space) == space) return &cell;
    return nullptr;
  };

  std::ostringstream out;
  out << "| Method |";
  for (const auto& scene : scenes)
    out << " " << scene << " SR | " << scene << " {TLP, TLPS} | " << scene << " {PE, OE} | "
        << scene << " OSR |";
  out << "\n|---|";
  for (size_t i = 0; i < scenes.size(); ++i) out << "---|---|---|---|";
  out << "\n";
  for (const auto& space : spaces) {
    out << "| " << space << " |";
    for (const auto& scene : scenes) {
      const CellResult* cell = find_cell(scene, space);
      if (!cell) {
        out << " -- | -- | -- | -- |";
        continue;
      }
      out << " " << fmt(cell->row.sr) << " | {" << fmt(cell->row.tlp) << ", "
          << fmt(cell->row.tlps) << "} | {" << fmt(cell->row.pe) << ", " << oe_cell(cell->row.oe)
          << "} | " << fmt(cell->row.osr) << " |";
    }
    out << "\n";
  }
  out << "\nNotes:\n";
  out << "- SR and OSR are fractions of trials; OSR counts trials whose trajectory passes "
         "within the goal margin regardless of where they stop.\n";
  out << "- OE is reported only for action spaces that allow rotations (\"--\" otherwise).\n";
  out << "- NAP performs a single observation from the home pose and never moves, so its TLP "
         "is 0 by construction.\n";
  return out.str();
}

std::string cells_to_json(const std::vector<CellResult>& cells) {
  json arr = json::array();
  for (const auto& cell : cells) {
    json row{{"scene", cell.scene_id},
             {"space", to_string(cell.space)},
             {"sr", cell.row.sr},
             {"tlp", cell.row.tlp},
             {"tlps", cell.row.tlps},
             {"pe", cell.row.pe},
             {"oe", cell.row.oe ? json(*cell.row.oe) : json(nullptr)},
             {"osr", cell.row.osr}};
    arr.push_back(std::move(row));
  }
  return arr.dump(2) + "\n";
}

std::vector<CellResult> cells_from_json(const std::string& text) {
  std::vector<CellResult> out;
  json arr;
  try {
    arr = json::parse(text);
    for (const auto& row : arr) {
      CellResult cell;
      cell.scene_id = row.at("scene").get<std::string>();
      const auto space = parse_action_space(row.at("space").get<std::string>());
      if (!space) throw ConfigError("unknown action space in results file");
      cell.space = *space;
      cell.row.sr = row.at("sr").get<double>();
      cell.row.tlp = row.at("tlp").get<double>();
      cell.row.tlps = row.at("tlps").get<double>();
      cell.row.pe = row.at("pe").get<double>();
      if (!row.at("oe").is_null()) cell.row.oe = row.at("oe").get<double>();
      cell.row.osr = row.at("osr").get<double>();
      out.push_back(std::move(cell));
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("results file malformed: ") + e.what());
  }
  return out;
}

}  // namespace apsim
