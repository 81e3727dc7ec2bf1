// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/agent.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace apsim {

struct LogError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EpisodeConfig {
  int max_iterations = 10;
  double confidence_threshold = 0.8;
  uint64_t random_seed = 0;
  double marker_noise_std = 0.0;  // meters
};

enum class Termination { ConclusiveAnswer, IterationCap, Exhausted, AgentUnavailable };
std::string to_string(Termination t);
std::optional<Termination> parse_termination(const std::string& s);

/// One analysis (and possibly one move) of the capture-analyze-act loop.
struct StepRecord {
  int index = 0;
  Pose pose_before;
  Pose pose_after;
  std::optional<Action> action;
  Answer answer;
  double segment_length = 0.0;
};

struct EpisodeResult {
  std::vector<StepRecord> steps;
  Termination terminated_by = Termination::IterationCap;
  Answer final_answer;
  Pose final_pose;
  std::vector<Vec3> trajectory;  // home position first, then every reached position
};

/// Runs the iterative exploration loop: observe and analyze at the current
/// pose, stop on a confident conclusive answer, otherwise ask the policy for
/// the next viewpoint and teleport there. Analyses are capped at
/// cfg.max_iterations (the home analysis counts as iteration 1). policy may
/// be null only when the rules admit no movement. A policy proposal that
/// fails validation consumes its iteration without moving. Deterministic for
/// a fixed seed and deterministic agents.
EpisodeResult run_episode(const SceneSpec& scene, const ActionSpaceRules& rules,
                          PerceptionAnalyzer& analyzer, ActivePerceptionPolicy* policy,
                          const EpisodeConfig& cfg);

/// Episode-shaped record of the passive five-view baseline sweep.
EpisodeResult run_fixed_views_episode(const SceneSpec& scene, PerceptionAnalyzer& analyzer,
                                      const EpisodeConfig& cfg);

double trajectory_length(const EpisodeResult& result);

struct EpisodeLogHeader {
  std::string scene_id;
  ActionSpaceKind space = ActionSpaceKind::NAP;
  std::string analyzer;
  std::string policy;
  EpisodeConfig cfg;
  GridSpec grid;
  Pose home_pose;
};

/// Canonical JSON of a result (steps, termination, trajectory); used for
/// determinism digests and tests.
std::string episode_to_json(const EpisodeResult& result);

/// Episode logs are JSON lines: one header object, one object per step, and
/// a footer. A missing footer marks an interrupted (yet readable) episode.
void write_episode_log(const std::string& path, const EpisodeLogHeader& header,
                       const EpisodeResult& result);

struct LoadedEpisodeLog {
  EpisodeLogHeader header;
  EpisodeResult result;
  bool complete = false;  // footer present
};

/// Throws LogError on malformed lines; tolerates a missing footer.
LoadedEpisodeLog read_episode_log(const std::string& path);

/// Re-checks the recorded invariants (segment lengths, trajectory
/// consistency, iteration cap, revisits). Returns the first violation.
std::optional<std::string> verify_episode_log(const LoadedEpisodeLog& log);

}  // namespace apsim
