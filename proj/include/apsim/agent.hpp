// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/actionspace.hpp"
#include "apsim/scene.hpp"

#include <array>
#include <memory>
#include <random>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace apsim {

struct Query {
  std::string text;
};

struct Answer {
  bool conclusive = false;
  std::string text;
  double confidence = 0.0;
};

/// Immutable initial context handed to the agents at episode start.
struct InitialContext {
  Vec3 workspace_min = Vec3::Zero();
  Vec3 workspace_max = Vec3::Zero();
  std::string action_space;
  std::string rules_text;
  std::string goal_statement;
};

/// One accumulated fact per executed action.
struct StepFact {
  int step_index = 0;
  Pose pose;
  GridIndex vertex;
  std::string summary;
};

/// Episode knowledge: fixed context plus the growing step history. The
/// visited-vertex set is derived from the history.
struct Knowledge {
  InitialContext eta;
  std::vector<StepFact> kappa;
};

std::set<GridIndex> visited_vertices(const Knowledge& knowledge);
Knowledge make_initial_knowledge(const ActionSpaceRules& rules, const Query& query);

/// Camera image augmented with the projected grid, plus the symbolic facts
/// it was rendered from.
struct EnhancedObservation {
  ObservationFacts facts;
  RasterImage image;
  OverlayPrimitiveSet overlay;
};

EnhancedObservation make_enhanced_observation(const SceneSpec& scene,
                                              const ActionSpaceRules& rules, const Pose& pose,
                                              double marker_noise_std = 0.0,
                                              std::mt19937_64* rng = nullptr);

/// Lowercase, punctuation replaced by spaces, whitespace collapsed.
std::string normalize_text(const std::string& s);

/// Deterministic one-line description of what an observation contains.
std::string summarize_facts(const ObservationFacts& facts);

struct Unavailable {
  std::string detail;
};

using AnalysisResult = std::variant<Answer, Unavailable>;

class PerceptionAnalyzer {
 public:
  virtual ~PerceptionAnalyzer() = default;
  virtual AnalysisResult analyze(const Query& query, const EnhancedObservation& obs) = 0;
  virtual std::string name() const = 0;
};

struct Proposal {
  Action action;
  Knowledge knowledge;  // input knowledge plus one appended StepFact
};
struct Exhausted {};
struct ProposalRejected {
  std::string reason;
};
using PolicyResult = std::variant<Proposal, Exhausted, ProposalRejected, Unavailable>;

class ActivePerceptionPolicy {
 public:
  virtual ~ActivePerceptionPolicy() = default;
  /// home_obs is null exactly when the rules exclude the home observation.
  virtual PolicyResult propose(const Pose& current, const EnhancedObservation& obs,
                               const Knowledge& knowledge, const EnhancedObservation* home_obs,
                               const ActionSpaceRules& rules) = 0;
  virtual std::string name() const = 0;
};

/// Answers from ground truth: the scene's own query resolves to the truth
/// answer whenever the hidden fact is observable; other queries match
/// against visible surface facts.
class OracleAnalyzer : public PerceptionAnalyzer {
 public:
  explicit OracleAnalyzer(SceneSpec scene);
  AnalysisResult analyze(const Query& query, const EnhancedObservation& obs) override;
  std::string name() const override { return "oracle"; }

 private:
  SceneSpec scene_;
};

/// Uniformly samples an unvisited vertex (and allowed rotations).
class RandomPolicy : public ActivePerceptionPolicy {
 public:
  explicit RandomPolicy(uint64_t seed);
  PolicyResult propose(const Pose& current, const EnhancedObservation& obs,
                       const Knowledge& knowledge, const EnhancedObservation* home_obs,
                       const ActionSpaceRules& rules) override;
  std::string name() const override { return "random"; }

 private:
  std::mt19937_64 rng_;
};

/// Scripted baseline that walks toward the hidden attribute's viewing cone:
/// picks the unvisited vertex minimizing (cone angle, distance-band excess)
/// and the allowed tilt best aligned with the opening.
class GreedyPolicy : public ActivePerceptionPolicy {
 public:
  explicit GreedyPolicy(const SceneSpec& scene);
  PolicyResult propose(const Pose& current, const EnhancedObservation& obs,
                       const Knowledge& knowledge, const EnhancedObservation* home_obs,
                       const ActionSpaceRules& rules) override;
  std::string name() const override { return "greedy"; }

 private:
  HiddenAttribute hidden_;
};

/// The five passive camera poses of the fixed-views baseline: four side
/// views 0.15 m above the table facing its center, then the top view.
std::array<Pose, 5> fixed_view_poses(const SceneSpec& scene);

/// Evaluates the analyzer at the five fixed poses and returns the first
/// conclusive answer, or an inconclusive one when all five fail.
Answer fixed_views_episode(const SceneSpec& scene, PerceptionAnalyzer& analyzer,
                           const CameraIntrinsics& k);

}  // namespace apsim
