// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "apsim/agent.hpp"
#include "apsim/loop.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace apsim {

/// Identifies the prompt wording; recorded in every transcript so results
/// can cite the exact templates they were produced with.
inline constexpr const char* kPromptTemplateVersion = "ap-templates-v1";

struct EndpointConfig {
  std::string base_url;   // e.g. "http://127.0.0.1:8080" or "https://host/v1-prefix"
  std::string model_name;
  std::string api_key_env_var = "VLM_API_KEY";
  double timeout_s = 60.0;
  int max_retries = 2;  // re-prompts / transport retries beyond the first attempt
  double temperature = 0.0;
};

/// One rendered request: fixed system text, the user turn, and PNG images
/// (current observation first, then optionally the home observation).
struct PromptBundle {
  std::string system_text;
  std::string user_text;
  std::vector<std::vector<uint8_t>> images_png;
};

/// Parsed movement suggestion. TARGET carries a continuous point; VERTEX
/// carries the printed label coordinates of a lattice vertex (z optional for
/// single-layer grids).
struct ActionProposal {
  enum class Kind { Target, Vertex } kind = Kind::Target;
  std::vector<double> coords;  // 3 for Target, 2 or 3 for Vertex
  int rot_x_deg = 0;
  int rot_y_deg = 0;
  std::string raw_text;
};

/// Strict parse of the delimited ANSWERABLE / ANSWER / CONFIDENCE block.
std::optional<Answer> parse_analysis_reply(const std::string& text);

/// Strict parse of the TARGET / VERTEX / ROT_X / ROT_Y block.
std::optional<ActionProposal> parse_action_reply(const std::string& text);

/// Converts a proposal into an Action and validates it against the rules and
/// visited set. Returns the rejection instead when it fails.
std::variant<Action, Rejection> resolve_proposal(const ActionProposal& proposal,
                                                 const ActionSpaceRules& rules,
                                                 const std::set<GridIndex>& visited);

std::string render_system_prompt(const InitialContext& eta);
PromptBundle make_analysis_bundle(const Query& query, const InitialContext& eta,
                                  const EnhancedObservation& obs);
PromptBundle make_action_bundle(const Query& query, const Knowledge& knowledge,
                                const ActionSpaceRules& rules, const EnhancedObservation& obs,
                                const EnhancedObservation* home_obs);

/// Append-only JSON-lines record of every remote exchange. Images appear as
/// content hashes, never bytes.
class TranscriptRecorder {
 public:
  TranscriptRecorder(std::string path, std::string episode_id);

  void record_exchange(const std::string& kind, const PromptBundle& bundle,
                       const std::string& appended_feedback, const std::string& raw_reply,
                       const std::string& status);

  const std::string& path() const { return path_; }

 private:
  std::string path_;
  std::string episode_id_;
  int seq_ = 0;
};

struct TranscriptEntry {
  int seq = 0;
  std::string kind;    // "analysis" or "action"
  std::string status;  // "ok", "malformed", "rejected:<reason>", "transport:<detail>"
  std::string raw_reply;
  std::string parsed_json;  // canonical dump of the parsed reply, "" when unparsed
};

std::vector<TranscriptEntry> read_transcript(const std::string& path);

/// Canonical JSON of a parsed reply, shared by recording and replay.
std::string parsed_reply_to_json(const std::string& kind, const std::string& raw_reply);

struct AnalysisOutcome {
  Answer answer;
  bool malformed_fallback = false;  // retries exhausted on unparseable replies
};

/// Asks the endpoint whether the observation answers the query. Malformed
/// replies are retried with an appended format reminder up to max_retries;
/// transport failures likewise. Returns Unavailable only when the final
/// failure was transport-level.
std::variant<AnalysisOutcome, Unavailable> request_analysis(const EndpointConfig& cfg,
                                                            const PromptBundle& bundle,
                                                            TranscriptRecorder* recorder = nullptr);

struct ActionRejected {
  std::string reason;
};

/// Asks the endpoint for the next move. Proposals failing validation are
/// re-prompted once per violation with the rejection reason, within the
/// retry budget; the returned proposal always resolves to a valid Action.
std::variant<ActionProposal, ActionRejected, Unavailable> request_action(
    const EndpointConfig& cfg, const PromptBundle& bundle, const ActionSpaceRules& rules,
    const std::set<GridIndex>& visited, TranscriptRecorder* recorder = nullptr);

/// Perception analyzer backed by the remote endpoint.
class VlmAnalyzer : public PerceptionAnalyzer {
 public:
  VlmAnalyzer(EndpointConfig cfg, InitialContext eta, TranscriptRecorder* recorder = nullptr);
  AnalysisResult analyze(const Query& query, const EnhancedObservation& obs) override;
  std::string name() const override { return "vlm"; }

 private:
  EndpointConfig cfg_;
  InitialContext eta_;
  TranscriptRecorder* recorder_;
};

/// Active perception policy backed by the remote endpoint.
class VlmPolicy : public ActivePerceptionPolicy {
 public:
  VlmPolicy(EndpointConfig cfg, Query query, TranscriptRecorder* recorder = nullptr);
  PolicyResult propose(const Pose& current, const EnhancedObservation& obs,
                       const Knowledge& knowledge, const EnhancedObservation* home_obs,
                       const ActionSpaceRules& rules) override;
  std::string name() const override { return "vlm"; }

 private:
  EndpointConfig cfg_;
  Query query_;
  TranscriptRecorder* recorder_;
};

}  // namespace apsim
