// SPDX-License-Identifier: Apache-2.0
#include "apsim/loop.hpp"

#include "json_util.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace apsim {

namespace {

using jsonutil::json;

void validate_config(const EpisodeConfig& cfg) {
  if (cfg.max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (cfg.confidence_threshold < 0.0 || cfg.confidence_threshold > 1.0)
    throw std::invalid_argument("confidence_threshold must lie in [0, 1]");
  if (cfg.marker_noise_std < 0.0) throw std::invalid_argument("marker_noise_std must be >= 0");
}

void finish(EpisodeResult& result, Termination term, const Pose& pose) {
  result.terminated_by = term;
  result.final_pose = pose;
  result.final_answer = result.steps.empty() ? Answer{} : result.steps.back().answer;
}

}  // namespace

std::string to_string(Termination t) {
  switch (t) {
    case Termination::ConclusiveAnswer: return "conclusive_answer";
    case Termination::IterationCap: return "iteration_cap";
    case Termination::Exhausted: return "exhausted";
    case Termination::AgentUnavailable: return "agent_unavailable";
  }
  return "?";
}

std::optional<Termination> parse_termination(const std::string& s) {
  for (Termination t : {Termination::ConclusiveAnswer, Termination::IterationCap,
                        Termination::Exhausted, Termination::AgentUnavailable})
    if (to_string(t) == s) return t;
  return std::nullopt;
}

EpisodeResult run_episode(const SceneSpec& scene, const ActionSpaceRules& rules,
                          PerceptionAnalyzer& analyzer, ActivePerceptionPolicy* policy,
                          const EpisodeConfig& cfg) {
  validate_config(cfg);
  if (rules.allows_movement && policy == nullptr)
    throw std::invalid_argument("run_episode: this action space needs a policy");

  std::mt19937_64 rng(cfg.random_seed);
  const Query query{scene.query};

  EpisodeResult result;
  Pose pose = scene.home_pose;
  result.trajectory.push_back(pose.position);
  Knowledge knowledge = make_initial_knowledge(rules, query);
  EnhancedObservation home_obs;

  for (int t = 1; t <= cfg.max_iterations; ++t) {
    const EnhancedObservation obs =
        make_enhanced_observation(scene, rules, pose, cfg.marker_noise_std, &rng);
    if (t == 1 && rules.include_home_obs) home_obs = obs;

    StepRecord rec;
    rec.index = t;
    rec.pose_before = pose;
    rec.pose_after = pose;

    const AnalysisResult analysis = analyzer.analyze(query, obs);
    if (std::holds_alternative<Unavailable>(analysis)) {
      result.steps.push_back(rec);
      finish(result, Termination::AgentUnavailable, pose);
      return result;
    }
    rec.answer = std::get<Answer>(analysis);

    if (rec.answer.conclusive && rec.answer.confidence >= cfg.confidence_threshold) {
      result.steps.push_back(rec);
      finish(result, Termination::ConclusiveAnswer, pose);
      return result;
    }
    if (t == cfg.max_iterations || !rules.allows_movement) {
      result.steps.push_back(rec);
      finish(result, Termination::IterationCap, pose);
      return result;
    }

    PolicyResult proposal =
        policy->propose(pose, obs, knowledge,
                        rules.include_home_obs ? &home_obs : nullptr, rules);
    if (std::holds_alternative<Exhausted>(proposal)) {
      result.steps.push_back(rec);
      finish(result, Termination::Exhausted, pose);
      return result;
    }
    if (std::holds_alternative<Unavailable>(proposal)) {
      result.steps.push_back(rec);
      finish(result, Termination::AgentUnavailable, pose);
      return result;
    }
    if (std::holds_alternative<ProposalRejected>(proposal)) {
      // Invalid suggestion: the iteration is consumed, the camera stays put.
      result.steps.push_back(rec);
      continue;
    }

    auto& accepted = std::get<Proposal>(proposal);
    if (validate(rules, accepted.action, visited_vertices(knowledge))) {
      rec.action = accepted.action;
      result.steps.push_back(rec);
      continue;
    }

    knowledge = std::move(accepted.knowledge);
    const Pose next = action_to_pose(rules, accepted.action);
    rec.action = accepted.action;
    rec.pose_after = next;
    rec.segment_length = (next.position - pose.position).norm();
    result.steps.push_back(rec);
    result.trajectory.push_back(next.position);
    pose = next;
  }

  finish(result, Termination::IterationCap, pose);
  return result;
}

EpisodeResult run_fixed_views_episode(const SceneSpec& scene, PerceptionAnalyzer& analyzer,
                                      const EpisodeConfig& cfg) {
  validate_config(cfg);
  const Query query{scene.query};

  EpisodeResult result;
  Pose pose = scene.home_pose;
  result.trajectory.push_back(pose.position);

  int index = 0;
  for (const Pose& view : fixed_view_poses(scene)) {
    StepRecord rec;
    rec.index = ++index;
    rec.pose_before = pose;
    rec.pose_after = view;
    rec.segment_length = (view.position - pose.position).norm();
    result.trajectory.push_back(view.position);
    pose = view;

    EnhancedObservation obs;
    obs.facts = observe(scene, pose, scene.camera);
    obs.overlay = project_grid(scene.grid, scene.camera, pose);
    obs.image = render(scene, pose, scene.camera, obs.overlay);

    const AnalysisResult analysis = analyzer.analyze(query, obs);
    if (std::holds_alternative<Unavailable>(analysis)) {
      result.steps.push_back(rec);
      finish(result, Termination::AgentUnavailable, pose);
      return result;
    }
    rec.answer = std::get<Answer>(analysis);
    result.steps.push_back(rec);
    if (rec.answer.conclusive && rec.answer.confidence >= cfg.confidence_threshold) {
      finish(result, Termination::ConclusiveAnswer, pose);
      return result;
    }
  }
  finish(result, Termination::IterationCap, pose);
  return result;
}

double trajectory_length(const EpisodeResult& result) {
  double total = 0.0;
  for (size_t i = 1; i < result.trajectory.size(); ++i)
    total += (result.trajectory[i] - result.trajectory[i - 1]).norm();
  return total;
}

namespace {

json step_to(const StepRecord& s) {
  json j{{"type", "step"},
         {"index", s.index},
         {"pose_before", jsonutil::pose_to(s.pose_before)},
         {"pose_after", jsonutil::pose_to(s.pose_after)},
         {"answer", jsonutil::answer_to(s.answer)},
         {"segment_length", s.segment_length}};
  if (s.action) j["action"] = jsonutil::action_to(*s.action);
  return j;
}

StepRecord step_from(const json& j) {
  StepRecord s;
  s.index = j.at("index").get<int>();
  s.pose_before = jsonutil::pose_from(j.at("pose_before"));
  s.pose_after = jsonutil::pose_from(j.at("pose_after"));
  s.answer = jsonutil::answer_from(j.at("answer"));
  s.segment_length = j.at("segment_length").get<double>();
  if (j.contains("action")) s.action = jsonutil::action_from(j.at("action"));
  return s;
}

}  // namespace

std::string episode_to_json(const EpisodeResult& result) {
  json j;
  j["terminated_by"] = to_string(result.terminated_by);
  j["final_answer"] = jsonutil::answer_to(result.final_answer);
  j["final_pose"] = jsonutil::pose_to(result.final_pose);
  j["steps"] = json::array();
  for (const auto& s : result.steps) j["steps"].push_back(step_to(s));
  j["trajectory"] = json::array();
  for (const auto& p : result.trajectory) j["trajectory"].push_back(jsonutil::vec3_to(p));
  return j.dump();
}

void write_episode_log(const std::string& path, const EpisodeLogHeader& header,
                       const EpisodeResult& result) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw LogError("cannot open log for writing: " + path);
  json h{{"type", "header"},
         {"version", 1},
         {"scene", header.scene_id},
         {"space", to_string(header.space)},
         {"analyzer", header.analyzer},
         {"policy", header.policy},
         {"seed", header.cfg.random_seed},
         {"max_iterations", header.cfg.max_iterations},
         {"confidence_threshold", header.cfg.confidence_threshold},
         {"marker_noise_std", header.cfg.marker_noise_std},
         {"grid", jsonutil::grid_to(header.grid)},
         {"home_pose", jsonutil::pose_to(header.home_pose)}};
  f << h.dump() << "\n";
  for (const auto& s : result.steps) f << step_to(s).dump() << "\n";
  json footer{{"type", "footer"},
              {"terminated_by", to_string(result.terminated_by)},
              {"final_answer", jsonutil::answer_to(result.final_answer)},
              {"final_pose", jsonutil::pose_to(result.final_pose)},
              {"trajectory_length", trajectory_length(result)}};
  f << footer.dump() << "\n";
  if (!f) throw LogError("short write to log: " + path);
}

LoadedEpisodeLog read_episode_log(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw LogError("cannot open log: " + path);

  LoadedEpisodeLog out;
  std::string line;
  bool have_header = false;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw LogError("log line " + std::to_string(line_no) + " is not valid JSON: " + e.what());
    }
    try {
      const std::string type = j.at("type").get<std::string>();
      if (type == "header") {
        if (have_header) throw LogError("duplicate header");
        have_header = true;
        out.header.scene_id = j.at("scene").get<std::string>();
        const auto space = parse_action_space(j.at("space").get<std::string>());
        if (!space) throw LogError("unknown action space in header");
        out.header.space = *space;
        out.header.analyzer = j.value("analyzer", "");
        out.header.policy = j.value("policy", "");
        out.header.cfg.random_seed = j.at("seed").get<uint64_t>();
        out.header.cfg.max_iterations = j.at("max_iterations").get<int>();
        out.header.cfg.confidence_threshold = j.at("confidence_threshold").get<double>();
        out.header.cfg.marker_noise_std = j.value("marker_noise_std", 0.0);
        out.header.grid = jsonutil::grid_from(j.at("grid"));
        out.header.home_pose = jsonutil::pose_from(j.at("home_pose"));
      } else if (type == "step") {
        if (!have_header) throw LogError("step before header");
        out.result.steps.push_back(step_from(j));
      } else if (type == "footer") {
        if (!have_header) throw LogError("footer before header");
        const auto term = parse_termination(j.at("terminated_by").get<std::string>());
        if (!term) throw LogError("unknown termination in footer");
        out.result.terminated_by = *term;
        out.result.final_answer = jsonutil::answer_from(j.at("final_answer"));
        out.result.final_pose = jsonutil::pose_from(j.at("final_pose"));
        out.complete = true;
      } else {
        throw LogError("unknown record type: " + type);
      }
    } catch (const json::exception& e) {
      throw LogError("log line " + std::to_string(line_no) + " malformed: " + e.what());
    }
  }
  if (!have_header) throw LogError("log has no header line");

  // Rebuild the trajectory from the recorded motion.
  out.result.trajectory.push_back(out.header.home_pose.position);
  for (const auto& s : out.result.steps)
    if ((s.pose_after.position - s.pose_before.position).norm() > 0.0)
      out.result.trajectory.push_back(s.pose_after.position);
  if (!out.complete && !out.result.steps.empty()) {
    out.result.final_pose = out.result.steps.back().pose_after;
    out.result.final_answer = out.result.steps.back().answer;
  }
  return out;
}

std::optional<std::string> verify_episode_log(const LoadedEpisodeLog& log) {
  const auto& steps = log.result.steps;
  if (static_cast<int>(steps.size()) > log.header.cfg.max_iterations)
    return "more steps than max_iterations";

  int expected = 1;
  const Vec3* previous = &log.header.home_pose.position;
  std::set<GridIndex> seen;
  const ActionSpaceRules rules = rules_for(log.header.space, log.header.grid);
  for (const auto& s : steps) {
    if (s.index != expected++) return "step indices are not consecutive";
    const double seg = (s.pose_after.position - s.pose_before.position).norm();
    if (std::abs(seg - s.segment_length) > 1e-9)
      return "segment_length mismatch at step " + std::to_string(s.index);
    if ((s.pose_before.position - *previous).norm() > 1e-9)
      return "pose_before does not continue the trajectory at step " + std::to_string(s.index);
    previous = &s.pose_after.position;
    if (s.action) {
      const GridIndex v = snapped_vertex(rules, *s.action);
      if (!seen.insert(v).second) return "revisited vertex at step " + std::to_string(s.index);
    }
  }
  if (log.complete && !steps.empty()) {
    if ((log.result.final_pose.position - steps.back().pose_after.position).norm() > 1e-9)
      return "final pose does not match the last step";
    if (log.result.terminated_by == Termination::ConclusiveAnswer &&
        !log.result.final_answer.conclusive)
      return "conclusive termination with an inconclusive final answer";
  }
  return std::nullopt;
}

}  // namespace apsim
