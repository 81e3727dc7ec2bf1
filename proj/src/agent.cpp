// SPDX-License-Identifier: Apache-2.0
#include "apsim/agent.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

namespace apsim {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<std::string> tokens_of(const std::string& normalized) {
  std::vector<std::string> out;
  std::istringstream in(normalized);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

bool is_stopword(const std::string& t) {
  static const std::set<std::string> kStop = {"what", "this", "that", "there", "does",
                                              "says", "with", "from", "have"};
  return kStop.count(t) > 0;
}

// Shared meaningful token between a query and a candidate fact.
bool token_overlap(const std::string& query_norm, const std::string& fact_norm) {
  const auto q = tokens_of(query_norm);
  for (const auto& t : tokens_of(fact_norm)) {
    if (t.size() < 4 || is_stopword(t)) continue;
    if (std::find(q.begin(), q.end(), t) != q.end()) return true;
  }
  return false;
}

// Tilt options are probed zero-first so level wins exact ties.
constexpr int kTiltChoices[3] = {0, -kRotationStepDeg, kRotationStepDeg};

std::pair<int, int> best_tilt(const ActionSpaceRules& rules, const Vec3& position,
                              const Vec3& look_target) {
  const Vec3 want = look_target - position;
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> pick{0, 0};
  for (int rx : kTiltChoices) {
    if (rx != 0 && !rules.allows_rot_x) continue;
    for (int ry : kTiltChoices) {
      if (ry != 0 && !rules.allows_rot_y) continue;
      Action probe;
      probe.target = position;
      probe.rot_x_deg = rx;
      probe.rot_y_deg = ry;
      const Vec3 axis = action_to_pose(rules, probe).orientation * Vec3::UnitZ();
      const double cosv =
          axis.normalized().dot(want.normalized());
      const double angle = std::acos(std::clamp(cosv, -1.0, 1.0));
      if (angle < best - 1e-12) {
        best = angle;
        pick = {rx, ry};
      }
    }
  }
  return pick;
}

Action make_move(const ActionSpaceRules& rules, const GridVertex& vertex, int rot_x, int rot_y) {
  Action a;
  if (rules.allows_continuous)
    a.target = vertex.position;
  else
    a.target = vertex.index;
  a.rot_x_deg = rules.allows_rot_x ? rot_x : 0;
  a.rot_y_deg = rules.allows_rot_y ? rot_y : 0;
  return a;
}

Knowledge append_step(Knowledge knowledge, const ActionSpaceRules& rules, const Action& action,
                      const std::string& summary) {
  StepFact fact;
  fact.step_index = static_cast<int>(knowledge.kappa.size()) + 1;
  fact.pose = action_to_pose(rules, action);
  fact.vertex = snapped_vertex(rules, action);
  fact.summary = summary;
  knowledge.kappa.push_back(std::move(fact));
  return knowledge;
}

std::vector<GridVertex> unvisited_vertices(const ActionSpaceRules& rules,
                                           const Knowledge& knowledge) {
  const std::set<GridIndex> visited = visited_vertices(knowledge);
  std::vector<GridVertex> out;
  for (auto& v : generate_vertices(rules.grid))
    if (!visited.count(v.index)) out.push_back(std::move(v));
  return out;
}

}  // namespace

std::set<GridIndex> visited_vertices(const Knowledge& knowledge) {
  std::set<GridIndex> out;
  for (const auto& fact : knowledge.kappa) out.insert(fact.vertex);
  return out;
}

Knowledge make_initial_knowledge(const ActionSpaceRules& rules, const Query& query) {
  Knowledge k;
  k.eta.workspace_min = rules.grid.anchor;
  k.eta.workspace_max = rules.grid.anchor + rules.grid.extent;
  k.eta.action_space = to_string(rules.kind);
  k.eta.rules_text = describe_rules(rules);
  k.eta.goal_statement = "Answer the query about the tabletop scene: " + query.text;
  return k;
}

EnhancedObservation make_enhanced_observation(const SceneSpec& scene,
                                              const ActionSpaceRules& rules, const Pose& pose,
                                              double marker_noise_std, std::mt19937_64* rng) {
  EnhancedObservation obs;
  obs.facts = observe(scene, pose, scene.camera, marker_noise_std, rng);
  obs.overlay = project_grid(rules.grid, scene.camera, pose);
  obs.image = render(scene, pose, scene.camera, obs.overlay);
  return obs;
}

std::string normalize_text(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    const unsigned char uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back(static_cast<char>(std::tolower(uc)));
    } else {
      pending_space = true;
    }
  }
  return out;
}

std::string summarize_facts(const ObservationFacts& facts) {
  std::ostringstream out;
  out << "visible objects:";
  if (facts.visible_object_ids.empty()) {
    out << " none";
  } else {
    std::vector<std::string> ids = facts.visible_object_ids;
    std::sort(ids.begin(), ids.end());
    for (const auto& id : ids) out << " " << id;
  }
  out << "; markers: " << facts.detected_markers.size();
  out << "; hidden fact " << (facts.hidden_fact_visible ? "visible" : "not visible");
  return out.str();
}

OracleAnalyzer::OracleAnalyzer(SceneSpec scene) : scene_(std::move(scene)) {}

AnalysisResult OracleAnalyzer::analyze(const Query& query, const EnhancedObservation& obs) {
  const std::string q = normalize_text(query.text);

  if (q == normalize_text(scene_.query)) {
    // The scene's own task: grounded in the hidden fact when the truth
    // answer appears there, otherwise in some surface fact.
    const bool hidden_grounded =
        normalize_text(scene_.hidden.fact).find(normalize_text(scene_.truth_answer)) !=
        std::string::npos;
    if (hidden_grounded) {
      if (obs.facts.hidden_fact_visible) return Answer{true, scene_.truth_answer, 1.0};
      return Answer{false, "", 0.0};
    }
    for (const auto& [id, fact] : obs.facts.visible_surface_facts)
      if (normalize_text(fact).find(normalize_text(scene_.truth_answer)) != std::string::npos)
        return Answer{true, fact, 1.0};
    return Answer{false, "", 0.0};
  }

  // Ad-hoc queries match whatever observable fact shares vocabulary.
  if (obs.facts.hidden_fact_visible && token_overlap(q, normalize_text(scene_.hidden.fact)))
    return Answer{true, scene_.truth_answer, 1.0};

  for (const auto& [id, fact] : obs.facts.visible_surface_facts) {
    if (token_overlap(q, normalize_text(fact)) || token_overlap(q, normalize_text(id)))
      return Answer{true, fact, 1.0};
  }
  return Answer{false, "", 0.0};
}

RandomPolicy::RandomPolicy(uint64_t seed) : rng_(seed) {}

PolicyResult RandomPolicy::propose(const Pose& /*current*/, const EnhancedObservation& obs,
                                   const Knowledge& knowledge,
                                   const EnhancedObservation* /*home_obs*/,
                                   const ActionSpaceRules& rules) {
  const std::vector<GridVertex> open = unvisited_vertices(rules, knowledge);
  if (open.empty()) return Exhausted{};

  std::uniform_int_distribution<size_t> pick(0, open.size() - 1);
  const GridVertex& vertex = open[pick(rng_)];
  auto tilt = [&](bool allowed) {
    if (!allowed) return 0;
    std::uniform_int_distribution<int> d(0, 2);
    return kTiltChoices[d(rng_)];
  };
  const Action action = make_move(rules, vertex, tilt(rules.allows_rot_x),
                                  tilt(rules.allows_rot_y));
  return Proposal{action, append_step(knowledge, rules, action, summarize_facts(obs.facts))};
}

GreedyPolicy::GreedyPolicy(const SceneSpec& scene) : hidden_(scene.hidden) {}

PolicyResult GreedyPolicy::propose(const Pose& /*current*/, const EnhancedObservation& obs,
                                   const Knowledge& knowledge,
                                   const EnhancedObservation* /*home_obs*/,
                                   const ActionSpaceRules& rules) {
  std::vector<GridVertex> open = unvisited_vertices(rules, knowledge);
  if (open.empty()) return Exhausted{};

  const Vec3 axis = hidden_.opening_normal.normalized();
  auto score = [&](const GridVertex& v) {
    const Vec3 rel = v.position - hidden_.opening_center;
    const double dist = rel.norm();
    const double cosv = dist > 1e-12 ? axis.dot(rel / dist) : 1.0;
    const double angle = std::acos(std::clamp(cosv, -1.0, 1.0)) * 180.0 / kPi;
    const double band_excess =
        std::max({0.0, hidden_.min_distance - dist, dist - hidden_.max_distance});
    return std::pair<double, double>(angle, band_excess);
  };

  // Vertices come out of generate_vertices in (k, j, i) order, so the first
  // strict minimum also settles ties lexicographically.
  const GridVertex* best = &open.front();
  auto best_score = score(open.front());
  for (const auto& v : open) {
    const auto s = score(v);
    if (s.first < best_score.first - 1e-12 ||
        (std::abs(s.first - best_score.first) <= 1e-12 && s.second < best_score.second - 1e-12)) {
      best = &v;
      best_score = s;
    }
  }

  const auto [rx, ry] = best_tilt(rules, best->position, hidden_.opening_center);
  const Action action = make_move(rules, *best, rx, ry);
  return Proposal{action, append_step(knowledge, rules, action, summarize_facts(obs.facts))};
}

std::array<Pose, 5> fixed_view_poses(const SceneSpec& scene) {
  const double cx = 0.5 * (scene.table.xmin + scene.table.xmax);
  const double cy = 0.5 * (scene.table.ymin + scene.table.ymax);
  const Vec3 center(cx, cy, 0.0);
  constexpr double kSideHeight = 0.15;

  std::array<Pose, 5> poses;
  poses[0] = look_at_pose(Vec3(cx, scene.table.ymin, kSideHeight), center);  // front
  poses[1] = look_at_pose(Vec3(cx, scene.table.ymax, kSideHeight), center);  // back
  poses[2] = look_at_pose(Vec3(scene.table.xmin, cy, kSideHeight), center);  // left
  poses[3] = look_at_pose(Vec3(scene.table.xmax, cy, kSideHeight), center);  // right
  poses[4].position = Vec3(-0.1, 0.3, 0.8);                                  // top
  poses[4].orientation = top_down_orientation();
  return poses;
}

Answer fixed_views_episode(const SceneSpec& scene, PerceptionAnalyzer& analyzer,
                           const CameraIntrinsics& k) {
  const Query query{scene.query};
  for (const Pose& pose : fixed_view_poses(scene)) {
    EnhancedObservation obs;
    obs.facts = observe(scene, pose, k);
    obs.overlay = project_grid(scene.grid, k, pose);
    obs.image = render(scene, pose, k, obs.overlay);
    const AnalysisResult result = analyzer.analyze(query, obs);
    if (const auto* answer = std::get_if<Answer>(&result); answer && answer->conclusive)
      return *answer;
  }
  return Answer{false, "", 0.0};
}

}  // namespace apsim
