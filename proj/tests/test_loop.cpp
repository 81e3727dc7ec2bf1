// SPDX-License-Identifier: Apache-2.0
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "apsim/loop.hpp"
#include "testutil.hpp"

#include <fstream>

using namespace apsim;

namespace {

struct FixedAnalyzer : PerceptionAnalyzer {
  Answer answer;
  explicit FixedAnalyzer(Answer a) : answer(std::move(a)) {}
  AnalysisResult analyze(const Query&, const EnhancedObservation&) override { return answer; }
  std::string name() const override { return "fixed"; }
};

struct UnavailableAnalyzer : PerceptionAnalyzer {
  AnalysisResult analyze(const Query&, const EnhancedObservation&) override {
    return Unavailable{"endpoint down"};
  }
  std::string name() const override { return "unavailable"; }
};

struct ScriptedPolicy : ActivePerceptionPolicy {
  std::vector<PolicyResult> script;
  size_t at = 0;
  PolicyResult propose(const Pose&, const EnhancedObservation&, const Knowledge& knowledge,
                       const EnhancedObservation*, const ActionSpaceRules& rules) override {
    REQUIRE(at < script.size());
    PolicyResult result = script[at++];
    if (auto* proposal = std::get_if<Proposal>(&result)) {
      // Mirror the bookkeeping a real policy performs.
      Knowledge updated = knowledge;
      StepFact fact;
      fact.step_index = static_cast<int>(knowledge.kappa.size()) + 1;
      fact.pose = action_to_pose(rules, proposal->action);
      fact.vertex = snapped_vertex(rules, proposal->action);
      fact.summary = "scripted";
      updated.kappa.push_back(fact);
      proposal->knowledge = updated;
    }
    return result;
  }
  std::string name() const override { return "scripted"; }
};

Action vertex_action(int i, int j, int k) {
  Action a;
  a.target = GridIndex{i, j, k};
  return a;
}

}  // namespace

TEST_CASE("NAP: one inconclusive analysis from home, no motion") {
  const SceneSpec scene = testutil::upright_cup_scene();
  OracleAnalyzer oracle(scene);
  EpisodeConfig cfg;
  cfg.random_seed = 5;
  const EpisodeResult result =
      run_episode(scene, rules_for(ActionSpaceKind::NAP, scene.grid), oracle, nullptr, cfg);
  CHECK(result.steps.size() == 1);
  CHECK_FALSE(result.final_answer.conclusive);
  CHECK(result.terminated_by == Termination::IterationCap);
  CHECK(result.trajectory.size() == 1);
  CHECK(trajectory_length(result) == 0.0);
}

TEST_CASE("oracle + greedy on 3Dx reaches the truth within the cap") {
  for (const char* fixture : {"perpendicular.json", "inclined.json"}) {
    const SceneSpec scene = testutil::load_fixture(fixture);
    OracleAnalyzer oracle(scene);
    GreedyPolicy greedy(scene);
    EpisodeConfig cfg;
    cfg.random_seed = 11;
    const EpisodeResult result =
        run_episode(scene, rules_for(ActionSpaceKind::ThreeDx, scene.grid), oracle, &greedy, cfg);
    CHECK(result.terminated_by == Termination::ConclusiveAnswer);
    CHECK(result.steps.size() <= 10);
    CHECK(result.final_answer.text == scene.truth_answer);
    CHECK(result.final_answer.confidence >= cfg.confidence_threshold);
  }
}

TEST_CASE("max_iterations = 1 yields exactly one step and no action") {
  const SceneSpec scene = testutil::upright_cup_scene();
  OracleAnalyzer oracle(scene);
  GreedyPolicy greedy(scene);
  EpisodeConfig cfg;
  cfg.max_iterations = 1;
  const EpisodeResult result =
      run_episode(scene, rules_for(ActionSpaceKind::ThreeDx, scene.grid), oracle, &greedy, cfg);
  CHECK(result.steps.size() == 1);
  CHECK_FALSE(result.steps[0].action.has_value());
  CHECK(result.terminated_by == Termination::IterationCap);
}

TEST_CASE("episodes never revisit vertices; segment sums match the trajectory") {
  const SceneSpec scene = testutil::load_fixture("inclined.json");
  OracleAnalyzer oracle(scene);
  for (uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
    RandomPolicy random(seed);
    EpisodeConfig cfg;
    cfg.random_seed = seed;
    cfg.marker_noise_std = 0.001;
    const EpisodeResult result = run_episode(
        scene, rules_for(ActionSpaceKind::ThreeDC, scene.grid), oracle, &random, cfg);

    std::set<GridIndex> seen;
    double sum = 0.0;
    const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDC, scene.grid);
    for (const auto& s : result.steps) {
      sum += s.segment_length;
      if (s.action) CHECK(seen.insert(snapped_vertex(rules, *s.action)).second);
    }
    CHECK(std::abs(sum - trajectory_length(result)) < 1e-9);
    CHECK(result.steps.size() <= static_cast<size_t>(cfg.max_iterations));
    CHECK((result.trajectory.front() - scene.home_pose.position).norm() == 0.0);
  }
}

TEST_CASE("fixed seeds give byte-identical episodes") {
  const SceneSpec scene = testutil::load_fixture("inclined.json");
  auto run_once = [&](uint64_t seed) {
    OracleAnalyzer oracle(scene);
    RandomPolicy random(seed * 7919);
    EpisodeConfig cfg;
    cfg.random_seed = seed;
    cfg.marker_noise_std = 0.002;
    return episode_to_json(run_episode(scene, rules_for(ActionSpaceKind::ThreeDx, scene.grid),
                                       oracle, &random, cfg));
  };
  CHECK(run_once(99) == run_once(99));
  CHECK(run_once(99) != run_once(100));
}

TEST_CASE("conclusive termination honors the confidence threshold") {
  const SceneSpec scene = testutil::upright_cup_scene();
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDD, scene.grid);

  FixedAnalyzer timid(Answer{true, "golf ball", 0.5});
  GreedyPolicy greedy(scene);
  EpisodeConfig cfg;
  cfg.confidence_threshold = 0.8;
  cfg.max_iterations = 3;
  EpisodeResult result = run_episode(scene, rules, timid, &greedy, cfg);
  CHECK(result.terminated_by == Termination::IterationCap);  // 0.5 < 0.8 never terminates

  cfg.confidence_threshold = 0.4;
  result = run_episode(scene, rules, timid, &greedy, cfg);
  CHECK(result.terminated_by == Termination::ConclusiveAnswer);
  CHECK(result.steps.size() == 1);
  CHECK(result.final_answer.confidence >= cfg.confidence_threshold);
}

TEST_CASE("exhaustion surfaces when the whole lattice has been visited") {
  SceneSpec scene = testutil::upright_cup_scene();
  scene.grid.anchor = Vec3(-0.3, 0.1, 0.0);
  scene.grid.extent = Vec3(0.2, 0.2, 0.1);  // 2x2x1 lattice away from the cup
  scene.markers = default_marker_ring(scene.grid);
  validate_scene(scene);
  OracleAnalyzer oracle(scene);
  RandomPolicy random(3);
  EpisodeConfig cfg;
  const EpisodeResult result =
      run_episode(scene, rules_for(ActionSpaceKind::ThreeDD, scene.grid), oracle, &random, cfg);
  CHECK(result.terminated_by == Termination::Exhausted);
  CHECK(result.steps.size() == 5);  // 4 moves then a stranded analysis
}

TEST_CASE("analyzer unavailability ends the episode gracefully") {
  const SceneSpec scene = testutil::upright_cup_scene();
  UnavailableAnalyzer down;
  GreedyPolicy greedy(scene);
  EpisodeConfig cfg;
  const EpisodeResult result =
      run_episode(scene, rules_for(ActionSpaceKind::ThreeDx, scene.grid), down, &greedy, cfg);
  CHECK(result.terminated_by == Termination::AgentUnavailable);
  CHECK(result.steps.size() == 1);
}

TEST_CASE("rejected or invalid proposals consume an iteration without moving") {
  const SceneSpec scene = testutil::upright_cup_scene();
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDD, scene.grid);
  FixedAnalyzer never(Answer{false, "", 0.0});

  ScriptedPolicy policy;
  policy.script.push_back(ProposalRejected{"OutOfBounds"});
  policy.script.push_back(Proposal{vertex_action(0, 0, 1), {}});
  policy.script.push_back(Proposal{vertex_action(0, 0, 1), {}});  // revisit: loop must catch
  policy.script.push_back(Proposal{vertex_action(1, 0, 1), {}});

  EpisodeConfig cfg;
  cfg.max_iterations = 5;
  const EpisodeResult result = run_episode(scene, rules, never, &policy, cfg);
  REQUIRE(result.steps.size() == 5);
  CHECK_FALSE(result.steps[0].action.has_value());
  CHECK(result.steps[0].segment_length == 0.0);
  CHECK(result.steps[1].action.has_value());
  CHECK(result.steps[1].segment_length > 0.0);
  CHECK(result.steps[2].action.has_value());      // recorded but not executed
  CHECK(result.steps[2].segment_length == 0.0);   // no motion on the revisit
  CHECK(result.steps[3].segment_length > 0.0);
  CHECK(result.trajectory.size() == 3);  // home + two real moves
}

TEST_CASE("fixed-views episode record") {
  const SceneSpec scene = testutil::load_fixture("narrow_cone.json");
  OracleAnalyzer oracle(scene);
  EpisodeConfig cfg;
  const EpisodeResult result = run_fixed_views_episode(scene, oracle, cfg);
  CHECK(result.terminated_by == Termination::IterationCap);
  CHECK(result.steps.size() == 5);
  CHECK(result.trajectory.size() == 6);  // home plus the five views
  CHECK_FALSE(result.final_answer.conclusive);
  double sum = 0.0;
  for (const auto& s : result.steps) sum += s.segment_length;
  CHECK(std::abs(sum - trajectory_length(result)) < 1e-9);
}

TEST_CASE("episode logs: write, read, verify, and corruption detection") {
  const SceneSpec scene = testutil::load_fixture("perpendicular.json");
  OracleAnalyzer oracle(scene);
  GreedyPolicy greedy(scene);
  EpisodeConfig cfg;
  cfg.random_seed = 21;
  const ActionSpaceRules rules = rules_for(ActionSpaceKind::ThreeDD, scene.grid);
  const EpisodeResult result = run_episode(scene, rules, oracle, &greedy, cfg);

  EpisodeLogHeader header;
  header.scene_id = scene.id;
  header.space = ActionSpaceKind::ThreeDD;
  header.analyzer = "oracle";
  header.policy = "greedy";
  header.cfg = cfg;
  header.grid = scene.grid;
  header.home_pose = scene.home_pose;

  testutil::TempDir tmp;
  const std::string path = tmp.file("episode.jsonl");
  write_episode_log(path, header, result);

  SUBCASE("round trip preserves the episode and passes verification") {
    const LoadedEpisodeLog loaded = read_episode_log(path);
    CHECK(loaded.complete);
    CHECK(loaded.header.scene_id == scene.id);
    CHECK(loaded.result.steps.size() == result.steps.size());
    CHECK(episode_to_json(loaded.result) == episode_to_json(result));
    CHECK_FALSE(verify_episode_log(loaded).has_value());
  }

  SUBCASE("a log missing its footer reads as interrupted but verifiable") {
    std::ifstream in(path);
    std::string line, kept;
    std::vector<std::string> lines;
    while (std::getline(in, line)) lines.push_back(line);
    std::ofstream out(tmp.file("truncated.jsonl"));
    for (size_t i = 0; i + 1 < lines.size(); ++i) out << lines[i] << "\n";
    out.close();
    const LoadedEpisodeLog loaded = read_episode_log(tmp.file("truncated.jsonl"));
    CHECK_FALSE(loaded.complete);
    CHECK_FALSE(verify_episode_log(loaded).has_value());
  }

  SUBCASE("tampered segment lengths are named by the verifier") {
    LoadedEpisodeLog loaded = read_episode_log(path);
    REQUIRE(loaded.result.steps.size() >= 2);
    loaded.result.steps[1].segment_length += 0.5;
    const auto violation = verify_episode_log(loaded);
    REQUIRE(violation.has_value());
    CHECK(violation->find("segment_length") != std::string::npos);
  }

  SUBCASE("garbage lines raise LogError") {
    std::ofstream(tmp.file("bad.jsonl")) << "{\"type\": \"header\"\n";
    CHECK_THROWS_AS(read_episode_log(tmp.file("bad.jsonl")), LogError);
  }
}

TEST_CASE("greedy reaches a conclusive answer within 10 steps on random solvable scenes") {
  std::mt19937_64 rng(2024);
  for (int it = 0; it < 20; ++it) {
    const SceneSpec scene = testutil::random_scene(rng);
    OracleAnalyzer oracle(scene);
    GreedyPolicy greedy(scene);
    EpisodeConfig cfg;
    cfg.random_seed = it;
    const EpisodeResult result =
        run_episode(scene, rules_for(ActionSpaceKind::ThreeDx, scene.grid), oracle, &greedy, cfg);
    CHECK(result.terminated_by == Termination::ConclusiveAnswer);
    CHECK(result.steps.size() <= 10);
  }
}
