// SPDX-License-Identifier: Apache-2.0
#include "apsim/vlmclient.hpp"

#include "apsim/image.hpp"
#include "json_util.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace apsim {

namespace {

using jsonutil::json;

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// Value of "KEY: rest" / "KEY rest" lines; first match wins.
std::optional<std::string> key_line(const std::string& text, const std::string& key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = trim(line);
    if (t.size() < key.size() || t.compare(0, key.size(), key) != 0) continue;
    std::string rest = t.substr(key.size());
    if (!rest.empty() && rest[0] != ':' && rest[0] != ' ' && rest[0] != '\t') continue;
    if (!rest.empty() && rest[0] == ':') rest.erase(0, 1);
    return trim(rest);
  }
  return std::nullopt;
}

std::optional<double> parse_number(const std::string& s) {
  const std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size()) return std::nullopt;
  if (!std::isfinite(v)) return std::nullopt;
  return v;
}

// "(a; b; c)" with optional parens; commas tolerated as separators.
std::optional<std::vector<double>> parse_tuple(std::string s) {
  s = trim(s);
  if (!s.empty() && s.front() == '(') s.erase(0, 1);
  if (!s.empty() && s.back() == ')') s.pop_back();
  std::replace(s.begin(), s.end(), ',', ';');
  std::vector<double> out;
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ';')) {
    const auto v = parse_number(part);
    if (!v) return std::nullopt;
    out.push_back(*v);
  }
  if (out.empty()) return std::nullopt;
  return out;
}

std::optional<int> parse_rotation(const std::string& s) {
  const auto v = parse_number(s);
  if (!v) return std::nullopt;
  const double r = std::round(*v);
  if (std::abs(*v - r) > 1e-9) return std::nullopt;
  return static_cast<int>(r);
}

constexpr const char* kBase64Chars =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<uint8_t>& data) {
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  size_t i = 0;
  while (i + 2 < data.size()) {
    const uint32_t n = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
    out.push_back(kBase64Chars[(n >> 18) & 63]);
    out.push_back(kBase64Chars[(n >> 12) & 63]);
    out.push_back(kBase64Chars[(n >> 6) & 63]);
    out.push_back(kBase64Chars[n & 63]);
    i += 3;
  }
  if (i + 1 == data.size()) {
    const uint32_t n = data[i] << 16;
    out.push_back(kBase64Chars[(n >> 18) & 63]);
    out.push_back(kBase64Chars[(n >> 12) & 63]);
    out += "==";
  } else if (i + 2 == data.size()) {
    const uint32_t n = (data[i] << 16) | (data[i + 1] << 8);
    out.push_back(kBase64Chars[(n >> 18) & 63]);
    out.push_back(kBase64Chars[(n >> 12) & 63]);
    out.push_back(kBase64Chars[(n >> 6) & 63]);
    out += "=";
  }
  return out;
}

std::string image_hash(const std::vector<uint8_t>& png) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a:%016llx",
                static_cast<unsigned long long>(fnv1a64(png.data(), png.size())));
  return buf;
}

struct TransportFailure {
  bool retryable = true;
  std::string detail;
};

struct ParsedUrl {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // "" or "/something"
};

ParsedUrl split_base_url(const std::string& base_url) {
  ParsedUrl out;
  const size_t scheme = base_url.find("://");
  const size_t path = scheme == std::string::npos ? base_url.find('/')
                                                  : base_url.find('/', scheme + 3);
  if (path == std::string::npos) {
    out.origin = base_url;
  } else {
    out.origin = base_url.substr(0, path);
    out.path_prefix = base_url.substr(path);
    while (!out.path_prefix.empty() && out.path_prefix.back() == '/') out.path_prefix.pop_back();
  }
  return out;
}

json build_chat_body(const EndpointConfig& cfg, const PromptBundle& bundle,
                     const std::string& feedback) {
  json content = json::array();
  std::string text = bundle.user_text;
  if (!feedback.empty()) text += "\n\n" + feedback;
  content.push_back({{"type", "text"}, {"text", text}});
  for (const auto& png : bundle.images_png) {
    content.push_back(
        {{"type", "image_url"},
         {"image_url", {{"url", "data:image/png;base64," + base64_encode(png)}}}});
  }
  return json{{"model", cfg.model_name},
              {"temperature", cfg.temperature},
              {"messages", json::array({json{{"role", "system"}, {"content", bundle.system_text}},
                                        json{{"role", "user"}, {"content", content}}})}};
}

std::variant<std::string, TransportFailure> post_chat(const EndpointConfig& cfg,
                                                      const PromptBundle& bundle,
                                                      const std::string& feedback) {
  const ParsedUrl url = split_base_url(cfg.base_url);
  httplib::Client client(url.origin);
  const auto timeout_s = static_cast<time_t>(cfg.timeout_s);
  const auto timeout_us =
      static_cast<time_t>((cfg.timeout_s - static_cast<double>(timeout_s)) * 1e6);
  client.set_connection_timeout(timeout_s, timeout_us);
  client.set_read_timeout(timeout_s, timeout_us);
  client.set_write_timeout(timeout_s, timeout_us);

  httplib::Headers headers;
  if (!cfg.api_key_env_var.empty()) {
    if (const char* key = std::getenv(cfg.api_key_env_var.c_str()); key && *key)
      headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  const std::string body = build_chat_body(cfg, bundle, feedback).dump();
  const auto res = client.Post(url.path_prefix + "/v1/chat/completions", headers, body,
                               "application/json");
  if (!res) return TransportFailure{true, httplib::to_string(res.error())};
  if (res->status >= 200 && res->status < 300) {
    try {
      const json reply = json::parse(res->body);
      return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const json::exception&) {
      // A 2xx body that is not chat-shaped counts as a malformed reply.
      return res->body;
    }
  }
  const bool retryable = res->status == 408 || res->status == 429 || res->status >= 500;
  return TransportFailure{retryable, "HTTP " + std::to_string(res->status)};
}

const char* kAnalysisFormat =
    "Reply with exactly these three lines and nothing else:\n"
    "ANSWERABLE: yes or no\n"
    "ANSWER: <short answer, empty only when ANSWERABLE is no>\n"
    "CONFIDENCE: <number between 0 and 1>";

std::string action_format(const ActionSpaceRules& rules) {
  std::ostringstream out;
  out << "Reply with exactly these lines and nothing else:\n";
  if (rules.allows_continuous)
    out << "TARGET: (x; y; z)  — a point inside the workspace, meters\n";
  else if (rules.grid.dimensionality == GridDimensionality::TwoD)
    out << "VERTEX: (x; y)  — the label of an unvisited grid vertex\n";
  else
    out << "VERTEX: (x; y; z)  — the coordinates of an unvisited grid vertex, meters\n";
  if (rules.allows_rot_x) out << "ROT_X: -35, 0 or 35\n";
  if (rules.allows_rot_y) out << "ROT_Y: -35, 0 or 35\n";
  return out.str();
}

std::string coord_label(const Vec3& p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(%.1f; %.1f; %.1f)", p.x(), p.y(), p.z());
  return buf;
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

std::string first_line(const std::string& s, size_t max_len = 120) {
  std::string out = s.substr(0, s.find('\n'));
  if (out.size() > max_len) out = out.substr(0, max_len);
  return out;
}

}  // namespace

std::optional<Answer> parse_analysis_reply(const std::string& text) {
  const auto answerable = key_line(text, "ANSWERABLE");
  const auto answer_text = key_line(text, "ANSWER");
  const auto confidence = key_line(text, "CONFIDENCE");
  if (!answerable || !confidence) return std::nullopt;

  const std::string flag = lower(*answerable);
  if (flag != "yes" && flag != "no") return std::nullopt;
  const auto conf = parse_number(*confidence);
  if (!conf || *conf < 0.0 || *conf > 1.0) return std::nullopt;

  Answer out;
  out.conclusive = flag == "yes";
  out.text = answer_text ? *answer_text : "";
  out.confidence = *conf;
  if (out.conclusive && out.text.empty()) return std::nullopt;
  return out;
}

std::optional<ActionProposal> parse_action_reply(const std::string& text) {
  const auto target = key_line(text, "TARGET");
  const auto vertex = key_line(text, "VERTEX");
  if (static_cast<bool>(target) == static_cast<bool>(vertex)) return std::nullopt;

  ActionProposal out;
  out.raw_text = text;
  if (target) {
    const auto coords = parse_tuple(*target);
    if (!coords || coords->size() != 3) return std::nullopt;
    out.kind = ActionProposal::Kind::Target;
    out.coords = *coords;
  } else {
    const auto coords = parse_tuple(*vertex);
    if (!coords || (coords->size() != 2 && coords->size() != 3)) return std::nullopt;
    out.kind = ActionProposal::Kind::Vertex;
    out.coords = *coords;
  }
  if (const auto rx = key_line(text, "ROT_X")) {
    const auto v = parse_rotation(*rx);
    if (!v) return std::nullopt;
    out.rot_x_deg = *v;
  }
  if (const auto ry = key_line(text, "ROT_Y")) {
    const auto v = parse_rotation(*ry);
    if (!v) return std::nullopt;
    out.rot_y_deg = *v;
  }
  return out;
}

std::variant<Action, Rejection> resolve_proposal(const ActionProposal& proposal,
                                                 const ActionSpaceRules& rules,
                                                 const std::set<GridIndex>& visited) {
  Action action;
  action.rot_x_deg = proposal.rot_x_deg;
  action.rot_y_deg = proposal.rot_y_deg;
  if (proposal.kind == ActionProposal::Kind::Target) {
    action.target = Vec3(proposal.coords[0], proposal.coords[1], proposal.coords[2]);
  } else {
    const double z = proposal.coords.size() == 3
                         ? proposal.coords[2]
                         : rules.grid.anchor.z() + rules.grid.spacing_z;
    const Vec3 stated(proposal.coords[0], proposal.coords[1], z);
    if (!point_in_cube(rules.grid, stated))
      return Rejection{RejectReason::OutOfBounds, "vertex label lies outside the grid"};
    const GridVertex nearest = nearest_vertex(rules.grid, stated);
    const double snap_tol = 0.5 * std::min(rules.grid.spacing_xy, rules.grid.spacing_z) + 1e-6;
    if ((nearest.position - stated).norm() > snap_tol)
      return Rejection{RejectReason::OutOfBounds, "coordinates do not name a grid vertex"};
    action.target = nearest.index;
  }
  if (const auto rejection = validate(rules, action, visited)) return *rejection;
  return action;
}

std::string render_system_prompt(const InitialContext& eta) {
  std::ostringstream out;
  out << "You control a robot arm with a wrist camera inspecting a tabletop scene. "
      << eta.goal_statement << "\n"
      << eta.rules_text << "\n"
      << "Workspace bounds in the robot base frame, meters: x in ["
      << eta.workspace_min.x() << ", " << eta.workspace_max.x() << "], y in ["
      << eta.workspace_min.y() << ", " << eta.workspace_max.y() << "], z in ["
      << eta.workspace_min.z() << ", " << eta.workspace_max.z() << "].\n"
      << "Images are augmented with a virtual grid; vertex labels \"(x; y)\" are "
         "base-frame meters.";
  return out.str();
}

PromptBundle make_analysis_bundle(const Query& query, const InitialContext& eta,
                                  const EnhancedObservation& obs) {
  PromptBundle bundle;
  bundle.system_text = render_system_prompt(eta);
  bundle.user_text = "Query: " + query.text + "\n\n" + kAnalysisFormat;
  bundle.images_png.push_back(encode_png(obs.image));
  return bundle;
}

PromptBundle make_action_bundle(const Query& query, const Knowledge& knowledge,
                                const ActionSpaceRules& rules, const EnhancedObservation& obs,
                                const EnhancedObservation* home_obs) {
  PromptBundle bundle;
  bundle.system_text = render_system_prompt(knowledge.eta);
  std::ostringstream user;
  user << "Query: " << query.text << "\n";
  user << "The current view did not answer the query. Choose the next camera move.\n";
  if (knowledge.kappa.empty()) {
    user << "No vertices visited yet.\n";
  } else {
    user << "Visited vertices (do not revisit): ";
    for (size_t i = 0; i < knowledge.kappa.size(); ++i) {
      if (i) user << ", ";
      user << coord_label(knowledge.kappa[i].pose.position);
    }
    user << "\n";
  }
  if (home_obs != nullptr)
    user << "The second image is the initial observation from the home pose.\n";
  user << "\n" << action_format(rules);
  bundle.user_text = user.str();
  bundle.images_png.push_back(encode_png(obs.image));
  if (home_obs != nullptr) bundle.images_png.push_back(encode_png(home_obs->image));
  return bundle;
}

TranscriptRecorder::TranscriptRecorder(std::string path, std::string episode_id)
    : path_(std::move(path)), episode_id_(std::move(episode_id)) {
  std::ofstream f(path_, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open transcript: " + path_);
  const json header{{"type", "header"},
                    {"episode", episode_id_},
                    {"template", kPromptTemplateVersion}};
  f << header.dump() << "\n";
}

void TranscriptRecorder::record_exchange(const std::string& kind, const PromptBundle& bundle,
                                         const std::string& appended_feedback,
                                         const std::string& raw_reply,
                                         const std::string& status) {
  std::ofstream f(path_, std::ios::app);
  if (!f) throw std::runtime_error("cannot append to transcript: " + path_);
  json images = json::array();
  for (const auto& png : bundle.images_png) images.push_back(image_hash(png));
  json entry{{"type", "exchange"},
             {"episode", episode_id_},
             {"seq", ++seq_},
             {"kind", kind},
             {"template", kPromptTemplateVersion},
             {"request",
              {{"system", bundle.system_text},
               {"user", bundle.user_text},
               {"feedback", appended_feedback},
               {"images", images}}},
             {"raw_reply", raw_reply},
             {"status", status},
             {"parsed", parsed_reply_to_json(kind, raw_reply)}};
  f << entry.dump() << "\n";
}

std::string parsed_reply_to_json(const std::string& kind, const std::string& raw_reply) {
  if (kind == "analysis") {
    const auto answer = parse_analysis_reply(raw_reply);
    return answer ? jsonutil::answer_to(*answer).dump() : "";
  }
  const auto proposal = parse_action_reply(raw_reply);
  if (!proposal) return "";
  json j{{"kind", proposal->kind == ActionProposal::Kind::Target ? "target" : "vertex"},
         {"coords", proposal->coords},
         {"rot_x", proposal->rot_x_deg},
         {"rot_y", proposal->rot_y_deg}};
  return j.dump();
}

std::vector<TranscriptEntry> read_transcript(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open transcript: " + path);
  std::vector<TranscriptEntry> out;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    const json j = json::parse(line);
    if (j.at("type").get<std::string>() != "exchange") continue;
    TranscriptEntry e;
    e.seq = j.at("seq").get<int>();
    e.kind = j.at("kind").get<std::string>();
    e.status = j.at("status").get<std::string>();
    e.raw_reply = j.at("raw_reply").get<std::string>();
    e.parsed_json = j.at("parsed").get<std::string>();
    out.push_back(std::move(e));
  }
  return out;
}

std::variant<AnalysisOutcome, Unavailable> request_analysis(const EndpointConfig& cfg,
                                                            const PromptBundle& bundle,
                                                            TranscriptRecorder* recorder) {
  std::string feedback;
  bool last_was_transport = false;
  std::string transport_detail;
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const auto wire = post_chat(cfg, bundle, feedback);
    if (const auto* failure = std::get_if<TransportFailure>(&wire)) {
      last_was_transport = true;
      transport_detail = failure->detail;
      if (recorder)
        recorder->record_exchange("analysis", bundle, feedback, "",
                                  "transport:" + failure->detail);
      if (!failure->retryable) break;
      continue;
    }
    const std::string& reply = std::get<std::string>(wire);
    const auto answer = parse_analysis_reply(reply);
    if (!answer) {
      last_was_transport = false;
      if (recorder) recorder->record_exchange("analysis", bundle, feedback, reply, "malformed");
      feedback = std::string("Your previous reply did not follow the required format. ") +
                 kAnalysisFormat;
      continue;
    }
    if (recorder) recorder->record_exchange("analysis", bundle, feedback, reply, "ok");
    return AnalysisOutcome{*answer, false};
  }
  if (last_was_transport) return Unavailable{transport_detail};
  return AnalysisOutcome{Answer{false, "", 0.0}, true};
}

std::variant<ActionProposal, ActionRejected, Unavailable> request_action(
    const EndpointConfig& cfg, const PromptBundle& bundle, const ActionSpaceRules& rules,
    const std::set<GridIndex>& visited, TranscriptRecorder* recorder) {
  std::string feedback;
  bool last_was_transport = false;
  std::string transport_detail;
  std::string last_rejection = "malformed reply";
  const int attempts = cfg.max_retries + 1;
  for (int attempt = 0; attempt < attempts; ++attempt) {
    const auto wire = post_chat(cfg, bundle, feedback);
    if (const auto* failure = std::get_if<TransportFailure>(&wire)) {
      last_was_transport = true;
      transport_detail = failure->detail;
      if (recorder)
        recorder->record_exchange("action", bundle, feedback, "", "transport:" + failure->detail);
      if (!failure->retryable) break;
      continue;
    }
    const std::string& reply = std::get<std::string>(wire);
    last_was_transport = false;
    const auto proposal = parse_action_reply(reply);
    if (!proposal) {
      if (recorder) recorder->record_exchange("action", bundle, feedback, reply, "malformed");
      last_rejection = "malformed reply";
      feedback = "Your previous reply did not follow the required format. " +
                 action_format(rules);
      continue;
    }
    const auto resolved = resolve_proposal(*proposal, rules, visited);
    if (const auto* rejection = std::get_if<Rejection>(&resolved)) {
      const std::string reason = to_string(rejection->reason);
      if (recorder)
        recorder->record_exchange("action", bundle, feedback, reply, "rejected:" + reason);
      last_rejection = reason;
      feedback = "Your previous proposal was rejected: " + reason + " (" + rejection->detail +
                 "). Choose a different action.\n" + action_format(rules);
      continue;
    }
    if (recorder) recorder->record_exchange("action", bundle, feedback, reply, "ok");
    return *proposal;
  }
  if (last_was_transport) return Unavailable{transport_detail};
  return ActionRejected{last_rejection};
}

VlmAnalyzer::VlmAnalyzer(EndpointConfig cfg, InitialContext eta, TranscriptRecorder* recorder)
    : cfg_(std::move(cfg)), eta_(std::move(eta)), recorder_(recorder) {}

AnalysisResult VlmAnalyzer::analyze(const Query& query, const EnhancedObservation& obs) {
  const PromptBundle bundle = make_analysis_bundle(query, eta_, obs);
  const auto result = request_analysis(cfg_, bundle, recorder_);
  if (const auto* unavailable = std::get_if<Unavailable>(&result)) return *unavailable;
  return std::get<AnalysisOutcome>(result).answer;
}

VlmPolicy::VlmPolicy(EndpointConfig cfg, Query query, TranscriptRecorder* recorder)
    : cfg_(std::move(cfg)), query_(std::move(query)), recorder_(recorder) {}

PolicyResult VlmPolicy::propose(const Pose& /*current*/, const EnhancedObservation& obs,
                                const Knowledge& knowledge, const EnhancedObservation* home_obs,
                                const ActionSpaceRules& rules) {
  const std::set<GridIndex> visited = visited_vertices(knowledge);
  if (visited.size() >= generate_vertices(rules.grid).size()) return Exhausted{};

  const PromptBundle bundle = make_action_bundle(query_, knowledge, rules, obs, home_obs);
  const auto result = request_action(cfg_, bundle, rules, visited, recorder_);
  if (const auto* unavailable = std::get_if<Unavailable>(&result))
    return Unavailable{unavailable->detail};
  if (const auto* rejected = std::get_if<ActionRejected>(&result))
    return ProposalRejected{rejected->reason};

  const auto& proposal = std::get<ActionProposal>(result);
  const auto resolved = resolve_proposal(proposal, rules, visited);
  const Action action = std::get<Action>(resolved);
  return Proposal{action,
                  append_step(knowledge, rules, action, "vlm: " + first_line(proposal.raw_text))};
}

}  // namespace apsim
