#pragma once

#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "socmab/analysis.hpp"
#include "socmab/errors.hpp"
#include "socmab/json_io.hpp"
#include "socmab/platform.hpp"

namespace socmab::api {

using nlohmann::json;

enum class ErrorCode { NotFound, Conflict, Validation, Sequencing, Unauthorized, Internal };

constexpr std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::Conflict: return "Conflict";
    case ErrorCode::Validation: return "Validation";
    case ErrorCode::Sequencing: return "Sequencing";
    case ErrorCode::Unauthorized: return "Unauthorized";
    case ErrorCode::Internal: return "Internal";
  }
  return "Internal";
}

constexpr int http_status(ErrorCode c) {
  switch (c) {
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict: return 409;
    case ErrorCode::Sequencing: return 409;
    case ErrorCode::Validation: return 422;
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::Internal: return 500;
  }
  return 500;
}

struct Request {
  std::string method;
  std::string path;
  std::string body;
  std::string authorization;  // raw Authorization header value
};

struct Response {
  int status = 200;
  json body = json::object();
};

inline Response error_response(ErrorCode code, const std::string& message, json detail = json::object()) {
  return {http_status(code), json{{"code", to_string(code)}, {"message", message}, {"detail", std::move(detail)}}};
}

/// HTTP-independent router over a StudyPlatform. Requests are serialized on one lock;
/// every mutation has been appended to the event store before a response is built.
class Service {
 public:
  Service(StudyPlatform& platform, std::string token = {})
      : platform_(platform), token_(std::move(token)) {}

  Response handle(const Request& req) {
    if (!token_.empty() && req.authorization != "Bearer " + token_)
      return error_response(ErrorCode::Unauthorized, "missing or invalid bearer token");
    std::lock_guard lock(mutex_);
    try {
      return route(req);
    } catch (const NotFoundError& e) {
      return error_response(ErrorCode::NotFound, e.what());
    } catch (const ConflictError& e) {
      return error_response(ErrorCode::Conflict, e.what());
    } catch (const SequencingError& e) {
      return error_response(ErrorCode::Sequencing, e.what(), sequencing_detail(req));
    } catch (const ValidationError& e) {
      return error_response(ErrorCode::Validation, e.what());
    } catch (const DomainError& e) {
      return error_response(ErrorCode::Validation, e.what());
    } catch (const json::exception& e) {
      return error_response(ErrorCode::Validation, std::string("malformed request body: ") + e.what());
    } catch (const std::exception& e) {
      return error_response(ErrorCode::Internal, e.what());
    }
  }

  const StudyPlatform& platform() const { return platform_; }

 private:
  static std::vector<std::string_view> segments(std::string_view path) {
    std::vector<std::string_view> out;
    if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
    std::size_t start = 0;
    while (start < path.size()) {
      auto slash = path.find('/', start);
      if (slash == std::string_view::npos) slash = path.size();
      if (slash > start) out.push_back(path.substr(start, slash - start));
      start = slash + 1;
    }
    return out;
  }

  static json parse_body(const Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body);
    if (!j.is_object()) throw ValidationError("request body must be a JSON object");
    return j;
  }

  static std::string require_string(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_string() || it->get<std::string>().empty())
      throw ValidationError(std::string("field '") + key + "' must be a non-empty string");
    return it->get<std::string>();
  }

  static std::int64_t require_integer(const json& body, const char* key) {
    auto it = body.find(key);
    if (it == body.end() || !it->is_number_integer())
      throw ValidationError(std::string("field '") + key + "' must be an integer");
    return it->get<std::int64_t>();
  }

  static int require_likert(const json& body) {
    const auto v = require_integer(body, "value");
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max())
      throw ValidationError("motivation outside Likert range");
    return static_cast<int>(v);
  }

  json sequencing_detail(const Request& req) const {
    const auto seg = segments(req.path);
    if (seg.size() >= 3 && seg[1] == "sessions") {
      auto it = platform_.sessions().find(std::string(seg[2]));
      if (it != platform_.sessions().end())
        return json{{"state", to_string(it->second.state)}, {"reason", "Sequencing"}};
    }
    return json{{"reason", "Sequencing"}};
  }

  json session_json(const DailySession& s) const {
    json cards = json::array();
    for (const auto& c : s.cards) cards.push_back(card_summary(c));
    return json{{"session_id", s.session_id},
                {"participant_id", s.participant_id},
                {"day_index", s.day_index},
                {"date", s.date.iso()},
                {"state", to_string(s.state)},
                {"pre_motivation", s.pre_motivation ? json(*s.pre_motivation) : json(nullptr)},
                {"post_motivation", s.post_motivation ? json(*s.post_motivation) : json(nullptr)},
                {"selection", s.selection ? json(*s.selection) : json(nullptr)},
                {"cards", cards}};
  }

  static json section_json(const ProfileCard& c, const std::string& section) {
    if (section == "steps")
      return json{{"displayed_steps", c.displayed_steps},
                  {"average_distance_km", c.attributes.average_distance_km},
                  {"gym_minutes_per_week", c.attributes.gym_minutes_per_week}};
    return json{{"preferred_activities", c.attributes.preferred_activities},
                {"hobbies", c.attributes.hobbies},
                {"exercise_location", c.attributes.exercise_location},
                {"favorite_spot", c.attributes.favorite_spot}};
  }

  Response route(const Request& req) {
    const auto seg = segments(req.path);
    const std::string& m = req.method;
    if (seg.size() < 2 || seg[0] != "v1") return error_response(ErrorCode::NotFound, "no such route");

    if (seg[1] == "participants") {
      if (seg.size() == 2 && m == "POST") {
        const json body = parse_body(req);
        const auto& p = platform_.enroll(require_string(body, "external_id"), require_string(body, "gender"));
        return {201, json{{"participant_id", p.participant_id}, {"condition", to_string(p.condition)}}};
      }
      if (seg.size() == 4 && m == "POST") {
        const std::string pid(seg[2]);
        const json body = parse_body(req);
        if (seg[3] == "steps") {
          const Date date = parse_date_or_throw(require_string(body, "date"));
          const auto steps = require_integer(body, "steps");
          const auto ack = platform_.ingest_steps(pid, date, steps);
          return {202, json{{"participant_id", pid},
                            {"date", date.iso()},
                            {"steps", steps},
                            {"overwrote", ack.overwrote},
                            {"finalized_session", ack.finalized_session ? json(*ack.finalized_session)
                                                                        : json(nullptr)}}};
        }
        if (seg[3] == "sessions") {
          const Date date = parse_date_or_throw(require_string(body, "date"));
          const auto& s = platform_.start_session(pid, date);
          return {201, json{{"session_id", s.session_id}, {"day_index", s.day_index}}};
        }
      }
    } else if (seg[1] == "sessions" && seg.size() >= 3) {
      const std::string sid(seg[2]);
      if (seg.size() == 3 && m == "GET") return {200, session_json(platform_.session(sid))};
      if (seg.size() == 4 && seg[3] == "cards" && m == "GET") {
        const auto& cards = platform_.issue_cards(sid);
        const auto& s = platform_.session(sid);
        json out = json::array();
        for (const auto& c : cards) out.push_back(card_summary(c));
        return {200, json{{"session_id", sid},
                          {"previous_day_steps", s.reference_steps ? json(*s.reference_steps) : json(nullptr)},
                          {"cards", out}}};
      }
      if (seg.size() == 5 && seg[3] == "motivation" && m == "POST") {
        const json body = parse_body(req);
        const int value = require_likert(body);
        if (seg[4] == "pre") {
          const auto& s = platform_.rate_pre(sid, value);
          return {200, json{{"session_id", sid}, {"state", to_string(s.state)}}};
        }
        if (seg[4] == "post") {
          const auto& s = platform_.rate_post(sid, value);
          return {200, json{{"session_id", sid}, {"state", to_string(s.state)}}};
        }
      }
      if (seg.size() == 4 && m == "POST") {
        const json body = parse_body(req);
        if (seg[3] == "preview") {
          const std::string card_id = require_string(body, "card_id");
          const auto& s = platform_.preview(sid, card_id);
          return {200, json{{"session_id", sid}, {"card", card_summary(*s.card(card_id))}}};
        }
        if (seg[3] == "select") {
          const auto& card = platform_.select(sid, require_string(body, "card_id"));
          return {200, json{{"session_id", sid}, {"profile", card}}};
        }
        if (seg[3] == "unlock") {
          const std::string section = require_string(body, "section");
          const auto& s = platform_.unlock(sid, section);
          return {200, json{{"session_id", sid}, {"section", section},
                            {"content", section_json(*s.selected_card(), section)}}};
        }
      }
    } else if (seg[1] == "analysis" && seg.size() == 3 && seg[2] == "report" && m == "GET") {
      const auto rows = analysis::rows_from_platform(platform_);
      return {200, analysis::to_json(
                       analysis::analyze(rows, std::nullopt, analysis::options_for(platform_.config())))};
    }
    return error_response(ErrorCode::NotFound, "no such route: " + m + " " + req.path);
  }

  StudyPlatform& platform_;
  std::string token_;
  std::mutex mutex_;
};

}  // namespace socmab::api
