#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "socmab/date.hpp"
#include "socmab/errors.hpp"

namespace socmab {

enum class EventKind : std::uint8_t {
  Enrolled,
  ArmChosen,
  CardsShown,
  PreMotivation,
  Preview,
  Selected,
  Unlock,
  PostMotivation,
  StepsIngested,
  Finalized,
};

constexpr std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Enrolled: return "Enrolled";
    case EventKind::ArmChosen: return "ArmChosen";
    case EventKind::CardsShown: return "CardsShown";
    case EventKind::PreMotivation: return "PreMotivation";
    case EventKind::Preview: return "Preview";
    case EventKind::Selected: return "Selected";
    case EventKind::Unlock: return "Unlock";
    case EventKind::PostMotivation: return "PostMotivation";
    case EventKind::StepsIngested: return "StepsIngested";
    case EventKind::Finalized: return "Finalized";
  }
  return "?";
}

inline std::optional<EventKind> parse_event_kind(std::string_view s) {
  for (int i = 0; i <= static_cast<int>(EventKind::Finalized); ++i) {
    const auto k = static_cast<EventKind>(i);
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct Event {
  std::uint64_t sequence_no = 0;  // assigned by the store
  std::string participant_id;
  std::optional<int> day_index;
  EventKind kind = EventKind::Enrolled;
  nlohmann::json payload = nlohmann::json::object();
  Timestamp timestamp{};

  friend bool operator==(const Event&, const Event&) = default;
};

namespace detail {

enum class Field { String, Integer, Unsigned, Number, Bool, Array };

inline bool has_field(const nlohmann::json& p, const char* key, Field type) {
  auto it = p.find(key);
  if (it == p.end()) return false;
  switch (type) {
    case Field::String: return it->is_string();
    case Field::Integer: return it->is_number_integer();
    case Field::Unsigned: return it->is_number_unsigned() || (it->is_number_integer() && *it >= 0);
    case Field::Number: return it->is_number();
    case Field::Bool: return it->is_boolean();
    case Field::Array: return it->is_array();
  }
  return false;
}

}  // namespace detail

/// Throws ValidationError if the payload lacks a field the kind requires.
inline void validate_event(const Event& e) {
  using detail::Field;
  if (e.participant_id.empty()) throw ValidationError("event without participant_id");
  if (!e.payload.is_object()) throw ValidationError("event payload must be an object");
  auto need = [&](const char* key, Field type) {
    if (!detail::has_field(e.payload, key, type))
      throw ValidationError(std::string(to_string(e.kind)) + " payload: missing or mistyped '" +
                            key + "'");
  };
  auto need_day = [&] {
    if (!e.day_index || *e.day_index < 1)
      throw ValidationError(std::string(to_string(e.kind)) + " event requires a day_index");
  };
  switch (e.kind) {
    case EventKind::Enrolled:
      need("external_id", Field::String);
      need("gender", Field::String);
      need("condition", Field::String);
      need("ordinal", Field::Unsigned);
      need("baseline_schedule", Field::Array);
      need("enrolled_on", Field::String);
      break;
    case EventKind::ArmChosen:
      need_day();
      need("session_id", Field::String);
      need("date", Field::String);
      need("arm", Field::String);
      break;
    case EventKind::CardsShown:
      need_day();
      need("session_id", Field::String);
      need("cards", Field::Array);
      need("reference_steps", Field::Unsigned);
      if (e.payload.at("cards").size() != 4) throw ValidationError("CardsShown needs 4 cards");
      break;
    case EventKind::PreMotivation:
    case EventKind::PostMotivation:
      need_day();
      need("session_id", Field::String);
      need("value", Field::Integer);
      break;
    case EventKind::Preview:
    case EventKind::Selected:
      need_day();
      need("session_id", Field::String);
      need("card_id", Field::String);
      break;
    case EventKind::Unlock:
      need_day();
      need("session_id", Field::String);
      need("section", Field::String);
      break;
    case EventKind::StepsIngested:
      need("date", Field::String);
      need("steps", Field::Unsigned);
      need("source", Field::String);
      break;
    case EventKind::Finalized:
      need_day();
      need("session_id", Field::String);
      need("steps", Field::Unsigned);
      need("wear", Field::Bool);
      need("reward", Field::Number);
      break;
  }
}

inline nlohmann::json event_to_json(const Event& e) {
  return nlohmann::json{
      {"seq", e.sequence_no},
      {"participant_id", e.participant_id},
      {"day_index", e.day_index ? nlohmann::json(*e.day_index) : nlohmann::json(nullptr)},
      {"kind", to_string(e.kind)},
      {"ts", format_timestamp(e.timestamp)},
      {"payload", e.payload}};
}

inline Event event_from_json(const nlohmann::json& j) {
  Event e;
  e.sequence_no = j.at("seq").get<std::uint64_t>();
  e.participant_id = j.at("participant_id").get<std::string>();
  if (!j.at("day_index").is_null()) e.day_index = j.at("day_index").get<int>();
  const auto kind = parse_event_kind(j.at("kind").get<std::string>());
  if (!kind) throw ValidationError("unknown event kind");
  e.kind = *kind;
  const auto ts = parse_timestamp(j.at("ts").get<std::string>());
  if (!ts) throw ValidationError("bad event timestamp");
  e.timestamp = *ts;
  e.payload = j.at("payload");
  return e;
}

/// Append-only event log. With a file path, every append is written as one JSON line
/// and flushed before returning; reopening the file restores the log and continues
/// the sequence.
class EventStore {
 public:
  EventStore() = default;

  explicit EventStore(std::filesystem::path file) : path_(std::move(file)) {
    if (std::filesystem::exists(*path_)) {
      std::ifstream in(*path_, std::ios::binary);
      if (!in) throw ConfigError("cannot read event log: " + path_->string());
      std::string line;
      std::size_t n = 0;
      while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        try {
          Event e = event_from_json(nlohmann::json::parse(line));
          validate_event(e);
          if (e.sequence_no != events_.size() + 1)
            throw ValidationError("sequence gap at " + std::to_string(e.sequence_no));
          events_.push_back(std::move(e));
        } catch (const std::exception& ex) {
          throw ParseError(std::string("event log ") + path_->string() + ": " + ex.what(), n);
        }
      }
    } else if (path_->has_parent_path()) {
      std::filesystem::create_directories(path_->parent_path());
    }
    out_.open(*path_, std::ios::binary | std::ios::app);
    if (!out_) throw ConfigError("cannot open event log for append: " + path_->string());
  }

  EventStore(const EventStore&) = delete;
  EventStore& operator=(const EventStore&) = delete;

  /// Validates, assigns the next sequence number and persists. The store is left
  /// untouched when validation fails.
  std::uint64_t append(Event e) {
    validate_event(e);
    e.sequence_no = events_.size() + 1;
    if (path_) {
      out_ << event_to_json(e).dump() << '\n';
      out_.flush();
      if (!out_) throw ConfigError("write to event log failed: " + path_->string());
    }
    events_.push_back(std::move(e));
    return events_.back().sequence_no;
  }

  std::vector<Event> read_stream(std::string_view participant_id) const {
    std::vector<Event> out;
    for (const auto& e : events_)
      if (e.participant_id == participant_id) out.push_back(e);
    return out;
  }

  const std::vector<Event>& events() const { return events_; }

  std::uint64_t next_sequence_no() const { return events_.size() + 1; }

  std::size_t size() const { return events_.size(); }

  const std::optional<std::filesystem::path>& path() const { return path_; }

 private:
  std::optional<std::filesystem::path> path_;
  std::ofstream out_;
  std::vector<Event> events_;
};

}  // namespace socmab
