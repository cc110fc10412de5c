#pragma once

#include <string>

#include <json.hpp>

#include "socmab/arm.hpp"
#include "socmab/bandit.hpp"
#include "socmab/errors.hpp"
#include "socmab/profiles.hpp"

// JSON mappings for the value types that travel through the event log and the API.

namespace socmab {

using nlohmann::json;

// Built key by key: brace-init json copies every nested value, and cards are hot.
inline void to_json(json& j, const ProfileAttributes& a) {
  j = json::object();
  j["age"] = a.age;
  j["sex"] = a.sex;
  j["profession"] = a.profession;
  j["height_cm"] = a.height_cm;
  j["weight_kg"] = a.weight_kg;
  j["gym_minutes_per_week"] = a.gym_minutes_per_week;
  j["preferred_activities"] = a.preferred_activities;
  j["hobbies"] = a.hobbies;
  j["exercise_location"] = a.exercise_location;
  j["favorite_spot"] = a.favorite_spot;
  j["average_distance_km"] = a.average_distance_km;
}

inline void from_json(const json& j, ProfileAttributes& a) {
  j.at("age").get_to(a.age);
  j.at("sex").get_to(a.sex);
  j.at("profession").get_to(a.profession);
  j.at("height_cm").get_to(a.height_cm);
  j.at("weight_kg").get_to(a.weight_kg);
  j.at("gym_minutes_per_week").get_to(a.gym_minutes_per_week);
  j.at("preferred_activities").get_to(a.preferred_activities);
  j.at("hobbies").get_to(a.hobbies);
  j.at("exercise_location").get_to(a.exercise_location);
  j.at("favorite_spot").get_to(a.favorite_spot);
  j.at("average_distance_km").get_to(a.average_distance_km);
}

inline void to_json(json& j, const ProfileCard& c) {
  j = json::object();
  j["card_id"] = c.card_id;
  j["display_name"] = c.display_name;
  j["displayed_steps"] = c.displayed_steps;
  j["true_offset"] = c.true_offset;
  to_json(j["attributes"], c.attributes);
}

inline void from_json(const json& j, ProfileCard& c) {
  j.at("card_id").get_to(c.card_id);
  j.at("display_name").get_to(c.display_name);
  j.at("displayed_steps").get_to(c.displayed_steps);
  j.at("true_offset").get_to(c.true_offset);
  j.at("attributes").get_to(c.attributes);
}

/// What a participant sees on the selection grid: handle and steps only.
inline json card_summary(const ProfileCard& c) {
  return json{{"card_id", c.card_id},
              {"display_name", c.display_name},
              {"displayed_steps", c.displayed_steps}};
}

inline void to_json(json& j, const ArmStats& s) {
  j = json{{"pulls", s.pulls}, {"reward_sum", s.reward_sum}};
}

inline void from_json(const json& j, ArmStats& s) {
  j.at("pulls").get_to(s.pulls);
  j.at("reward_sum").get_to(s.reward_sum);
}

}  // namespace socmab
