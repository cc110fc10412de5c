#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "socmab/arm.hpp"
#include "socmab/errors.hpp"

namespace socmab {

/// Profile step offsets relative to the participant's reference steps, one row per arm.
inline constexpr std::array<std::array<double, 4>, kArmCount> kOffsetTable{{
    {-0.40, -0.30, -0.20, -0.10},  // Downward
    {-0.20, -0.10, +0.10, +0.20},  // Mixed
    {+0.10, +0.20, +0.30, +0.40},  // Upward
}};

/// Half-width of the multiplicative obfuscation noise on displayed steps.
inline constexpr double kObfuscation = 0.02;

/// Reference steps below this are a non-wear day and cannot anchor a profile set.
inline constexpr std::uint64_t kMinReferenceSteps = 100;

constexpr const std::array<double, 4>& offsets_for_arm(ArmId arm) {
  return kOffsetTable[arm_index(arm)];
}

struct ProfileAttributes {
  int age = 0;
  std::string sex;
  std::string profession;
  int height_cm = 0;
  int weight_kg = 0;
  int gym_minutes_per_week = 0;
  std::vector<std::string> preferred_activities;
  std::vector<std::string> hobbies;
  std::string exercise_location;
  std::string favorite_spot;
  double average_distance_km = 0.0;

  friend bool operator==(const ProfileAttributes&, const ProfileAttributes&) = default;
};

struct ProfileCard {
  std::string card_id;
  std::string display_name;
  std::uint64_t displayed_steps = 0;
  double true_offset = 0.0;
  ProfileAttributes attributes;

  friend bool operator==(const ProfileCard&, const ProfileCard&) = default;
};

template <class T>
struct Range {
  T lo{};
  T hi{};
};

/// Curated value pools the attribute sampler draws from. Loaded from a plain-text
/// file of `field: value | value | ...` lines; numeric fields take `lo..hi`.
struct AttributePool {
  Range<int> age{18, 70};
  Range<int> height_cm{145, 200};
  Range<int> weight_kg{45, 120};
  Range<double> bmi{18.5, 30.0};
  Range<int> gym_minutes_per_week{0, 420};
  Range<double> average_distance_km{0.5, 15.0};
  std::vector<std::string> sex;
  std::vector<std::string> profession;
  std::vector<std::string> activities;
  std::vector<std::string> hobbies;
  std::vector<std::string> exercise_location;
  std::vector<std::string> favorite_spot;

  void validate() const {
    auto need = [](const std::vector<std::string>& v, const char* name, std::size_t at_least) {
      if (v.size() < at_least)
        throw ConfigError(std::string("attribute pool field '") + name + "' needs at least " +
                          std::to_string(at_least) + " value(s)");
    };
    need(sex, "sex", 1);
    need(profession, "profession", 1);
    need(activities, "preferred_activities", 2);
    need(hobbies, "hobbies", 2);
    need(exercise_location, "exercise_location", 1);
    need(favorite_spot, "favorite_spot", 1);
    if (age.lo < 18 || age.hi < age.lo) throw ConfigError("attribute pool: age must be >= 18");
    if (height_cm.lo < 145 || height_cm.hi > 200 || height_cm.hi < height_cm.lo)
      throw ConfigError("attribute pool: height must lie in 145..200 cm");
    if (weight_kg.lo < 45 || weight_kg.hi > 120 || weight_kg.hi < weight_kg.lo)
      throw ConfigError("attribute pool: weight must lie in 45..120 kg");
    if (!(bmi.lo > 0 && bmi.hi >= bmi.lo)) throw ConfigError("attribute pool: bad bmi range");
    if (gym_minutes_per_week.lo < 0 || gym_minutes_per_week.hi < gym_minutes_per_week.lo)
      throw ConfigError("attribute pool: bad gym_time range");
    if (!(average_distance_km.lo >= 0 && average_distance_km.hi >= average_distance_km.lo))
      throw ConfigError("attribute pool: bad average_distance range");
  }

  static AttributePool defaults();
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_values(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, '|')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <class T>
Range<T> parse_range(const std::string& value, const std::string& key, std::size_t line) {
  const auto dots = value.find("..");
  if (dots == std::string::npos) throw ParseError("field '" + key + "' expects lo..hi", line);
  try {
    std::size_t used = 0;
    Range<T> r;
    const std::string lo = trim(value.substr(0, dots)), hi = trim(value.substr(dots + 2));
    if constexpr (std::is_integral_v<T>) {
      r.lo = static_cast<T>(std::stol(lo, &used));
      if (used != lo.size()) throw std::invalid_argument(lo);
      r.hi = static_cast<T>(std::stol(hi, &used));
      if (used != hi.size()) throw std::invalid_argument(hi);
    } else {
      r.lo = static_cast<T>(std::stod(lo, &used));
      if (used != lo.size()) throw std::invalid_argument(lo);
      r.hi = static_cast<T>(std::stod(hi, &used));
      if (used != hi.size()) throw std::invalid_argument(hi);
    }
    return r;
  } catch (const std::logic_error&) {
    throw ParseError("field '" + key + "' has a non-numeric range", line);
  }
}

}  // namespace detail

inline AttributePool parse_attribute_pool(std::istream& in) {
  AttributePool pool;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = detail::trim(raw);
    if (text.empty() || text[0] == '#') continue;
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ParseError("expected 'field: values'", line);
    const std::string key = detail::trim(text.substr(0, colon));
    const std::string value = detail::trim(text.substr(colon + 1));
    if (key == "age") pool.age = detail::parse_range<int>(value, key, line);
    else if (key == "height") pool.height_cm = detail::parse_range<int>(value, key, line);
    else if (key == "weight") pool.weight_kg = detail::parse_range<int>(value, key, line);
    else if (key == "bmi") pool.bmi = detail::parse_range<double>(value, key, line);
    else if (key == "gym_time") pool.gym_minutes_per_week = detail::parse_range<int>(value, key, line);
    else if (key == "average_distance") pool.average_distance_km = detail::parse_range<double>(value, key, line);
    else if (key == "sex") pool.sex = detail::split_values(value);
    else if (key == "profession") pool.profession = detail::split_values(value);
    else if (key == "preferred_activities") pool.activities = detail::split_values(value);
    else if (key == "hobbies") pool.hobbies = detail::split_values(value);
    else if (key == "exercise_location") pool.exercise_location = detail::split_values(value);
    else if (key == "favorite_spot") pool.favorite_spot = detail::split_values(value);
    else throw ParseError("unknown attribute field '" + key + "'", line);
  }
  pool.validate();
  return pool;
}

inline AttributePool load_attribute_pool(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open attribute pool file: " + path);
  return parse_attribute_pool(in);
}

inline AttributePool AttributePool::defaults() {
  AttributePool p;
  p.sex = {"female", "male"};
  p.profession = {"student",    "nurse",     "teacher",  "accountant", "barista",
                  "engineer",   "librarian", "designer", "electrician", "pharmacist",
                  "chef",       "paralegal", "analyst",  "carpenter",  "photographer"};
  p.activities = {"walking",  "running", "cycling", "swimming", "hiking", "yoga",
                  "dancing",  "tennis",  "rowing",  "climbing", "pilates", "basketball"};
  p.hobbies = {"reading",   "gardening", "cooking", "painting", "gaming",  "chess",
               "knitting",  "birding",   "music",   "baking",   "film",    "pottery"};
  p.exercise_location = {"campus gym", "neighborhood park", "home", "community center",
                         "riverside trail", "downtown studio"};
  p.favorite_spot = {"the lake loop", "the old rail trail", "the stadium stairs",
                     "the botanical garden", "the waterfront", "the hill path"};
  return p;
}

namespace detail {

template <class URBG>
const std::string& pick(const std::vector<std::string>& v, URBG& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

template <class URBG>
std::vector<std::string> pick_distinct(const std::vector<std::string>& v, std::size_t k,
                                       URBG& rng) {
  std::vector<std::size_t> idx(v.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k && i < idx.size(); ++i) {
    std::uniform_int_distribution<std::size_t> d(i, idx.size() - 1);
    std::swap(idx[i], idx[d(rng)]);
    out.push_back(v[idx[i]]);
  }
  return out;
}

}  // namespace detail

/// Draws one mutually plausible attribute bundle. Weight follows height through a
/// BMI drawn from the pool, clamped to the pool's weight range.
template <class URBG>
ProfileAttributes sample_attributes(URBG& rng, const AttributePool& pool) {
  pool.validate();
  ProfileAttributes a;
  a.age = std::uniform_int_distribution<int>(pool.age.lo, pool.age.hi)(rng);
  a.sex = detail::pick(pool.sex, rng);
  a.profession = detail::pick(pool.profession, rng);
  a.height_cm = std::uniform_int_distribution<int>(pool.height_cm.lo, pool.height_cm.hi)(rng);
  const double bmi = std::uniform_real_distribution<double>(pool.bmi.lo, pool.bmi.hi)(rng);
  const double metres = a.height_cm / 100.0;
  a.weight_kg = std::clamp(static_cast<int>(std::lround(bmi * metres * metres)), pool.weight_kg.lo,
                           pool.weight_kg.hi);
  a.gym_minutes_per_week = std::uniform_int_distribution<int>(pool.gym_minutes_per_week.lo,
                                                              pool.gym_minutes_per_week.hi)(rng);
  a.preferred_activities = detail::pick_distinct(pool.activities, 2, rng);
  a.hobbies = detail::pick_distinct(pool.hobbies, 2, rng);
  a.exercise_location = detail::pick(pool.exercise_location, rng);
  a.favorite_spot = detail::pick(pool.favorite_spot, rng);
  const double km = std::uniform_real_distribution<double>(pool.average_distance_km.lo,
                                                           pool.average_distance_km.hi)(rng);
  a.average_distance_km = std::round(km * 10.0) / 10.0;
  return a;
}

/// Handle of three lowercase letters and two digits, e.g. "azb30".
template <class URBG>
std::string random_display_name(URBG& rng) {
  std::uniform_int_distribution<int> letter(0, 25), digit(0, 9);
  std::string s(5, ' ');
  for (int i = 0; i < 3; ++i) s[i] = static_cast<char>('a' + letter(rng));
  for (int i = 3; i < 5; ++i) s[i] = static_cast<char>('0' + digit(rng));
  return s;
}

template <class URBG>
std::string random_card_id(URBG& rng) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::uniform_int_distribution<int> nibble(0, 15);
  std::string s = "c";
  for (int i = 0; i < 12; ++i) s += kHex[nibble(rng)];
  return s;
}

/// Displayed step count for a target at `offset` with obfuscation factor `noise`
/// (in [-0.02, 0.02]); rounds half up and never goes negative.
inline std::uint64_t displayed_steps_for(std::uint64_t ref_steps, double offset, double noise) {
  const double raw = static_cast<double>(ref_steps) * (1.0 + offset) * (1.0 + noise);
  return static_cast<std::uint64_t>(std::max(0.0, std::floor(raw + 0.5)));
}

/// The day's four comparison targets for `arm`, in a random display order.
template <class URBG>
std::vector<ProfileCard> generate_cards(ArmId arm, std::uint64_t ref_steps, URBG& rng,
                                        const AttributePool& pool) {
  if (ref_steps < kMinReferenceSteps)
    throw DomainError("reference steps " + std::to_string(ref_steps) + " below wear threshold " +
                      std::to_string(kMinReferenceSteps));
  pool.validate();

  std::array<double, 4> order = offsets_for_arm(arm);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> d(0, i);
    std::swap(order[i], order[d(rng)]);
  }

  std::uniform_real_distribution<double> noise(-kObfuscation, kObfuscation);
  std::vector<ProfileCard> cards;
  cards.reserve(order.size());
  for (double offset : order) {
    ProfileCard c;
    c.true_offset = offset;
    c.displayed_steps = displayed_steps_for(ref_steps, offset, noise(rng));
    do {
      c.display_name = random_display_name(rng);
    } while (std::any_of(cards.begin(), cards.end(),
                         [&](const ProfileCard& o) { return o.display_name == c.display_name; }));
    do {
      c.card_id = random_card_id(rng);
    } while (std::any_of(cards.begin(), cards.end(),
                         [&](const ProfileCard& o) { return o.card_id == c.card_id; }));
    c.attributes = sample_attributes(rng, pool);
    cards.push_back(std::move(c));
  }
  return cards;
}

}  // namespace socmab
