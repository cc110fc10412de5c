#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

namespace socmab {

/// Comparison direction of the day's profiles; the bandit's action space.
enum class ArmId : std::uint8_t { Downward = 0, Mixed = 1, Upward = 2 };

inline constexpr std::size_t kArmCount = 3;
inline constexpr std::array<ArmId, kArmCount> kAllArms{ArmId::Downward, ArmId::Mixed,
                                                       ArmId::Upward};

constexpr std::size_t arm_index(ArmId a) { return static_cast<std::size_t>(a); }

constexpr ArmId arm_from_index(std::size_t i) { return kAllArms.at(i); }

/// Downward = -1, Mixed = 0, Upward = +1.
constexpr int direction(ArmId a) { return static_cast<int>(a) - 1; }

/// Wire name: `down|mixed|up`.
constexpr std::string_view to_string(ArmId a) {
  switch (a) {
    case ArmId::Downward: return "down";
    case ArmId::Mixed: return "mixed";
    case ArmId::Upward: return "up";
  }
  return "?";
}

constexpr std::optional<ArmId> parse_arm(std::string_view s) {
  if (s == "down") return ArmId::Downward;
  if (s == "mixed") return ArmId::Mixed;
  if (s == "up") return ArmId::Upward;
  return std::nullopt;
}

}  // namespace socmab
