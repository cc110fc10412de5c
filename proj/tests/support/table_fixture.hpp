#pragma once

// Session-log fixtures whose summary cells land on fixed target values by
// construction. Integer data only reaches 0.0194 and 0.1456 exactly through the
// sample size, hence 5000 sessions per condition.

#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "socmab/analysis.hpp"

namespace fixture {

using socmab::ArmId;
using socmab::Condition;
using socmab::analysis::SessionRow;

inline constexpr double kControlDelta = 0.0194;       // 97 / 5000
inline constexpr double kExperimentalDelta = 0.1456;  // 728 / 5000
inline constexpr double kDownPreMean = 6869.0;
inline constexpr std::size_t kDownPreN = 73;

inline constexpr int kParticipantsPerCondition = 250;
inline constexpr int kDays = 20;

inline std::string pid(Condition c, int i) {
  return fmt::format("{}{:03}", c == Condition::Control ? 'c' : 'e', i);
}

inline SessionRow row(Condition c, int i, int day, ArmId arm, int pre, int post, std::uint64_t steps) {
  SessionRow r;
  r.participant_id = pid(c, i);
  r.condition = c;
  r.day_index = day;
  r.date = socmab::Date{2024, 1, 8}.plus_days(day - 1);
  r.arm = arm;
  r.pre_motivation = pre;
  r.post_motivation = post;
  r.selected_offset = socmab::offsets_for_arm(arm)[static_cast<std::size_t>((i + day) % 4)];
  r.previews = {1 + (i + day) % 4};
  r.steps = steps;
  r.wear = steps >= 100;
  r.reward = 0.5;
  return r;
}

/// 250 control and 250 experimental participants with 20 days each, plus one
/// control participant with 13 days whose rows must not reach any table.
inline std::vector<SessionRow> table_shaped_log() {
  std::vector<SessionRow> rows;
  for (Condition c : {Condition::Control, Condition::Experimental}) {
    const int ups = c == Condition::Control ? 97 : 728;
    int seq = 0;
    int down_pre = 0;
    for (int i = 0; i < kParticipantsPerCondition; ++i)
      for (int day = 1; day <= kDays; ++day, ++seq) {
        ArmId arm = (i + day) % 2 ? ArmId::Upward : ArmId::Mixed;
        if (day > 9) arm = socmab::arm_from_index(static_cast<std::size_t>((i + day) % 3));
        std::uint64_t steps = 7000 + static_cast<std::uint64_t>((i * 37 + day * 11) % 900);
        if (c == Condition::Control && day == 1 && i < static_cast<int>(kDownPreN)) {
          arm = ArmId::Downward;
          steps = static_cast<std::uint64_t>(6869 + (i - 36) * 10);  // symmetric around the mean
          ++down_pre;
        }
        if (c == Condition::Control && day == 2 && i < 5) {
          arm = ArmId::Downward;
          steps = 99;  // non-wear: must stay out of the step table
        }
        if (day == 15 && i % 50 == 0) steps = 40;
        // Deltas: `ups` sessions at +1, 100 at +2 and 100 at -2 cancelling, the rest 0.
        int pre = 3, post = 3;
        if (seq < ups) post = 4;
        else if (seq < ups + 100) pre = 2, post = 4;
        else if (seq < ups + 200) pre = 5, post = 3;
        rows.push_back(row(c, i, day, arm, pre, post, steps));
      }
    (void)down_pre;
  }
  // short participant: 13 days, every one a loud Downward pre day
  for (int day = 1; day <= 13; ++day) rows.push_back(row(Condition::Control, 999, day, ArmId::Downward, 1, 5, 20000));
  return rows;
}

inline void write_sessions_csv(std::ostream& out, const std::vector<SessionRow>& rows) {
  out << socmab::kSessionsCsvHeader << '\n';
  for (const auto& r : rows) {
    std::string previews;
    for (int p : r.previews) previews += (previews.empty() ? "" : ";") + std::to_string(p);
    out << fmt::format("{},{},{},{},{},{},{},{:.2f},{},{},{},{}\n", r.participant_id, to_string(r.condition),
                       r.day_index, r.date.iso(), to_string(r.arm), r.pre_motivation, r.post_motivation,
                       r.selected_offset, previews, r.steps, r.wear ? 1 : 0, r.reward);
  }
}

}  // namespace fixture
