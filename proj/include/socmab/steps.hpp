#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "socmab/date.hpp"
#include "socmab/errors.hpp"

namespace socmab {

enum class StepSource : std::uint8_t { Replay, Simulated, Ingested };

constexpr std::string_view to_string(StepSource s) {
  switch (s) {
    case StepSource::Replay: return "replay";
    case StepSource::Simulated: return "simulated";
    case StepSource::Ingested: return "ingested";
  }
  return "?";
}

constexpr std::optional<StepSource> parse_step_source(std::string_view s) {
  if (s == "replay") return StepSource::Replay;
  if (s == "simulated") return StepSource::Simulated;
  if (s == "ingested") return StepSource::Ingested;
  return std::nullopt;
}

struct StepRecord {
  std::string participant_id;
  Date date;
  std::uint64_t steps = 0;
  StepSource source = StepSource::Ingested;

  friend bool operator==(const StepRecord&, const StepRecord&) = default;
};

/// Read side of daily step acquisition. A wearable-vendor client would implement this.
class StepsProvider {
 public:
  virtual ~StepsProvider() = default;
  virtual std::optional<std::uint64_t> get_steps(const std::string& participant_id,
                                                 Date date) const = 0;
};

struct StepOverwrite {
  std::string participant_id;
  Date date;
  std::uint64_t previous = 0;
  std::uint64_t replacement = 0;
};

/// One record per (participant, date); a later upsert replaces the count and is
/// recorded in the overwrite audit.
class StepStore : public StepsProvider {
 public:
  /// Returns the previous count when the key already existed.
  std::optional<std::uint64_t> upsert(StepRecord record) {
    auto key = std::make_pair(record.participant_id, record.date);
    auto it = records_.find(key);
    if (it == records_.end()) {
      records_.emplace(std::move(key), std::move(record));
      return std::nullopt;
    }
    const std::uint64_t previous = it->second.steps;
    audit_.push_back({record.participant_id, record.date, previous, record.steps});
    it->second = std::move(record);
    return previous;
  }

  std::optional<std::uint64_t> get_steps(const std::string& participant_id,
                                         Date date) const override {
    auto it = records_.find(std::make_pair(participant_id, date));
    if (it == records_.end()) return std::nullopt;
    return it->second.steps;
  }

  /// Records for one participant strictly before `before`, oldest first.
  std::vector<StepRecord> history(const std::string& participant_id, Date before) const {
    std::vector<StepRecord> out;
    for (auto it = records_.lower_bound({participant_id, Date{}});
         it != records_.end() && it->first.first == participant_id && it->first.second < before;
         ++it)
      out.push_back(it->second);
    return out;
  }

  /// All records ordered by (participant_id, date).
  std::vector<StepRecord> records() const {
    std::vector<StepRecord> out;
    out.reserve(records_.size());
    for (const auto& [_, r] : records_) out.push_back(r);
    return out;
  }

  const std::vector<StepOverwrite>& overwrites() const { return audit_; }

  std::size_t size() const { return records_.size(); }

 private:
  std::map<std::pair<std::string, Date>, StepRecord> records_;
  std::vector<StepOverwrite> audit_;
};

// ---------------------------------------------------------------------------
// CSV: header `participant_id,date,steps`, ISO dates, base-10 counts, `\n` newlines.

inline constexpr std::string_view kStepCsvHeader = "participant_id,date,steps";

struct ReplayIssue {
  std::size_t line = 0;
  std::string message;
};

struct ReplayResult {
  std::vector<StepRecord> records;
  std::vector<ReplayIssue> skipped;
};

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    fields.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

inline std::optional<std::uint64_t> parse_count(std::string_view s) {
  if (s.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string_view strip_cr(std::string_view s) {
  if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
  return s;
}

}  // namespace detail

/// Parses a step CSV stream in file order. Malformed rows throw ParseError under
/// `strict`, otherwise they are skipped and reported with their line number.
inline ReplayResult replay_steps(std::istream& in, bool strict = true) {
  ReplayResult result;
  std::string raw;
  std::size_t line = 0;
  if (!std::getline(in, raw)) return result;
  ++line;
  if (detail::strip_cr(raw) != kStepCsvHeader)
    throw ParseError("expected header '" + std::string(kStepCsvHeader) + "'", line);

  while (std::getline(in, raw)) {
    ++line;
    const std::string_view text = detail::strip_cr(raw);
    if (text.empty()) continue;
    std::string problem;
    const auto fields = detail::split_csv_line(text);
    std::optional<Date> date;
    std::optional<std::uint64_t> steps;
    if (fields.size() != 3) {
      problem = "expected 3 fields, found " + std::to_string(fields.size());
    } else if (fields[0].empty()) {
      problem = "empty participant_id";
    } else if (!(date = parse_date(fields[1]))) {
      problem = "invalid date '" + std::string(fields[1]) + "'";
    } else if (!(steps = detail::parse_count(fields[2]))) {
      problem = "invalid steps '" + std::string(fields[2]) + "'";
    }
    if (!problem.empty()) {
      if (strict) throw ParseError(problem, line);
      result.skipped.push_back({line, problem});
      continue;
    }
    result.records.push_back({std::string(fields[0]), *date, *steps, StepSource::Replay});
  }
  return result;
}

inline ReplayResult replay_from_file(const std::string& path, bool strict = true) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open step file: " + path);
  return replay_steps(in, strict);
}

inline std::size_t write_steps_csv(std::ostream& out, const std::vector<StepRecord>& records) {
  out << kStepCsvHeader << '\n';
  for (const auto& r : records) out << r.participant_id << ',' << r.date.iso() << ',' << r.steps << '\n';
  return records.size();
}

}  // namespace socmab
