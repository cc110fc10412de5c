#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <fmt/format.h>

#include "socmab/arm.hpp"
#include "socmab/platform.hpp"
#include "socmab/profiles.hpp"
#include "socmab/protocol.hpp"
#include "socmab/rng.hpp"

namespace socmab {

/// A synthetic participant with a fixed comparison preference and linear responses.
struct SimUser {
  double theta = 0.0;  // -1 pure downward comparer .. +1 pure upward
  double tau = 0.05;   // card-choice temperature
  double alpha = 0.0;  // motivation responsiveness
  double beta = 0.0;   // step responsiveness
  double base_steps = 6000.0;
  double step_noise_sigma = 0.0;
  std::string gender = "female";
  double adherence = 1.0;

  void validate() const {
    if (!(theta >= -1.0 && theta <= 1.0)) throw DomainError("theta must lie in [-1,1]");
    if (!(tau > 0.0)) throw DomainError("tau must be positive");
    if (!(alpha >= 0.0) || !(beta >= 0.0)) throw DomainError("alpha and beta must be >= 0");
    if (!(base_steps > 0.0)) throw DomainError("base_steps must be positive");
    if (!(step_noise_sigma >= 0.0)) throw DomainError("step noise sigma must be >= 0");
    if (!(adherence >= 0.0 && adherence <= 1.0)) throw DomainError("adherence must lie in [0,1]");
  }

  friend bool operator==(const SimUser&, const SimUser&) = default;
};

namespace theta_dist {
struct Uniform { double lo = -1.0; double hi = 1.0; };
struct Bimodal { double theta0 = 1.0; double mix = 0.5; };  // +theta0 with probability mix
struct Point { double theta = 0.0; };
}  // namespace theta_dist

using ThetaDistribution = std::variant<theta_dist::Uniform, theta_dist::Bimodal, theta_dist::Point>;

struct PopulationSpec {
  std::size_t n_users = 48;
  ThetaDistribution theta = theta_dist::Uniform{};
  Range<double> tau{0.03, 0.08};
  Range<double> alpha{0.0, 1.0};
  Range<double> beta{0.0, 0.1};
  Range<double> base_steps{4000.0, 9000.0};
  Range<double> step_noise_sigma{0.1, 0.3};
  Range<double> adherence{0.7, 1.0};
  double female_fraction = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_users < 1) throw ConfigError("population needs at least one user");
    auto check = [](const Range<double>& r, const char* name, double min, double max) {
      if (!(r.lo <= r.hi) || r.lo < min || r.hi > max)
        throw ConfigError(fmt::format("population range '{}' must satisfy {} <= lo <= hi <= {}",
                                      name, min, max));
    };
    constexpr double inf = std::numeric_limits<double>::infinity();
    check(tau, "tau", 1e-12, inf);
    check(alpha, "alpha", 0.0, inf);
    check(beta, "beta", 0.0, inf);
    check(base_steps, "base_steps", 1.0, inf);
    check(step_noise_sigma, "step_noise_sigma", 0.0, inf);
    check(adherence, "adherence", 0.0, 1.0);
    if (!(female_fraction >= 0.0 && female_fraction <= 1.0))
      throw ConfigError("female_fraction must lie in [0,1]");
    std::visit(
        [](const auto& d) {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, theta_dist::Uniform>) {
            if (!(d.lo >= -1.0 && d.lo <= d.hi && d.hi <= 1.0))
              throw ConfigError("uniform theta bounds must lie in [-1,1]");
          } else if constexpr (std::is_same_v<D, theta_dist::Bimodal>) {
            if (!(d.theta0 >= 0.0 && d.theta0 <= 1.0 && d.mix >= 0.0 && d.mix <= 1.0))
              throw ConfigError("bimodal theta0 and mix must lie in [0,1]");
          } else {
            if (!(d.theta >= -1.0 && d.theta <= 1.0)) throw ConfigError("point theta must lie in [-1,1]");
          }
        },
        theta);
  }
};

namespace detail {

template <class URBG>
double draw(const Range<double>& r, URBG& rng) {
  if (r.lo == r.hi) return r.lo;
  return std::uniform_real_distribution<double>(r.lo, r.hi)(rng);
}

}  // namespace detail

/// One user per substream of `spec.seed`, so the i-th user does not depend on n_users.
inline std::vector<SimUser> sample_population(const PopulationSpec& spec) {
  spec.validate();
  std::vector<SimUser> users;
  users.reserve(spec.n_users);
  for (std::size_t i = 0; i < spec.n_users; ++i) {
    Rng rng = substream(spec.seed, Stream::Population, {i});
    SimUser u;
    u.theta = std::visit(
        [&](const auto& d) -> double {
          using D = std::decay_t<decltype(d)>;
          if constexpr (std::is_same_v<D, theta_dist::Uniform>)
            return detail::draw(Range<double>{d.lo, d.hi}, rng);
          else if constexpr (std::is_same_v<D, theta_dist::Bimodal>)
            return std::bernoulli_distribution(d.mix)(rng) ? d.theta0 : -d.theta0;
          else
            return d.theta;
        },
        spec.theta);
    u.tau = detail::draw(spec.tau, rng);
    u.alpha = detail::draw(spec.alpha, rng);
    u.beta = detail::draw(spec.beta, rng);
    u.base_steps = detail::draw(spec.base_steps, rng);
    u.step_noise_sigma = detail::draw(spec.step_noise_sigma, rng);
    u.adherence = detail::draw(spec.adherence, rng);
    u.gender = std::bernoulli_distribution(spec.female_fraction)(rng) ? "female" : "male";
    users.push_back(std::move(u));
  }
  return users;
}

/// Offset a user of preference theta would ideally compare against.
inline double preferred_offset(double theta) { return 0.25 * theta; }

/// Choice probabilities exp(-|offset - 0.25 theta| / tau), normalized.
inline std::vector<double> choice_probabilities(const SimUser& u, const std::vector<ProfileCard>& cards) {
  std::vector<double> logits;
  logits.reserve(cards.size());
  for (const auto& c : cards) logits.push_back(-std::abs(c.true_offset - preferred_offset(u.theta)) / u.tau);
  const double top = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (double& l : logits) z += (l = std::exp(l - top));
  for (double& l : logits) l /= z;
  return logits;
}

template <class URBG>
std::size_t sim_choose_card(const SimUser& u, const std::vector<ProfileCard>& cards, URBG& rng) {
  if (cards.size() != 4) throw DomainError("choice needs the day's 4 cards");
  if (!(u.tau > 0.0)) throw DomainError("tau must be positive");
  const auto probs = choice_probabilities(u, cards);
  const double x = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (x < acc) return i;
  }
  // x landed in the rounding slack above the last cumulative sum
  for (std::size_t i = probs.size(); i-- > 0;)
    if (probs[i] > 0.0) return i;
  return probs.size() - 1;
}

/// Standard deviation of the latent motivation change, in Likert points.
inline constexpr double kMotivationNoise = 0.5;

struct MotivationPair {
  int pre = 3;
  int post = 3;
};

template <class URBG>
MotivationPair sim_motivation(const SimUser& u, ArmId arm, URBG& rng) {
  MotivationPair m;
  m.pre = std::uniform_int_distribution<int>(2, 4)(rng);
  const double mean = u.alpha * u.theta * direction(arm);
  const double latent = std::normal_distribution<double>(mean, kMotivationNoise)(rng);
  m.post = std::clamp(m.pre + static_cast<int>(std::lround(latent)), 1, 5);
  return m;
}

template <class URBG>
std::uint64_t sim_daily_steps(const SimUser& u, ArmId arm, URBG& rng) {
  double noise = 1.0;
  if (u.step_noise_sigma > 0.0)
    noise = std::exp(std::normal_distribution<double>(0.0, u.step_noise_sigma)(rng));
  const double steps = u.base_steps * (1.0 + u.beta * u.theta * direction(arm)) * noise;
  return static_cast<std::uint64_t>(std::max(0.0, std::round(steps)));
}

struct SimOptions {
  Date start_date{2024, 1, 8};
  // Calendar days each participant has to complete the study; never shorter than
  // total_days.
  int window_days = 28;
  AttributePool pool = AttributePool::defaults();
};

struct SimResult {
  std::vector<SimUser> users;
  std::vector<std::string> participant_ids;  // aligned with users
  std::map<std::string, double> truth;       // participant_id -> theta
  std::size_t sessions = 0;
  std::size_t finalized = 0;
};

/// Drives a whole study through the platform: enrollment of every user, then each
/// user's adherent days through the full session flow and step ingestion. Every event
/// lands in `store`; the run is a pure function of (config.seed, spec.seed, options).
inline SimResult run_study(const StudyConfig& config, const PopulationSpec& spec, EventStore& store,
                           const SimOptions& options = {}) {
  config.validate();
  SimResult result;
  result.users = sample_population(spec);

  ManualClock clock{Timestamp{options.start_date.sys_days()} + std::chrono::hours{8}};
  StudyPlatform platform(config, store, options.pool, clock.as_clock());

  for (std::size_t i = 0; i < result.users.size(); ++i) {
    clock.advance(std::chrono::seconds{1});
    const auto& p = platform.enroll(fmt::format("sim-{:04}", i + 1), result.users[i].gender);
    result.participant_ids.push_back(p.participant_id);
    result.truth[p.participant_id] = result.users[i].theta;
  }

  const int window = std::max(options.window_days, config.total_days);
  for (std::size_t i = 0; i < result.users.size(); ++i) {
    const SimUser& u = result.users[i];
    const std::string& pid = result.participant_ids[i];
    int completed = 0;
    for (int day = 0; day < window && completed < config.total_days; ++day) {
      Rng rng = substream(spec.seed, Stream::UserDay, {i, static_cast<std::uint64_t>(day)});
      if (!std::bernoulli_distribution(u.adherence)(rng)) continue;
      const Date date = options.start_date.plus_days(day);
      clock.set(Timestamp{date.sys_days()} + std::chrono::hours{9} + std::chrono::seconds{i});
      auto tick = [&] { clock.advance(std::chrono::seconds{7}); };

      const std::string sid = platform.start_session(pid, date).session_id;
      const ArmId arm = platform.session(sid).arm;
      const MotivationPair m = sim_motivation(u, arm, rng);
      tick();
      platform.rate_pre(sid, m.pre);
      tick();
      const auto cards = platform.issue_cards(sid);
      const std::size_t choice = sim_choose_card(u, cards, rng);
      tick();
      platform.preview(sid, cards[choice].card_id);
      tick();
      platform.select(sid, cards[choice].card_id);
      for (const char* section : {"steps", "interests"}) {
        tick();
        platform.unlock(sid, section);
      }
      tick();
      platform.rate_post(sid, m.post);
      ++result.sessions;

      clock.set(Timestamp{date.plus_days(1).sys_days()} + std::chrono::hours{2});
      const auto steps = sim_daily_steps(u, arm, rng);
      if (platform.ingest_steps(pid, date, static_cast<std::int64_t>(steps), StepSource::Simulated)
              .finalized_session)
        ++result.finalized;
      ++completed;
    }
  }
  return result;
}

inline constexpr std::string_view kTruthCsvHeader = "participant_id,theta";

inline void write_truth_csv(std::ostream& out, const std::map<std::string, double>& truth) {
  out << kTruthCsvHeader << '\n';
  for (const auto& [pid, theta] : truth) out << fmt::format("{},{}\n", pid, theta);
}

}  // namespace socmab
