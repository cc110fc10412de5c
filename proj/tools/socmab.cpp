// socmab: run simulated studies, analyze session logs, serve the study API.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "socmab/analysis.hpp"
#include "socmab/config.hpp"
#include "socmab/http.hpp"
#include "socmab/platform.hpp"
#include "socmab/profiles.hpp"
#include "socmab/sim.hpp"

namespace fs = std::filesystem;
using namespace socmab;

namespace {

httplib::Server* g_server = nullptr;

void on_signal(int) {
  if (g_server) g_server->stop();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
  if (!out) throw ConfigError("write failed: " + path.string());
}

int run_simulate(const std::optional<std::string>& config_path,
                 const std::optional<std::string>& population_path, const std::string& out_dir,
                 std::optional<std::uint64_t> seed) {
  StudyFile file = config_path ? load_study_file(*config_path) : StudyFile{};
  PopulationSpec population = population_path ? load_population(*population_path) : PopulationSpec{};
  if (seed) {
    file.study.seed = *seed;
    population.seed = *seed;
  }

  const fs::path out(out_dir);
  fs::create_directories(out);
  const fs::path log = out / "events.ndjson";
  fs::remove(log);

  EventStore store(log);
  const SimResult result = run_study(file.study, population, store, file.simulation);

  EventStore reread(log);
  StudyPlatform platform(file.study, reread, file.simulation.pool);
  const auto sessions = export_csv(platform, ExportKind::Sessions, out / "sessions.csv");
  export_csv(platform, ExportKind::Steps, out / "steps.csv");
  export_csv(platform, ExportKind::Rewards, out / "rewards.csv");
  {
    std::ofstream truth(out / "truth.csv", std::ios::binary | std::ios::trunc);
    write_truth_csv(truth, result.truth);
  }

  std::size_t control = 0;
  for (const auto& [_, p] : platform.participants()) control += p.condition == Condition::Control;
  fmt::print("participants: {} (control {}, experimental {})\n", result.users.size(), control,
             result.users.size() - control);
  fmt::print("sessions: {}\n", result.sessions);
  fmt::print("finalized days: {}\n", sessions);
  fmt::print("events: {}\n", store.size());
  fmt::print("output: {}\n", out.string());
  return 0;
}

int run_analyze(const std::string& log_dir, const std::optional<std::string>& truth_path,
                const std::string& out_path) {
  const auto rows = analysis::read_sessions_csv((fs::path(log_dir) / "sessions.csv").string());
  std::optional<std::map<std::string, double>> truth;
  if (truth_path) truth = analysis::read_truth_csv(*truth_path);
  const auto report = analysis::analyze(rows, truth);
  const std::string text = analysis::to_text(report);
  const fs::path out(out_path);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  write_text(out, analysis::to_json(report).dump(2) + "\n");
  write_text(fs::path(out_path + ".txt"), text);
  std::cout << text;
  return 0;
}

int run_serve(const std::optional<std::string>& config_path, std::optional<int> port,
              const std::optional<std::string>& data_dir) {
  StudyFile file = config_path ? load_study_file(*config_path) : StudyFile{};
  apply_env_overrides(file);
  if (port) file.server.port = *port;
  if (data_dir) file.server.data_dir = *data_dir;

  EventStore store(fs::path(file.server.data_dir) / "events.ndjson");
  StudyPlatform platform(file.study, store, file.simulation.pool);
  api::Service service(platform, file.server.token);

  httplib::Server server;
  api::mount(server, service);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  fmt::print("serving on port {} (data: {}, {} events replayed)\n", file.server.port, file.server.data_dir,
             store.size());
  std::fflush(stdout);
  if (!server.listen("0.0.0.0", file.server.port)) {
    if (g_server) throw ConfigError(fmt::format("cannot listen on port {}", file.server.port));
  }
  g_server = nullptr;
  return 0;
}

int run_gen_profiles(const std::string& arm_name, std::uint64_t ref_steps, std::uint64_t seed) {
  const auto arm = parse_arm(arm_name);
  if (!arm) throw ConfigError("--arm must be one of down, mixed, up");
  Rng rng(seed);
  const auto cards = generate_cards(*arm, ref_steps, rng, AttributePool::defaults());
  for (const auto& c : cards)
    fmt::print("{}  {:>6}  offset {:+.2f}  {} {}, {}\n", c.display_name, c.displayed_steps, c.true_offset,
               c.attributes.age, c.attributes.sex, c.attributes.profession);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Personalized social-comparison bandit: simulate, analyze, serve"};
  app.require_subcommand(1);

  auto* sim = app.add_subcommand("simulate", "Run a simulated study and export its logs");
  std::optional<std::string> sim_config, sim_population;
  std::string sim_out;
  std::optional<std::uint64_t> sim_seed;
  sim->add_option("--config", sim_config, "Study configuration file (JSON)");
  sim->add_option("--population", sim_population, "Population specification file (JSON)");
  sim->add_option("--out", sim_out, "Output directory")->required();
  sim->add_option("--seed", sim_seed, "Seed for the study and the population");

  auto* ana = app.add_subcommand("analyze", "Analyze an exported session log");
  std::string ana_log, ana_out;
  std::optional<std::string> ana_truth;
  ana->add_option("--log", ana_log, "Directory holding sessions.csv")->required();
  ana->add_option("--truth", ana_truth, "Preference scores (participant_id,theta)");
  ana->add_option("--out", ana_out, "Report path (JSON); the text table goes to <out>.txt")->required();

  auto* srv = app.add_subcommand("serve", "Serve the study API");
  std::optional<std::string> srv_config, srv_data;
  std::optional<int> srv_port;
  srv->add_option("--config", srv_config, "Study configuration file (JSON)");
  srv->add_option("--port", srv_port, "Port to listen on");
  srv->add_option("--data", srv_data, "Data directory for the event log");

  auto* gen = app.add_subcommand("gen-profiles", "Print one day's four profile cards");
  std::string gen_arm;
  std::uint64_t gen_ref = 0, gen_seed = 0;
  gen->add_option("--arm", gen_arm, "down|mixed|up")->required();
  gen->add_option("--ref-steps", gen_ref, "Reference daily steps")->required();
  gen->add_option("--seed", gen_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return run_simulate(sim_config, sim_population, sim_out, sim_seed);
    if (*ana) return run_analyze(ana_log, ana_truth, ana_out);
    if (*srv) return run_serve(srv_config, srv_port, srv_data);
    if (*gen) return run_gen_profiles(gen_arm, gen_ref, gen_seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
