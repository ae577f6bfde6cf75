// SPDX-License-Identifier: Apache-2.0
//
// bdp: command-line front end over the C API.

#include <bdp/bdp.h>

#include <openssl/evp.h>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<double> grid_step;
  std::optional<double> horizon;
  std::optional<std::uint64_t> paths;
  unsigned threads = 0;
  std::string coordinate;
};

class Failure {
 public:
  Failure(bdp_status status, std::string message)
      : status_(status), message_(std::move(message)) {}
  bdp_status status() const { return status_; }
  const std::string& message() const { return message_; }

 private:
  bdp_status status_;
  std::string message_;
};

void check(bdp_status s) {
  if (s != BDP_OK) throw Failure(s, bdp_last_error());
}

int exit_code_for(bdp_status s) {
  switch (s) {
    case BDP_ERR_CONFIG:
    case BDP_ERR_INVALID_ARGUMENT:
    case BDP_ERR_BOUND_VIOLATION:
      return kExitConfig;
    default:
      return kExitFailure;
  }
}

std::string utc_now() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure(BDP_ERR_IO, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string data = buf.str();
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw Failure(BDP_ERR_INTERNAL, "sha256 failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

class Run {
 public:
  Run(std::string subcommand, const Flags& flags)
      : subcommand_(std::move(subcommand)), flags_(flags), started_(utc_now()) {
    std::error_code ec;
    fs::create_directories(flags_.out, ec);
    if (ec) {
      throw Failure(BDP_ERR_IO, "cannot create output directory '" + flags_.out +
                                    "': " + ec.message());
    }
  }

  std::string path(const std::string& name) {
    files_.push_back(name);
    return (fs::path(flags_.out) / name).string();
  }

  void write_manifest() const {
    std::ostringstream m;
    m << "tool_version = " << bdp_version() << "\n";
    m << "subcommand = " << subcommand_ << "\n";
    m << "config = " << (flags_.config.empty() ? "(none)" : flags_.config) << "\n";
    m << "output_dir = " << flags_.out << "\n";
    m << "started_at = " << started_ << "\n";
    m << "finished_at = " << utc_now() << "\n";
    for (const std::string& f : files_) {
      m << "file = " << f << " sha256=" << sha256_file(fs::path(flags_.out) / f)
        << "\n";
    }
    std::ofstream out(fs::path(flags_.out) / "manifest.txt", std::ios::binary);
    out << m.str();
    if (!out) throw Failure(BDP_ERR_IO, "cannot write manifest.txt");
  }

 private:
  std::string subcommand_;
  const Flags& flags_;
  std::string started_;
  std::vector<std::string> files_;
};

struct ModelHandle {
  bdp_model* model = nullptr;
  ~ModelHandle() { bdp_model_free(model); }
};

struct TrajectoryHandle {
  bdp_trajectory* trajectory = nullptr;
  ~TrajectoryHandle() { bdp_trajectory_free(trajectory); }
};

void load(const Flags& flags, ModelHandle& h) {
  if (flags.config.empty()) throw Failure(BDP_ERR_CONFIG, "--config is required");
  check(bdp_model_load(flags.config.c_str(), &h.model));
  bdp_settings s{};
  check(bdp_model_get_settings(h.model, &s));
  if (flags.seed) s.seed = *flags.seed;
  if (flags.grid_step) s.grid_step = *flags.grid_step;
  if (flags.horizon) s.horizon = *flags.horizon;
  if (flags.paths) s.paths = *flags.paths;
  check(bdp_model_set_settings(h.model, &s));
}

void solve(const ModelHandle& h, TrajectoryHandle& t) {
  check(bdp_solve(h.model, BDP_TAIL_STOP, &t.trajectory));
  int stopped = 0;
  double at = 0.0;
  check(bdp_trajectory_stopped(t.trajectory, &stopped, &at));
  if (stopped) {
    std::cerr << "warning: tail mass exceeded the threshold at t=" << at
              << "; trajectory truncated before that time\n";
  }
}

int cmd_solve(const Flags& flags) {
  ModelHandle h;
  load(flags, h);
  Run run("solve", flags);
  TrajectoryHandle t;
  solve(h, t);
  check(bdp_trajectory_write_csv(t.trajectory, run.path("trajectory.csv").c_str()));
  check(bdp_model_write_states_csv(h.model, run.path("states.csv").c_str()));
  run.write_manifest();
  return kExitOk;
}

int cmd_project(const Flags& flags) {
  ModelHandle h;
  load(flags, h);
  int coordinate = BDP_TOTAL;
  if (flags.coordinate != "total") {
    try {
      std::size_t used = 0;
      coordinate = std::stoi(flags.coordinate, &used);
      if (used != flags.coordinate.size() || coordinate < 1) throw std::exception();
    } catch (const std::exception&) {
      throw Failure(BDP_ERR_INVALID_ARGUMENT,
                    "projection must be a type number >= 1 or 'total', got '" +
                        flags.coordinate + "'");
    }
  }
  std::size_t d = 0;
  check(bdp_model_dimension(h.model, &d));
  if (coordinate != BDP_TOTAL && static_cast<std::size_t>(coordinate) > d) {
    throw Failure(BDP_ERR_INVALID_ARGUMENT,
                  "type " + flags.coordinate + " outside 1.." + std::to_string(d));
  }
  Run run("project " + flags.coordinate, flags);
  TrajectoryHandle t;
  solve(h, t);
  check(bdp_projection_write_csv(
      t.trajectory, coordinate,
      run.path("projection_" + flags.coordinate + ".csv").c_str()));
  run.write_manifest();
  return kExitOk;
}

int cmd_bounds(const Flags& flags) {
  ModelHandle h;
  load(flags, h);
  Run run("bounds", flags);
  std::size_t needed = 0;
  check(bdp_bounds_report(h.model, nullptr, 0, &needed));
  std::string report(needed, '\0');
  check(bdp_bounds_report(h.model, report.data(), report.size(), &needed));
  report.resize(needed - 1);
  std::cout << report;
  std::ofstream out(run.path("bounds.txt"), std::ios::binary);
  out << report;
  out.close();
  if (!out) throw Failure(BDP_ERR_IO, "cannot write bounds.txt");
  run.write_manifest();
  return kExitOk;
}

int cmd_simulate(const Flags& flags) {
  ModelHandle h;
  load(flags, h);
  Run run("simulate", flags);
  check(bdp_simulate_write_csv(h.model, flags.threads,
                               run.path("empirical.csv").c_str()));
  run.write_manifest();
  return kExitOk;
}

int cmd_verify(const Flags& flags) {
  // The built-in suite always runs at its reference path count; --paths and
  // the config settings only affect the config-specific checks.
  ModelHandle h;
  const std::uint64_t seed = flags.seed.value_or(1);
  const std::uint64_t paths = 100000;
  if (!flags.config.empty()) load(flags, h);
  Run run("verify", flags);
  const std::string report = run.path("report.txt");
  int all_pass = 0;
  check(bdp_verify(h.model, seed, paths, flags.threads, report.c_str(), &all_pass));
  std::ifstream in(report, std::ios::binary);
  std::cout << in.rdbuf();
  run.write_manifest();
  std::cout << (all_pass ? "verify: all checks passed\n"
                         : "verify: at least one check failed\n");
  return all_pass ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transient analysis of inhomogeneous birth-death processes", "bdp"};
  app.set_version_flag("--version", std::string(bdp_version()));
  app.require_subcommand(1, 1);

  Flags flags;
  app.add_option("--config", flags.config, "YAML model description");
  app.add_option("--out", flags.out, "Output directory")->capture_default_str();
  app.add_option("--seed", flags.seed, "Random seed (overrides config)");
  app.add_option("--grid-step", flags.grid_step, "Output grid step (overrides config)");
  app.add_option("--horizon", flags.horizon, "Time horizon (overrides config)");
  app.add_option("--paths", flags.paths, "Monte Carlo paths (overrides config)");
  app.add_option("--threads", flags.threads, "Worker threads, 0 = all cores")
      ->capture_default_str();

  auto* solve = app.add_subcommand("solve", "Integrate the forward equation");
  auto* project = app.add_subcommand("project", "Marginals and effective rates");
  project->add_option("coordinate", flags.coordinate, "Type number or 'total'")
      ->required();
  auto* bounds = app.add_subcommand("bounds", "Print ergodicity certificates");
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo marginals");
  auto* verify = app.add_subcommand("verify", "Run the acceptance checks");
  for (CLI::App* sub : {solve, project, bounds, simulate, verify}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (solve->parsed()) return cmd_solve(flags);
    if (project->parsed()) return cmd_project(flags);
    if (bounds->parsed()) return cmd_bounds(flags);
    if (simulate->parsed()) return cmd_simulate(flags);
    return cmd_verify(flags);
  } catch (const Failure& f) {
    std::cerr << "error: " << f.message() << "\n";
    return exit_code_for(f.status());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}
