// Runs every acceptance criterion and prints one line per criterion.
// Usage: acceptance <path-to-bdp-cli> <config-dir>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "acceptance.hpp"

namespace fs = std::filesystem;
using bdp::acceptance::CheckResult;
using bdp::acceptance::Options;

namespace {

struct Criterion {
  int number;
  std::optional<double> limit_seconds;
  std::function<CheckResult()> run;
};

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string file_lines(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (line.rfind("file = ", 0) == 0) out += line + "\n";
  }
  return out;
}

CheckResult determinism(const std::string& cli, const std::string& configs) {
  const fs::path root = fs::temp_directory_path() / "bdp_acceptance_determinism";
  fs::remove_all(root);
  std::vector<int> codes;
  for (const char* run : {"a", "b"}) {
    const std::string cmd = fmt::format(
        "{} verify --config {}/weak_ergodic.yaml --seed 1 --out {} > {} 2>&1", cli,
        configs, (root / run).string(), (root / (std::string(run) + ".log")).string());
    fs::create_directories(root);
    const int status = std::system(cmd.c_str());
    codes.push_back(WIFEXITED(status) ? WEXITSTATUS(status) : -1);
  }
  const std::string a = read(root / "a" / "report.txt");
  const std::string b = read(root / "b" / "report.txt");
  const std::string ma = file_lines(read(root / "a" / "manifest.txt"));
  const std::string mb = file_lines(read(root / "b" / "manifest.txt"));
  const bool pass = !a.empty() && a == b && !ma.empty() && ma == mb &&
                    codes[0] == codes[1] && codes[0] == 0;
  return {"c8_determinism", pass,
          fmt::format("verify runs=2 exit_codes={},{} report_bytes={} identical={} "
                      "manifest_checksums_identical={}",
                      codes[0], codes[1], a.size(), a == b ? "yes" : "no",
                      ma == mb ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 3) {
    std::fprintf(stderr, "usage: %s <bdp-cli> <config-dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const std::string configs = argv[2];
  const Options options;

  namespace a = bdp::acceptance;
  const std::vector<Criterion> criteria{
      {1, 10.0, [&] { return a::generator_conservation(options); }},
      {2, 30.0, [&] { return a::ode_correctness(options); }},
      {3, 120.0, [&] { return a::projection_consistency(options); }},
      {4, std::nullopt, [&] { return a::two_sided_bounds(options); }},
      {5, 60.0, [&] { return a::null_ergodic_decay(options); }},
      {6, 60.0, [&] { return a::weak_ergodic_decay(options); }},
      {7, 300.0, [&] { return a::oracle_agreement(options); }},
      {8, std::nullopt, [&] { return determinism(cli, configs); }},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = {"criterion", false, fmt::format("error: {}", e.what())};
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = !c.limit_seconds || seconds < *c.limit_seconds;
    const bool pass = r.pass && in_time;
    if (!pass) ++failures;
    std::printf("CRITERION %d %s %s runtime=%.2fs limit=%s %s\n", c.number,
                pass ? "PASS" : "FAIL", r.name.c_str(), seconds,
                c.limit_seconds ? fmt::format("{}s", *c.limit_seconds).c_str() : "none",
                r.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
