#include <doctest.h>

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

// Runs the CLI with stderr folded into the captured output.
Result run(const std::string& args) {
  const std::string cmd = std::string(BDP_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  char buf[4096];
  std::size_t n = 0;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) {
  return std::string(BDP_CONFIG_DIR) + "/" + name;
}

std::string read(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string sha256(const std::string& data) {
  unsigned char d[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), d, &len, EVP_sha256(), nullptr);
  std::string out;
  char hex[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(hex, sizeof hex, "%02x", d[i]);
    out += hex;
  }
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("bdp_cli_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("bounds prints the null-ergodic certificate") {
  const fs::path out = scratch("bounds");
  const Result r = run("bounds --config " + config("null_ergodic.yaml") + " --out " +
                       out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("type1.null_ergodic = applicable") != std::string::npos);
  CHECK(r.output.find("type1.sigma = 0.5") != std::string::npos);
  CHECK(r.output.find("type1.alpha_star = 1") != std::string::npos);
  CHECK(fs::exists(out / "bounds.txt"));
}

TEST_CASE("bounds reports why certificates do not apply") {
  const fs::path out = scratch("na");
  const Result r = run("bounds --config " + config("not_applicable.yaml") + " --out " +
                       out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("type1.weak_ergodic = not applicable: L_j >= m_j") !=
        std::string::npos);
}

TEST_CASE("missing config exits 2 naming the path") {
  const Result r = run("solve --config /no/such/model.yaml --out " +
                       scratch("missing").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("/no/such/model.yaml") != std::string::npos);
}

TEST_CASE("unknown subcommand and schema errors exit 2") {
  CHECK(run("frobnicate").code == 2);
  CHECK(run("").code == 2);
  const fs::path dir = scratch("schema");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "bad.yaml");
    f << "dimension: 1\ncaps: [2]\ntypes:\n  - birth: {kind: nope, params: [1]}\n"
         "    death: {kind: constant, params: [1]}\n"
         "    bounds: {birth_lo: 1, birth_hi: 1, death_lo: 1, death_hi: 1}\n";
  }
  const Result r = run("solve --config " + (dir / "bad.yaml").string() + " --out " +
                       (dir / "out").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("bad.yaml:4:") != std::string::npos);
  CHECK(r.output.find("types[0].birth.kind") != std::string::npos);
  CHECK(run("project 3 --config " + config("weak_ergodic.yaml") + " --out " +
            (dir / "out").string())
            .code == 2);
}

TEST_CASE("solve writes a trajectory and a checksummed manifest") {
  const fs::path out = scratch("solve");
  const Result r = run("solve --config " + config("weak_ergodic.yaml") + " --out " +
                       out.string() + " --horizon 1 --grid-step 0.1");
  REQUIRE(r.code == 0);
  const std::string csv = read(out / "trajectory.csv");
  CHECK(csv.rfind("t,", 0) == 0);
  std::size_t lines = 0;
  for (char c : csv) lines += c == '\n';
  CHECK(lines == 12);
  const std::string manifest = read(out / "manifest.txt");
  CHECK(manifest.find("subcommand = solve") != std::string::npos);
  CHECK(manifest.find("file = trajectory.csv sha256=" + sha256(csv)) != std::string::npos);
  CHECK(manifest.find("tool_version = ") != std::string::npos);

  const std::string states = read(out / "states.csv");
  CHECK(states.rfind("index,m_1,m_2\n0,0,0\n1,0,1\n2,1,0\n", 0) == 0);
  CHECK(states.find("\n185,30,5\n") != std::string::npos);
  CHECK(manifest.find("file = states.csv sha256=" + sha256(states)) != std::string::npos);
}

TEST_CASE("solve stops at the tail threshold with a warning") {
  const fs::path out = scratch("stop");
  const Result r = run("solve --config " + config("null_ergodic.yaml") + " --out " +
                       out.string());
  CHECK(r.code == 0);
  CHECK(r.output.find("warning: tail mass exceeded") != std::string::npos);
}

TEST_CASE("project and simulate outputs are reproducible") {
  const fs::path a = scratch("rep_a");
  const fs::path b = scratch("rep_b");
  for (const fs::path& out : {a, b}) {
    REQUIRE(run("project total --config " + config("weak_ergodic.yaml") + " --out " +
                out.string())
                .code == 0);
    REQUIRE(run("simulate --config " + config("weak_ergodic.yaml") + " --paths 2000 --out " +
                out.string())
                .code == 0);
  }
  CHECK(read(a / "projection_total.csv") == read(b / "projection_total.csv"));
  CHECK(read(a / "empirical.csv") == read(b / "empirical.csv"));
  CHECK(read(a / "empirical.csv").find(",2000,11\n") != std::string::npos);
  CHECK(read(a / "projection_total.csv").rfind("t,k,x_k,lambda_tilde_k,mu_tilde_k,defined", 0) == 0);
}
