#include <doctest.h>

#include <bdp/bdp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

namespace {

const char* kNull = R"(dimension: 1
caps: [30]
initial: [3]
horizon: 2
grid_step: 0.1
types:
  - birth: {kind: constant, params: [4]}
    death: {kind: constant, params: [1]}
    bounds: {birth_lo: 4, birth_hi: 4, death_lo: 1, death_hi: 1}
)";

std::string read(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Model {
  bdp_model* m = nullptr;
  ~Model() { bdp_model_free(m); }
};

struct Traj {
  bdp_trajectory* t = nullptr;
  ~Traj() { bdp_trajectory_free(t); }
};

}  // namespace

TEST_CASE("version and status names") {
  CHECK(std::string(bdp_version()).size() > 0);
  CHECK(std::string(bdp_status_name(BDP_ERR_CONFIG)) == "config error");
}

TEST_CASE("parse, inspect and change settings") {
  Model h;
  REQUIRE(bdp_model_parse(kNull, "null.yaml", &h.m) == BDP_OK);
  size_t d = 0;
  size_t n = 0;
  CHECK(bdp_model_dimension(h.m, &d) == BDP_OK);
  CHECK(bdp_model_space_size(h.m, &n) == BDP_OK);
  CHECK(d == 1);
  CHECK(n == 31);
  bdp_settings s{};
  CHECK(bdp_model_get_settings(h.m, &s) == BDP_OK);
  CHECK(s.horizon == 2.0);
  CHECK(s.grid_step == 0.1);
  s.grid_step = -1.0;
  CHECK(bdp_model_set_settings(h.m, &s) == BDP_ERR_INVALID_ARGUMENT);
  CHECK(std::string(bdp_last_error()).find("grid_step") != std::string::npos);
  s.grid_step = 0.5;
  CHECK(bdp_model_set_settings(h.m, &s) == BDP_OK);
  CHECK(std::string(bdp_last_error()).empty());
}

TEST_CASE("errors map to status codes") {
  bdp_model* m = nullptr;
  CHECK(bdp_model_load("/no/such/file.yaml", &m) == BDP_ERR_CONFIG);
  CHECK(m == nullptr);
  CHECK(std::string(bdp_last_error()).find("/no/such/file.yaml") != std::string::npos);
  CHECK(bdp_model_parse("dimension: x", "bad.yaml", &m) == BDP_ERR_CONFIG);
  CHECK(std::string(bdp_last_error()).find("bad.yaml:1:") == 0);
  CHECK(bdp_model_parse(nullptr, nullptr, &m) == BDP_ERR_INVALID_ARGUMENT);
  CHECK(bdp_model_dimension(nullptr, nullptr) == BDP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("solve and read marginals") {
  Model h;
  REQUIRE(bdp_model_parse(kNull, "null.yaml", &h.m) == BDP_OK);
  Traj t;
  REQUIRE(bdp_solve(h.m, BDP_TAIL_STOP, &t.t) == BDP_OK);
  size_t points = 0;
  CHECK(bdp_trajectory_size(t.t, &points) == BDP_OK);
  CHECK(points == 21);
  int stopped = 1;
  double at = 0.0;
  CHECK(bdp_trajectory_stopped(t.t, &stopped, &at) == BDP_OK);
  CHECK(stopped == 0);
  CHECK(std::isnan(at));
  double time = -1.0;
  double tail = -1.0;
  CHECK(bdp_trajectory_point(t.t, 20, &time, &tail) == BDP_OK);
  CHECK(time == 2.0);
  CHECK(tail >= 0.0);
  CHECK(bdp_trajectory_point(t.t, 21, &time, &tail) == BDP_ERR_INVALID_ARGUMENT);

  size_t len = 0;
  CHECK(bdp_trajectory_marginal(t.t, 0, 1, nullptr, 0, &len) == BDP_OK);
  CHECK(len == 31);
  double x[31];
  CHECK(bdp_trajectory_marginal(t.t, 0, 1, x, 31, &len) == BDP_OK);
  CHECK(x[3] == 1.0);
  CHECK(bdp_trajectory_marginal(t.t, 0, 2, x, 31, &len) == BDP_ERR_INVALID_ARGUMENT);
  CHECK(bdp_trajectory_marginal(t.t, 0, BDP_TOTAL, x, 31, &len) == BDP_OK);

  const std::string csv = "c_api_traj.csv";
  CHECK(bdp_trajectory_write_csv(t.t, csv.c_str()) == BDP_OK);
  const std::string body = read(csv);
  CHECK(body.rfind("t,", 0) == 0);
  std::remove(csv.c_str());
  const std::string proj = "c_api_proj.csv";
  CHECK(bdp_projection_write_csv(t.t, 1, proj.c_str()) == BDP_OK);
  CHECK(read(proj).rfind("t,k,x_k,lambda_tilde_k,mu_tilde_k,defined", 0) == 0);
  std::remove(proj.c_str());
  CHECK(bdp_trajectory_write_csv(t.t, "/no/such/dir/x.csv") == BDP_ERR_IO);

  const std::string states = "c_api_states.csv";
  CHECK(bdp_model_write_states_csv(h.m, states.c_str()) == BDP_OK);
  const std::string listing = read(states);
  CHECK(listing.rfind("index,m_1\n0,0\n1,1\n", 0) == 0);
  CHECK(std::count(listing.begin(), listing.end(), '\n') == 32);
  std::remove(states.c_str());
  CHECK(bdp_model_write_states_csv(nullptr, states.c_str()) == BDP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("tail policy error") {
  Model h;
  REQUIRE(bdp_model_parse(kNull, "null.yaml", &h.m) == BDP_OK);
  bdp_settings s{};
  bdp_model_get_settings(h.m, &s);
  s.horizon = 20.0;
  REQUIRE(bdp_model_set_settings(h.m, &s) == BDP_OK);
  Traj t;
  CHECK(bdp_solve(h.m, BDP_TAIL_ERROR, &t.t) == BDP_ERR_TRUNCATION);
  CHECK(t.t == nullptr);
  REQUIRE(bdp_solve(h.m, BDP_TAIL_STOP, &t.t) == BDP_OK);
  int stopped = 0;
  double at = 0.0;
  bdp_trajectory_stopped(t.t, &stopped, &at);
  CHECK(stopped == 1);
  CHECK(at > 0.0);
}

TEST_CASE("certificates through the C API") {
  Model h;
  REQUIRE(bdp_model_parse(kNull, "null.yaml", &h.m) == BDP_OK);
  bdp_null_certificate c{};
  CHECK(bdp_null_certificate_get(h.m, 1, &c) == BDP_OK);
  CHECK(c.sigma == 0.5);
  CHECK(c.alpha_star == 1.0);
  bdp_weak_certificate w{};
  CHECK(bdp_weak_certificate_get(h.m, 1, &w) == BDP_ERR_NOT_APPLICABLE);
  CHECK(std::string(bdp_last_error()).find("L_j >= m_j") != std::string::npos);
  CHECK(bdp_null_certificate_get(h.m, 2, &c) == BDP_ERR_INVALID_ARGUMENT);

  size_t needed = 0;
  CHECK(bdp_bounds_report(h.m, nullptr, 0, &needed) == BDP_OK);
  REQUIRE(needed > 1);
  std::string buf(needed, '\0');
  CHECK(bdp_bounds_report(h.m, buf.data(), buf.size(), &needed) == BDP_OK);
  CHECK(buf.find("type1.sigma = 0.5") != std::string::npos);
  CHECK(buf.find("type1.null_ergodic = applicable") != std::string::npos);
  char tiny[8];
  CHECK(bdp_bounds_report(h.m, tiny, sizeof tiny, &needed) == BDP_OK);
  CHECK(std::string(tiny).size() == 7);
}

TEST_CASE("primitives through the C API") {
  const double a[4] = {-2.0, 1.0, 1.0, -3.0};
  double v = 0.0;
  CHECK(bdp_log_norm(a, 2, &v) == BDP_OK);
  CHECK(v == -1.0);
  CHECK(bdp_tail_probability_bound(0.5, 1.0, 10, 2, 1.0, &v) == BDP_OK);
  CHECK(v == doctest::Approx(std::pow(0.5, 8) * std::exp(-1.0)));
  CHECK(bdp_tail_probability_bound(1.5, 1.0, 10, 2, 1.0, &v) == BDP_ERR_INVALID_ARGUMENT);
}

TEST_CASE("simulate writes the empirical table") {
  Model h;
  REQUIRE(bdp_model_parse(kNull, "null.yaml", &h.m) == BDP_OK);
  bdp_settings s{};
  bdp_model_get_settings(h.m, &s);
  s.paths = 1000;
  REQUIRE(bdp_model_set_settings(h.m, &s) == BDP_OK);
  const std::string a = "c_api_mc_a.csv";
  const std::string b = "c_api_mc_b.csv";
  CHECK(bdp_simulate_write_csv(h.m, 1, a.c_str()) == BDP_OK);
  CHECK(bdp_simulate_write_csv(h.m, 2, b.c_str()) == BDP_OK);
  const std::string body = read(a);
  CHECK(body.rfind("t,coordinate,k,estimate,stderr,n_paths,seed", 0) == 0);
  CHECK(body == read(b));
  std::remove(a.c_str());
  std::remove(b.c_str());
}
