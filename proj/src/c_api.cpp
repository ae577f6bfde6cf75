// SPDX-License-Identifier: Apache-2.0

#include "bdp/bdp.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <memory>
#include <new>
#include <sstream>
#include <string>

#include "acceptance.hpp"
#include "bounds.hpp"
#include "config.hpp"
#include "error.hpp"
#include "io.hpp"
#include "kolmogorov.hpp"
#include "mc_oracle.hpp"
#include "projection.hpp"

struct bdp_model {
  bdp::ModelConfig config;
};

struct bdp_trajectory {
  std::shared_ptr<const bdp::ModelConfig> config;
  bdp::Trajectory trajectory;
};

namespace {

thread_local std::string last_error;

bdp_status fail(bdp_status status, const char* message) {
  last_error = message;
  return status;
}

template <class F>
bdp_status guard(F&& body) {
  try {
    body();
    last_error.clear();
    return BDP_OK;
  } catch (const bdp::Error& e) {
    return fail(static_cast<bdp_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(BDP_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(BDP_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(BDP_ERR_INTERNAL, "unknown error");
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw bdp::InvalidArgument(what);
}

bdp::Coordinate coordinate_of(const bdp::ModelConfig& config, int c) {
  if (c == BDP_TOTAL) return bdp::Coordinate::total();
  if (c < 1 || static_cast<std::size_t>(c) > config.model.dimension()) {
    throw bdp::InvalidArgument("coordinate " + std::to_string(c) +
                               " outside 1..dimension");
  }
  return bdp::Coordinate::type(static_cast<std::size_t>(c - 1));
}

bdp::RateBounds bounds_of(const bdp::ModelConfig& config, int c) {
  const bdp::Coordinate coord = coordinate_of(config, c);
  return coord.is_total() ? bdp::projected_bounds(config.model, coord)
                          : config.model.bounds(coord.index());
}

void validate_settings(const bdp_settings& s) {
  require(std::isfinite(s.horizon) && s.horizon > 0.0, "horizon must be > 0");
  require(std::isfinite(s.grid_step) && s.grid_step > 0.0 &&
              s.grid_step <= s.horizon,
          "grid_step must lie in (0, horizon]");
  require(s.tail_threshold > 0.0 && s.tail_threshold <= 1.0,
          "tail_threshold must lie in (0, 1]");
  require(std::isfinite(s.slack) && s.slack >= 0.0, "slack must be >= 0");
  require(s.paths > 0, "paths must be > 0");
}

void write_stream(const char* path, const std::ostringstream& out) {
  require(path != nullptr, "path is null");
  bdp::write_file(path, out.str());
}

}  // namespace

extern "C" {

const char* bdp_version(void) { return BDP_VERSION_STRING; }

const char* bdp_status_name(bdp_status status) {
  switch (status) {
    case BDP_OK: return "ok";
    case BDP_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BDP_ERR_CONFIG: return "config error";
    case BDP_ERR_BOUND_VIOLATION: return "bound violation";
    case BDP_ERR_NOT_APPLICABLE: return "not applicable";
    case BDP_ERR_NUMERICAL: return "numerical error";
    case BDP_ERR_TRUNCATION: return "truncation error";
    case BDP_ERR_IO: return "i/o error";
    case BDP_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* bdp_last_error(void) { return last_error.c_str(); }

bdp_status bdp_model_load(const char* path, bdp_model** out) {
  return guard([&] {
    require(path != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto m = std::make_unique<bdp_model>(bdp_model{bdp::load_config(path)});
    *out = m.release();
  });
}

bdp_status bdp_model_parse(const char* yaml, const char* source_name,
                           bdp_model** out) {
  return guard([&] {
    require(yaml != nullptr && out != nullptr, "null argument");
    *out = nullptr;
    auto m = std::make_unique<bdp_model>(bdp_model{
        bdp::parse_config(yaml, source_name ? source_name : "<string>")});
    *out = m.release();
  });
}

void bdp_model_free(bdp_model* model) { delete model; }

bdp_status bdp_model_dimension(const bdp_model* model, size_t* out) {
  return guard([&] {
    require(model != nullptr && out != nullptr, "null argument");
    *out = model->config.model.dimension();
  });
}

bdp_status bdp_model_space_size(const bdp_model* model, size_t* out) {
  return guard([&] {
    require(model != nullptr && out != nullptr, "null argument");
    *out = model->config.space.size();
  });
}

bdp_status bdp_model_write_states_csv(const bdp_model* model,
                                      const char* path) {
  return guard([&] {
    require(model != nullptr, "null argument");
    std::ostringstream out;
    bdp::write_states_csv(out, model->config.space);
    write_stream(path, out);
  });
}

bdp_status bdp_model_get_settings(const bdp_model* model, bdp_settings* out) {
  return guard([&] {
    require(model != nullptr && out != nullptr, "null argument");
    const bdp::RunSettings& s = model->config.settings;
    *out = bdp_settings{s.horizon, s.grid_step, s.tail_threshold,
                        s.slack,   s.seed,      s.paths};
  });
}

bdp_status bdp_model_set_settings(bdp_model* model, const bdp_settings* settings) {
  return guard([&] {
    require(model != nullptr && settings != nullptr, "null argument");
    validate_settings(*settings);
    bdp::RunSettings& s = model->config.settings;
    s.horizon = settings->horizon;
    s.grid_step = settings->grid_step;
    s.tail_threshold = settings->tail_threshold;
    s.slack = settings->slack;
    s.seed = settings->seed;
    s.paths = settings->paths;
  });
}

bdp_status bdp_solve(const bdp_model* model, bdp_tail_policy policy,
                     bdp_trajectory** out) {
  return guard([&] {
    require(model != nullptr && out != nullptr, "null argument");
    require(policy == BDP_TAIL_ERROR || policy == BDP_TAIL_STOP,
            "unknown tail policy");
    *out = nullptr;
    auto config = std::make_shared<const bdp::ModelConfig>(model->config);
    const bdp::RunSettings& s = config->settings;
    bdp::IntegrateOptions options;
    options.tail_threshold = s.tail_threshold;
    options.tail_policy = policy == BDP_TAIL_STOP ? bdp::TailPolicy::stop
                                                  : bdp::TailPolicy::error;
    const auto grid = bdp::make_grid(s.horizon, s.grid_step);
    auto traj = std::make_unique<bdp_trajectory>();
    traj->trajectory = bdp::integrate(
        config->model, config->space,
        bdp::ProbabilityVector::point_mass(config->space, config->initial), grid,
        options);
    traj->config = std::move(config);
    *out = traj.release();
  });
}

void bdp_trajectory_free(bdp_trajectory* trajectory) { delete trajectory; }

bdp_status bdp_trajectory_size(const bdp_trajectory* trajectory, size_t* n_points) {
  return guard([&] {
    require(trajectory != nullptr && n_points != nullptr, "null argument");
    *n_points = trajectory->trajectory.grid.size();
  });
}

bdp_status bdp_trajectory_stopped(const bdp_trajectory* trajectory, int* stopped,
                                  double* stopped_at) {
  return guard([&] {
    require(trajectory != nullptr && stopped != nullptr && stopped_at != nullptr,
            "null argument");
    const auto& s = trajectory->trajectory.stopped_at;
    *stopped = s.has_value() ? 1 : 0;
    *stopped_at = s.value_or(std::numeric_limits<double>::quiet_NaN());
  });
}

bdp_status bdp_trajectory_point(const bdp_trajectory* trajectory, size_t index,
                                double* time, double* tail_mass) {
  return guard([&] {
    require(trajectory != nullptr, "null argument");
    const bdp::Trajectory& t = trajectory->trajectory;
    require(index < t.grid.size(), "index out of range");
    if (time) *time = t.grid[index];
    if (tail_mass) *tail_mass = t.tail_mass[index];
  });
}

bdp_status bdp_trajectory_marginal(const bdp_trajectory* trajectory, size_t index,
                                   int coordinate, double* values,
                                   size_t capacity, size_t* length) {
  return guard([&] {
    require(trajectory != nullptr && length != nullptr, "null argument");
    require(values != nullptr || capacity == 0, "null buffer");
    const bdp::Trajectory& t = trajectory->trajectory;
    require(index < t.snapshots.size(), "index out of range");
    const bdp::ModelConfig& c = *trajectory->config;
    const bdp::Marginal x =
        bdp::marginal(t.snapshots[index], c.space, coordinate_of(c, coordinate));
    *length = x.values.size();
    const std::size_t n = std::min(capacity, x.values.size());
    for (std::size_t i = 0; i < n; ++i) values[i] = x.values[i];
  });
}

bdp_status bdp_trajectory_write_csv(const bdp_trajectory* trajectory,
                                    const char* path) {
  return guard([&] {
    require(trajectory != nullptr, "null argument");
    std::ostringstream out;
    bdp::write_trajectory_csv(out, trajectory->trajectory);
    write_stream(path, out);
  });
}

bdp_status bdp_projection_write_csv(const bdp_trajectory* trajectory,
                                    int coordinate, const char* path) {
  return guard([&] {
    require(trajectory != nullptr, "null argument");
    const bdp::ModelConfig& c = *trajectory->config;
    const auto snapshots = bdp::project_trajectory(
        trajectory->trajectory, c.model, c.space, coordinate_of(c, coordinate));
    std::ostringstream out;
    bdp::write_projection_csv(out, snapshots);
    write_stream(path, out);
  });
}

bdp_status bdp_null_certificate_get(const bdp_model* model, int type,
                                    bdp_null_certificate* out) {
  return guard([&] {
    require(model != nullptr && out != nullptr, "null argument");
    const auto cert = bdp::null_certificate(bounds_of(model->config, type),
                                            type == BDP_TOTAL ? 0 : type - 1);
    *out = bdp_null_certificate{cert.sigma, cert.alpha_star};
  });
}

bdp_status bdp_weak_certificate_get(const bdp_model* model, int type,
                                    bdp_weak_certificate* out) {
  return guard([&] {
    require(model != nullptr && out != nullptr, "null argument");
    const auto cert = bdp::weak_certificate(bounds_of(model->config, type),
                                            type == BDP_TOTAL ? 0 : type - 1);
    *out = bdp_weak_certificate{cert.beta, cert.alpha_low};
  });
}

bdp_status bdp_bounds_report(const bdp_model* model, char* buffer,
                             size_t capacity, size_t* needed) {
  return guard([&] {
    require(model != nullptr, "null argument");
    require(buffer != nullptr || capacity == 0, "null buffer");
    const std::string report = bdp::certificate_report(model->config.model);
    if (needed) *needed = report.size() + 1;
    if (capacity > 0) {
      const std::size_t n = std::min(capacity - 1, report.size());
      std::memcpy(buffer, report.data(), n);
      buffer[n] = '\0';
    }
  });
}

bdp_status bdp_simulate_write_csv(const bdp_model* model, unsigned threads,
                                  const char* path) {
  return guard([&] {
    require(model != nullptr, "null argument");
    const bdp::ModelConfig& c = model->config;
    bdp::SimConfig cfg;
    cfg.initial = c.initial;
    cfg.horizon = c.settings.horizon;
    cfg.n_paths = c.settings.paths;
    cfg.seed = c.settings.seed;
    cfg.sample_times = c.settings.effective_sample_times();
    cfg.threads = threads;
    std::ostringstream out;
    bdp::write_empirical_csv(out, bdp::simulate_paths(c.model, c.space, cfg));
    write_stream(path, out);
  });
}

bdp_status bdp_verify(const bdp_model* model, uint64_t seed, uint64_t paths,
                      unsigned threads, const char* report_path, int* all_pass) {
  return guard([&] {
    require(all_pass != nullptr, "null argument");
    require(paths > 0, "paths must be > 0");
    *all_pass = 0;
    bdp::acceptance::Options options;
    options.seed = seed;
    options.mc_paths = paths;
    options.threads = threads;
    auto results = bdp::acceptance::run_builtin(options);
    if (model != nullptr) {
      auto extra = bdp::acceptance::check_config(model->config, threads);
      results.insert(results.end(), extra.begin(), extra.end());
    }
    std::ostringstream out;
    out << bdp::acceptance::format_report(results);
    write_stream(report_path, out);
    bool pass = !results.empty();
    for (const auto& r : results) pass = pass && r.pass;
    *all_pass = pass ? 1 : 0;
  });
}

bdp_status bdp_log_norm(const double* column_major, size_t n, double* out) {
  return guard([&] {
    require(column_major != nullptr && out != nullptr, "null argument");
    *out = bdp::log_norm(std::span<const double>(column_major, n * n), n);
  });
}

bdp_status bdp_tail_probability_bound(double sigma, double alpha_star, int k,
                                      int n, double t, double* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    require(std::isfinite(sigma) && sigma > 0.0 && sigma < 1.0,
            "sigma must lie in (0, 1)");
    require(std::isfinite(alpha_star) && alpha_star > 0.0,
            "alpha_star must be > 0");
    bdp::NullErgodicCertificate cert;
    cert.sigma = sigma;
    cert.alpha_star = alpha_star;
    *out = bdp::tail_probability_bound(cert, k, n, t);
  });
}

}  // extern "C"
