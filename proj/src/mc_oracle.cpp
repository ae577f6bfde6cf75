// SPDX-License-Identifier: Apache-2.0

#include "mc_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <thread>

#include <fmt/format.h>

#include "error.hpp"
#include "philox.hpp"

namespace bdp {

namespace {

// Level-occupancy counts: counts[(sample * n_marginals + marginal) * stride + k].
struct Tally {
  std::vector<std::uint64_t> counts;
};

class PathSimulator {
 public:
  PathSimulator(const ModelSpec& model, const TruncatedSpace& space,
                const SimConfig& config, std::size_t stride)
      : model_(model),
        space_(space),
        config_(config),
        stride_(stride),
        n_marginals_(space.dimension() + 1),
        dominating_rate_(static_cast<double>(space.dimension()) *
                         (model.global_birth_cap() + model.global_death_cap())) {}

  void run(std::uint64_t path, Tally& tally) const {
    PhiloxStream rng(config_.seed, path);
    std::size_t state = space_.index_of(config_.initial);
    double t = 0.0;
    std::size_t next_sample = 0;
    const std::size_t d = space_.dimension();
    const auto& samples = config_.sample_times;

    while (next_sample < samples.size()) {
      double t_next = std::numeric_limits<double>::infinity();
      if (dominating_rate_ > 0.0) {
        t_next = t - std::log(rng.uniform_open_zero()) / dominating_rate_;
      }
      while (next_sample < samples.size() && samples[next_sample] < t_next) {
        record(next_sample, state, tally);
        ++next_sample;
      }
      if (next_sample >= samples.size() || t_next > config_.horizon) break;
      t = t_next;

      const MultiIndex& m = space_.state_of(state);
      double u = rng.uniform() * dominating_rate_;
      for (std::size_t j = 0; j < d; ++j) {
        const Rates r = eval_rates(model_, j, m, t);
        if (u < r.birth) {
          const std::size_t up = space_.up(state, j);
          if (up != TruncatedSpace::npos) state = up;
          break;
        }
        u -= r.birth;
        if (u < r.death) {
          state = space_.down(state, j);
          break;
        }
        u -= r.death;
      }
    }
  }

 private:
  void record(std::size_t sample, std::size_t state, Tally& tally) const {
    const MultiIndex& m = space_.state_of(state);
    const std::size_t base = sample * n_marginals_;
    for (std::size_t j = 0; j < space_.dimension(); ++j) {
      ++tally.counts[(base + j) * stride_ + static_cast<std::size_t>(m[j])];
    }
    ++tally.counts[(base + space_.dimension()) * stride_ +
                   static_cast<std::size_t>(m.total())];
  }

  const ModelSpec& model_;
  const TruncatedSpace& space_;
  const SimConfig& config_;
  std::size_t stride_;
  std::size_t n_marginals_;
  double dominating_rate_;
};

}  // namespace

EmpiricalMarginals simulate_paths(const ModelSpec& model,
                                  const TruncatedSpace& space,
                                  const SimConfig& config) {
  if (config.n_paths == 0) throw InvalidArgument("n_paths must be >= 1");
  if (!(config.horizon > 0.0) || !std::isfinite(config.horizon)) {
    throw InvalidArgument("simulation horizon must be positive");
  }
  if (model.dimension() != space.dimension()) {
    throw InvalidArgument("model and space dimensions differ");
  }
  if (!space.contains(config.initial)) {
    throw InvalidArgument(fmt::format("initial state {} lies outside the box",
                                      config.initial.to_string()));
  }
  for (std::size_t i = 0; i < config.sample_times.size(); ++i) {
    const double s = config.sample_times[i];
    if (!(s >= 0.0 && s <= config.horizon)) {
      throw InvalidArgument(
          fmt::format("sample time {} outside [0, {}]", s, config.horizon));
    }
    if (i > 0 && !(s > config.sample_times[i - 1])) {
      throw InvalidArgument("sample times must be strictly increasing");
    }
  }
  if (model.global_birth_cap() + model.global_death_cap() == 0.0) {
    for (std::size_t j = 0; j < model.dimension(); ++j) {
      const Rates r = eval_rates(model, j, config.initial, 0.0);
      if (r.birth != 0.0 || r.death != 0.0) {
        throw InvalidArgument("dominating rate is zero but rules are not");
      }
    }
  }

  const auto caps = space.caps();
  const std::size_t stride =
      static_cast<std::size_t>(std::accumulate(caps.begin(), caps.end(), 0)) + 1;
  const std::size_t n_marginals = space.dimension() + 1;
  const std::size_t n_samples = config.sample_times.size();
  const std::size_t table_size = n_samples * n_marginals * stride;

  unsigned threads = config.threads != 0 ? config.threads
                                         : std::thread::hardware_concurrency();
  threads = std::max(1u, threads);
  threads = static_cast<unsigned>(
      std::min<std::uint64_t>(threads, config.n_paths));

  PathSimulator sim(model, space, config, stride);
  std::vector<Tally> tallies(threads);
  for (Tally& t : tallies) t.counts.assign(table_size, 0);
  std::vector<std::exception_ptr> errors(threads);

  auto worker = [&](unsigned w) {
    try {
      const std::uint64_t lo = config.n_paths * w / threads;
      const std::uint64_t hi = config.n_paths * (w + 1) / threads;
      for (std::uint64_t p = lo; p < hi; ++p) sim.run(p, tallies[w]);
    } catch (...) {
      errors[w] = std::current_exception();
    }
  };
  if (threads == 1) {
    worker(0);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(worker, w);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<std::uint64_t> counts(table_size, 0);
  for (const Tally& t : tallies) {
    for (std::size_t i = 0; i < table_size; ++i) counts[i] += t.counts[i];
  }

  EmpiricalMarginals out;
  out.sample_times = config.sample_times;
  out.n_paths = config.n_paths;
  out.seed = config.seed;
  const double n = static_cast<double>(config.n_paths);
  for (std::size_t c = 0; c < n_marginals; ++c) {
    EmpiricalMarginal em;
    em.coordinate =
        c < space.dimension() ? Coordinate::type(c) : Coordinate::total();
    const auto levels = static_cast<std::size_t>(em.coordinate.max_level(space)) + 1;
    em.estimate.assign(n_samples, std::vector<double>(levels, 0.0));
    em.standard_error.assign(n_samples, std::vector<double>(levels, 0.0));
    for (std::size_t s = 0; s < n_samples; ++s) {
      for (std::size_t k = 0; k < levels; ++k) {
        const double p =
            static_cast<double>(counts[(s * n_marginals + c) * stride + k]) / n;
        em.estimate[s][k] = p;
        em.standard_error[s][k] = std::sqrt(p * (1.0 - p) / n);
      }
    }
    out.marginals.push_back(std::move(em));
  }
  return out;
}

double total_variation(const std::vector<double>& a,
                       const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw InvalidArgument("total_variation: size mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

}  // namespace bdp
