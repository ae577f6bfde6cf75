// SPDX-License-Identifier: Apache-2.0

#include "io.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "error.hpp"

namespace bdp {

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const std::size_t n =
      trajectory.snapshots.empty() ? 0 : trajectory.snapshots[0].values.size();
  std::string line = "t";
  for (std::size_t i = 0; i < n; ++i) line += fmt::format(",state_{}", i);
  line += ",tail_mass\n";
  out << line;
  for (std::size_t g = 0; g < trajectory.snapshots.size(); ++g) {
    line = format_double(trajectory.grid[g]);
    for (double v : trajectory.snapshots[g].values) {
      line += ',';
      line += format_double(v);
    }
    line += ',';
    line += format_double(trajectory.tail_mass[g]);
    line += '\n';
    out << line;
  }
}

void write_states_csv(std::ostream& out, const TruncatedSpace& space) {
  std::string line = "index";
  for (std::size_t j = 0; j < space.dimension(); ++j) {
    line += fmt::format(",m_{}", j + 1);
  }
  out << line << '\n';
  for (std::size_t i = 0; i < space.size(); ++i) {
    line = std::to_string(i);
    for (int c : space.state_of(i).coords()) line += fmt::format(",{}", c);
    out << line << '\n';
  }
}

void write_projection_csv(std::ostream& out,
                          const std::vector<ProjectedSnapshot>& snapshots) {
  out << "t,k,x_k,lambda_tilde_k,mu_tilde_k,defined\n";
  for (const ProjectedSnapshot& s : snapshots) {
    for (std::size_t k = 0; k < s.marginal.values.size(); ++k) {
      fmt::print(out, "{},{},{},{},{},{}\n", format_double(s.marginal.time), k,
                 format_double(s.marginal.values[k]),
                 format_double(s.rates.birth[k]),
                 format_double(s.rates.death[k]), s.rates.defined[k] ? 1 : 0);
    }
  }
}

void write_decay_csv(std::ostream& out, const DecayReport& report) {
  out << "t,norm,bound,ratio,pass\n";
  for (const DecayPoint& p : report.points) {
    fmt::print(out, "{},{},{},{},{}\n", format_double(p.time),
               format_double(p.norm), format_double(p.bound),
               format_double(p.ratio), p.pass ? 1 : 0);
  }
}

void write_empirical_csv(std::ostream& out, const EmpiricalMarginals& table) {
  out << "t,coordinate,k,estimate,stderr,n_paths,seed\n";
  for (std::size_t s = 0; s < table.sample_times.size(); ++s) {
    for (const EmpiricalMarginal& m : table.marginals) {
      for (std::size_t k = 0; k < m.estimate[s].size(); ++k) {
        fmt::print(out, "{},{},{},{},{},{},{}\n",
                   format_double(table.sample_times[s]), m.coordinate.label(), k,
                   format_double(m.estimate[s][k]),
                   format_double(m.standard_error[s][k]), table.n_paths,
                   table.seed);
      }
    }
  }
}

std::string certificate_report(const ModelSpec& model) {
  std::string out;
  auto emit = [&out](const std::string& key, const std::string& value) {
    out += fmt::format("{} = {}\n", key, value);
  };
  auto describe = [&](const std::string& label, const RateBounds& b,
                      std::size_t index) {
    emit(label + ".birth_lo", format_double(b.birth_lo));
    emit(label + ".birth_hi", format_double(b.birth_hi));
    emit(label + ".death_lo", format_double(b.death_lo));
    emit(label + ".death_hi", format_double(b.death_hi));
    try {
      const auto c = null_certificate(b, index);
      emit(label + ".null_ergodic", "applicable");
      emit(label + ".sigma", format_double(c.sigma));
      emit(label + ".alpha_star", format_double(c.alpha_star));
    } catch (const NotApplicable& e) {
      emit(label + ".null_ergodic", std::string("not applicable: ") + e.what());
    }
    try {
      const auto c = weak_certificate(b, index);
      emit(label + ".weak_ergodic", "applicable");
      emit(label + ".beta", format_double(c.beta));
      emit(label + ".alpha_low", format_double(c.alpha_low));
    } catch (const NotApplicable& e) {
      emit(label + ".weak_ergodic", std::string("not applicable: ") + e.what());
    }
  };
  emit("dimension", std::to_string(model.dimension()));
  emit("global_birth_cap", format_double(model.global_birth_cap()));
  emit("global_death_cap", format_double(model.global_death_cap()));
  for (std::size_t j = 0; j < model.dimension(); ++j) {
    describe(fmt::format("type{}", j + 1), model.bounds(j), j);
  }
  describe("total", projected_bounds(model, Coordinate::total()),
           model.dimension());
  return out;
}

void write_file(const std::string& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(fmt::format("cannot open '{}' for writing", path));
  out << contents;
  out.close();
  if (!out) throw IoError(fmt::format("failed writing '{}'", path));
}

}  // namespace bdp
