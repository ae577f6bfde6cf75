// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "bounds.hpp"
#include "kolmogorov.hpp"
#include "mc_oracle.hpp"
#include "projection.hpp"

namespace bdp {

// All floating-point values are written with 17 significant digits so the
// files round-trip exactly and repeated runs are byte-identical.

/// t,state_0,...,state_{n-1},tail_mass
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

/// index,m_1,...,m_d in enumeration order; index matches state_<index>.
void write_states_csv(std::ostream& out, const TruncatedSpace& space);

/// t,k,x_k,lambda_tilde_k,mu_tilde_k,defined
void write_projection_csv(std::ostream& out,
                          const std::vector<ProjectedSnapshot>& snapshots);

/// t,norm,bound,ratio,pass
void write_decay_csv(std::ostream& out, const DecayReport& report);

/// t,coordinate,k,estimate,stderr,n_paths,seed
void write_empirical_csv(std::ostream& out, const EmpiricalMarginals& table);

/// key = value lines describing both certificates (or why they do not apply)
/// for every type and for the total count.
std::string certificate_report(const ModelSpec& model);

/// Writes via a temporary string and throws IoError if the file cannot be
/// written.
void write_file(const std::string& path, const std::string& contents);

std::string format_double(double v);

}  // namespace bdp
