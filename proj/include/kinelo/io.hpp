#pragma once

#include <string>
#include <vector>

#include "kinelo/diagnostics.hpp"
#include "kinelo/fv_solver.hpp"
#include "kinelo/grid.hpp"
#include "kinelo/particles.hpp"
#include "kinelo/steady_state.hpp"

namespace kinelo {

/// 17 significant digits, enough to round-trip a double.
std::string format_real(double x);

/// `rho,R,f` rows in storage order (rho slow, R fast).
void write_density_csv(const std::string& path, const DensityField& f);

/// Inverse of write_density_csv. The grid is rebuilt from the distinct cell
/// centres, which must be uniformly spaced with at least two per axis.
DensityField read_density_csv(const std::string& path);

/// `step,t,mass,clipped_mass,max_f`
void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows);

/// `outer_iter,norm_diff_beta,moment_beta,residual`
void write_fixed_point_log(const std::string& path, const std::vector<FixedPointLogRow>& rows);

/// `t,E_phi_beta,E_inv_finf,beta_norm_diff,mass,com_rho,com_R`
void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows);

/// `id,rho,R`
void write_agents_csv(const std::string& path, const AgentPopulation& pop);
AgentPopulation read_agents_csv(const std::string& path);

/// Writes text, creating parent directories.
void write_text(const std::string& path, const std::string& text);

/// SHA-1 of "blob <len>\0" + content, as git computes object ids.
std::string git_blob_sha1(const std::string& content);

}  // namespace kinelo
