#include "kinelo/io.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "kinelo/error.hpp"

namespace kinelo {
namespace {

std::ofstream open_out(const std::string& path) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("output", "cannot write '" + path + "'");
  return out;
}

std::vector<std::vector<double>> read_numeric_csv(const std::string& path,
                                                  const std::string& header) {
  std::ifstream in(path);
  if (!in) throw ConfigError("input", "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("input", "'" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw ConfigError("input", "'" + path + "' header is '" + line + "', expected '" + header + "'");
  }
  const auto cols = static_cast<std::size_t>(std::count(header.begin(), header.end(), ',')) + 1;
  std::vector<std::vector<double>> rows;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto [q, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || q != comma) {
        throw ConfigError("input", path + ":" + std::to_string(lineno) + ": bad number");
      }
      row.push_back(v);
      p = comma + 1;
    }
    if (row.size() != cols) {
      throw ConfigError("input", path + ":" + std::to_string(lineno) + ": expected " +
                                     std::to_string(cols) + " columns");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

// Distinct sorted values, merging entries closer than a relative tolerance.
std::vector<double> distinct(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  const double span = v.empty() ? 0.0 : std::max(1.0, std::abs(v.back() - v.front()));
  for (double x : v) {
    if (out.empty() || x - out.back() > 1e-9 * span) out.push_back(x);
  }
  return out;
}

}  // namespace

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_density_csv(const std::string& path, const DensityField& f) {
  auto out = open_out(path);
  const Grid2D& g = f.grid();
  out << "rho,R,f\n";
  std::string line;
  for (std::size_t i = 0; i < g.n_rho(); ++i) {
    const std::string rho = format_real(g.rho_center(i));
    for (std::size_t j = 0; j < g.n_R(); ++j) {
      line = rho;
      line += ',';
      line += format_real(g.R_center(j));
      line += ',';
      line += format_real(f(i, j));
      line += '\n';
      out << line;
    }
  }
}

DensityField read_density_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, "rho,R,f");
  std::vector<double> rs, Rs;
  for (const auto& r : rows) {
    rs.push_back(r[0]);
    Rs.push_back(r[1]);
  }
  const auto ur = distinct(rs), uR = distinct(Rs);
  if (ur.size() < 2 || uR.size() < 2) {
    throw ConfigError("input", "'" + path + "' needs at least two cells per axis");
  }
  if (rows.size() != ur.size() * uR.size()) {
    throw ConfigError("input", "'" + path + "' is not a full tensor grid");
  }
  const double hr = (ur.back() - ur.front()) / static_cast<double>(ur.size() - 1);
  const double hR = (uR.back() - uR.front()) / static_cast<double>(uR.size() - 1);
  for (std::size_t k = 1; k < ur.size(); ++k) {
    if (std::abs(ur[k] - ur[k - 1] - hr) > 1e-6 * hr) throw ConfigError("input", "non-uniform rho spacing");
  }
  for (std::size_t k = 1; k < uR.size(); ++k) {
    if (std::abs(uR[k] - uR[k - 1] - hR) > 1e-6 * hR) throw ConfigError("input", "non-uniform R spacing");
  }
  const Grid2D grid(ur.front() - 0.5 * hr, ur.back() + 0.5 * hr, ur.size(), uR.front() - 0.5 * hR,
                    uR.back() + 0.5 * hR, uR.size());
  DensityField f(grid);
  for (const auto& r : rows) {
    const auto i = static_cast<std::size_t>(std::lround((r[0] - ur.front()) / hr));
    const auto j = static_cast<std::size_t>(std::lround((r[1] - uR.front()) / hR));
    f(i, j) = r[2];
  }
  return f;
}

void write_trace_csv(const std::string& path, const std::vector<TraceRow>& rows) {
  auto out = open_out(path);
  out << "step,t,mass,clipped_mass,max_f\n";
  for (const auto& r : rows) {
    out << r.step << ',' << format_real(r.t) << ',' << format_real(r.mass) << ','
        << format_real(r.clipped_mass) << ',' << format_real(r.max_f) << '\n';
  }
}

void write_fixed_point_log(const std::string& path, const std::vector<FixedPointLogRow>& rows) {
  auto out = open_out(path);
  out << "outer_iter,norm_diff_beta,moment_beta,residual\n";
  for (const auto& r : rows) {
    out << r.outer_iter << ',' << format_real(r.norm_diff_beta) << ','
        << format_real(r.moment_beta) << ',' << format_real(r.residual) << '\n';
  }
}

void write_diagnostics_csv(const std::string& path, const std::vector<DiagnosticsRow>& rows) {
  auto out = open_out(path);
  out << "t,E_phi_beta,E_inv_finf,beta_norm_diff,mass,com_rho,com_R\n";
  for (const auto& r : rows) {
    out << format_real(r.t) << ',' << format_real(r.E_phi_beta) << ','
        << format_real(r.E_inv_finf) << ',' << format_real(r.beta_norm_diff) << ','
        << format_real(r.mass) << ',' << format_real(r.com_rho) << ',' << format_real(r.com_R)
        << '\n';
  }
}

void write_agents_csv(const std::string& path, const AgentPopulation& pop) {
  auto out = open_out(path);
  out << "id,rho,R\n";
  for (std::size_t k = 0; k < pop.size(); ++k) {
    out << k << ',' << format_real(pop.rho[k]) << ',' << format_real(pop.R[k]) << '\n';
  }
}

AgentPopulation read_agents_csv(const std::string& path) {
  const auto rows = read_numeric_csv(path, "id,rho,R");
  AgentPopulation pop;
  pop.rho.resize(rows.size());
  pop.R.resize(rows.size());
  for (const auto& r : rows) {
    const auto id = static_cast<std::size_t>(r[0]);
    if (r[0] < 0.0 || id >= rows.size() || static_cast<double>(id) != r[0]) {
      throw ConfigError("input", "'" + path + "' has an invalid agent id");
    }
    pop.rho[id] = r[1];
    pop.R[id] = r[2];
  }
  pop.validate();
  return pop;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

std::string git_blob_sha1(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), md);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned char c : md) {
    out += hex[c >> 4];
    out += hex[c & 15];
  }
  return out;
}

}  // namespace kinelo
