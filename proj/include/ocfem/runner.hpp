#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "ocfem/certificate.hpp"
#include "ocfem/config.hpp"
#include "ocfem/csv.hpp"
#include "ocfem/study.hpp"
#include "ocfem/version.hpp"

namespace ocfem {

namespace detail {

/// FNV-1a, 64 bit. Stamps the manifest so identical configs are recognizable.
inline std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string manifest_text(const RunConfig& cfg, const std::vector<std::string>& files) {
  std::string s;
  s += std::string("version = ") + version_string + "\n";
  s += "config_hash = fnv1a:" + fnv1a_hex(cfg.source_text) + "\n";
  s += std::string("mode = ") + to_string(cfg.mode) + "\n";
  if (cfg.mode == RunMode::study) {
    s += "levels = " + std::to_string(cfg.level_lo) + ".." + std::to_string(cfg.level_hi) + "\n";
    s += "reference_level = " + std::to_string(cfg.reference_level) + "\n";
  } else {
    s += "level = " + std::to_string(cfg.level) + "\n";
  }
  if (cfg.mode == RunMode::alpha_sweep) {
    s += "alphas =";
    for (double a : cfg.alphas) s += " " + csv::num(a);
    s += "\n";
  } else {
    s += "alpha = " + csv::num(cfg.problem.alpha) + "\n";
  }
  s += "quad_order = " + std::to_string(cfg.problem.quad_order) + "\n";
  s += "tol_kkt = " + csv::num(cfg.pdas.tol_kkt) + "\n";
  s += "max_outer = " + std::to_string(cfg.pdas.max_outer) + "\n";
  s += "max_newton_inner = " + std::to_string(cfg.pdas.max_newton_inner) + "\n";
  s += "c_pdas = " + (cfg.pdas.c_pdas ? csv::num(*cfg.pdas.c_pdas) : std::string("1/alpha")) + "\n";
  if (cfg.C_q) s += "C_q = " + csv::num(*cfg.C_q) + "\n";
  for (const std::string& f : files) s += "artifact = " + f + "\n";
  return s;
}

}  // namespace detail

/// Mode-specific sanity checks the flat parser cannot do on its own.
inline void validate_for_mode(const RunConfig& cfg) {
  // n = 2^12 is ~16.8M vertices, past what a single desk run can hold.
  constexpr int level_cap = 12;
  const auto check_level = [&](int L, const char* what) {
    if (L < 1 || L > level_cap)
      throw ConfigError(std::string(what) + " must be between 1 and " +
                        std::to_string(level_cap) + ", got " + std::to_string(L));
  };
  switch (cfg.mode) {
    case RunMode::study:
      check_level(cfg.level_lo, "study levels lower bound");
      check_level(cfg.level_hi, "study levels upper bound");
      check_level(cfg.reference_level, "reference_level");
      if (cfg.level_lo > cfg.level_hi)
        throw ConfigError("study levels range must satisfy A <= B");
      if (cfg.reference_level <= cfg.level_hi + 1)
        throw ConfigError("reference_level must exceed the finest study level by at least 2");
      break;
    case RunMode::alpha_sweep:
      check_level(cfg.level, "level");
      if (cfg.alphas.empty()) throw ConfigError("sweep-alpha requires a nonempty alphas list");
      for (double a : cfg.alphas)
        if (!(a > 0.0)) throw ConfigError("sweep-alpha: every alpha must be positive");
      break;
    default:
      check_level(cfg.level, "level");
  }
}

/// Runs one configured job and persists its artifacts under cfg.output_dir.
/// Returns the artifact file names (manifest last). Identical configs produce
/// byte-identical artifacts; nothing time- or host-dependent is written.
inline std::vector<std::string> execute_run(const RunConfig& cfg) {
  validate_for_mode(cfg);
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) throw IoError("cannot create output directory: " + cfg.output_dir);

  std::vector<std::string> files;
  const auto emit = [&](const std::string& name, const std::string& content) {
    csv::write_file((fs::path(cfg.output_dir) / name).string(), content);
    files.push_back(name);
  };

  switch (cfg.mode) {
    case RunMode::solve: {
      const MeshPtr m = uniform_triangulation(1 << cfg.level);
      const KktSolution sol = solve_kkt(cfg.problem, m, cfg.pdas);
      const CertificateVerdict v = certify(sol, cfg.problem, m, cfg.C_q);
      emit("u.csv", csv::fe_function_csv(sol.u));
      emit("y.csv", csv::fe_function_csv(sol.y));
      emit("p.csv", csv::fe_function_csv(sol.p));
      emit("multiplier.csv", csv::multiplier_csv(sol));
      emit("certificate.csv", csv::certificate_csv(cfg.level, m->h, v));
      break;
    }
    case RunMode::certify: {
      const MeshPtr m = uniform_triangulation(1 << cfg.level);
      const KktSolution sol = solve_kkt(cfg.problem, m, cfg.pdas);
      const CertificateVerdict v = certify(sol, cfg.problem, m, cfg.C_q);
      emit("certificate.csv", csv::certificate_csv(cfg.level, m->h, v));
      break;
    }
    case RunMode::study: {
      const StudyReport rep = run_study(cfg.problem, cfg.level_lo, cfg.level_hi,
                                        cfg.reference_level, cfg.pdas, cfg.C_q);
      emit("study.csv", csv::study_csv(rep));
      emit("eoc.csv", csv::eoc_csv(rep));
      break;
    }
    case RunMode::alpha_sweep: {
      const MeshPtr m = uniform_triangulation(1 << cfg.level);
      std::vector<csv::SweepRow> rows;
      for (double a : cfg.alphas) {
        ProblemSpec spec = cfg.problem;
        spec.alpha = a;
        const KktSolution sol = solve_kkt(spec, m, cfg.pdas);
        const CertificateVerdict v = certify(sol, spec, m, cfg.C_q);
        rows.push_back({a, v.p_norm, v.eta_value});
      }
      emit("sweep.csv", csv::sweep_csv(rows));
      break;
    }
  }

  csv::write_file((fs::path(cfg.output_dir) / "manifest.txt").string(),
                  detail::manifest_text(cfg, files));
  files.push_back("manifest.txt");
  return files;
}

}  // namespace ocfem
