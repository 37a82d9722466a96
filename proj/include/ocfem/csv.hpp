#pragma once

#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "ocfem/study.hpp"

namespace ocfem::csv {

/// 17 significant digits: enough to round-trip any double exactly.
inline std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

inline std::string fe_function_csv(const FeFunction& f) {
  std::string s = "x,y,value\n";
  for (int i = 0; i < f.mesh->n_vertices(); ++i) {
    const Vec2& v = f.mesh->vertices[i];
    s += num(v.x) + "," + num(v.y) + "," + num(f.coeffs[i]) + "\n";
  }
  return s;
}

/// Nonzero Dirac weights of the state-constraint multiplier, one row per
/// carrying node, ordered by node index.
inline std::string multiplier_csv(const KktSolution& sol) {
  std::string s = "node_index,x,y,mu\n";
  for (const auto& [j, w] : sol.mu) {
    const Vec2& v = sol.y.mesh->vertices[j];
    s += std::to_string(j) + "," + num(v.x) + "," + num(v.y) + "," + num(w) + "\n";
  }
  return s;
}

inline std::string study_csv(const StudyReport& report) {
  std::string s = "level,h,E_uL2,E_yH1,E_yL2,E_yLinf,p_norm_L4,eta,classification\n";
  for (const LevelRecord& r : report.levels) {
    s += std::to_string(r.level) + "," + num(r.h) + "," + num(r.errors.E_uL2) + "," +
         num(r.errors.E_yH1) + "," + num(r.errors.E_yL2) + "," + num(r.errors.E_yLinf) + "," +
         num(r.certificate.p_norm) + "," + num(r.certificate.eta_value) + "," +
         to_string(r.certificate.classification) + "\n";
  }
  return s;
}

inline std::string eoc_csv(const StudyReport& report) {
  std::string s = "pair,EOC_uL2,EOC_yH1,EOC_yL2,EOC_yLinf\n";
  for (const EocRecord& r : report.eoc_rows) {
    s += std::to_string(r.from_level) + "-" + std::to_string(r.to_level) + "," +
         num(r.eoc_uL2) + "," + num(r.eoc_yH1) + "," + num(r.eoc_yL2) + "," +
         num(r.eoc_yLinf) + "\n";
  }
  return s;
}

inline std::string certificate_csv(int level, double h, const CertificateVerdict& v) {
  std::string s = "level,h,p_norm_Lq,eta,margin,classification\n";
  s += std::to_string(level) + "," + num(h) + "," + num(v.p_norm) + "," + num(v.eta_value) +
       "," + num(v.margin) + "," + to_string(v.classification) + "\n";
  return s;
}

struct SweepRow {
  double alpha;
  double p_norm;
  double eta_value;
};

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string s = "alpha,p_norm_L4,eta\n";
  for (const SweepRow& r : rows)
    s += num(r.alpha) + "," + num(r.p_norm) + "," + num(r.eta_value) + "\n";
  return s;
}

}  // namespace ocfem::csv
