#include "gtube/report.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include <cmath>
#include <ostream>

namespace gtube {

const CheckResult& Report::add(std::string name, std::string anchor, double residual,
                               double tolerance) {
  const bool passed = std::isfinite(residual) && residual <= tolerance;
  checks_.push_back({std::move(name), std::move(anchor), residual, tolerance, passed});
  return checks_.back();
}

const CheckResult& Report::add_flag(std::string name, std::string anchor, bool ok) {
  return add(std::move(name), std::move(anchor), ok ? 0.0 : 1.0, 0.0);
}

bool Report::all_passed() const noexcept { return failures() == 0; }

std::size_t Report::failures() const noexcept {
  std::size_t n = 0;
  for (const auto& c : checks_) n += !c.passed;
  return n;
}

std::string format_line(const CheckResult& check) {
  return fmt::format("{} {} {} residual={:.3e} tolerance={:.3e}", check.passed ? "PASS" : "FAIL",
                     check.anchor, check.name, check.residual, check.tolerance);
}

void write_text(std::ostream& out, const Report& report) {
  for (const auto& c : report.checks()) out << format_line(c) << '\n';
}

nlohmann::json to_json(const CheckResult& check) {
  return {{"name", check.name},
          {"anchor", check.anchor},
          {"residual", check.residual},
          {"tolerance", check.tolerance},
          {"passed", check.passed}};
}

nlohmann::json to_json(const Report& report) {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : report.checks()) checks.push_back(to_json(c));
  return {{"checks", checks}, {"passed", report.all_passed()}, {"failures", report.failures()}};
}

nlohmann::json to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json to_json(const FatouData& fd) {
  nlohmann::json atoms = nlohmann::json::array();
  for (const auto& a : fd.atoms) atoms.push_back({{"t", a.t}, {"mass_matrix", to_json(a.mass)}});
  return {{"A", to_json(fd.A)},
          {"atoms", atoms},
          {"interval", {fd.a, fd.b}},
          {"tau_schedule", fd.tau_schedule},
          {"continuous_mass", fd.continuous_mass},
          {"continuous_flag", fd.continuous_flag},
          {"pole_set_consistent", fd.pole_set_consistent}};
}

nlohmann::json to_json(const GrowthReport& report) {
  nlohmann::json j = {{"class", to_string(report.cls)},
                      {"residual", report.residual},
                      {"slope", report.slope},
                      {"polynomial_residual", report.polynomial_residual},
                      {"exponential_residual", report.exponential_residual},
                      {"window", {report.window_lo, report.window_hi}}};
  if (report.cls == GrowthClass::polynomial) {
    j["degree"] = report.degree;
  } else {
    j["rate"] = report.rate;
  }
  return j;
}

nlohmann::json to_json(const GromovReport& report) {
  nlohmann::json j = {{"sphere_dimension", report.sphere_dimension},
                      {"K", report.K},
                      {"C", report.C},
                      {"holds", report.holds},
                      {"betti_partial_sums", report.betti},
                      {"rhs", report.rhs}};
  j["first_failure"] = report.first_failure ? nlohmann::json(*report.first_failure) : nlohmann::json();
  return j;
}

nlohmann::json to_json(const GromovSearch& search) {
  nlohmann::json reports = nlohmann::json::array();
  for (const auto& r : search.reports) reports.push_back(to_json(r));
  return {{"reports", reports},
          {"minimal_C", search.minimal_C ? nlohmann::json(*search.minimal_C) : nlohmann::json()}};
}

void write_curve_csv(std::ostream& out, const CountingCurve& curve,
                     const std::vector<std::string>& comments) {
  for (const auto& c : comments) out << "# " << c << '\n';
  out << "T,value\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    fmt::print(out, "{:.17g},{:.17g}\n", curve.T[i], curve.values[i]);
  }
}

}  // namespace gtube
