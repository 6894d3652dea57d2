#pragma once

#include "gtube/counting.hpp"
#include "gtube/herglotz.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace gtube {

struct CheckResult {
  std::string name;
  std::string anchor;  ///< the identity or property being checked
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
};

class Report {
 public:
  /// Records residual <= tolerance. NaN residuals fail.
  const CheckResult& add(std::string name, std::string anchor, double residual, double tolerance);
  /// Records a boolean property; residual is 0 on success and 1 otherwise.
  const CheckResult& add_flag(std::string name, std::string anchor, bool ok);

  const std::vector<CheckResult>& checks() const noexcept { return checks_; }
  bool all_passed() const noexcept;
  std::size_t failures() const noexcept;
  bool empty() const noexcept { return checks_.empty(); }

 private:
  std::vector<CheckResult> checks_;
};

/// "PASS|FAIL <anchor> <name> residual=<r> tolerance=<t>", one line per check.
std::string format_line(const CheckResult& check);
void write_text(std::ostream& out, const Report& report);

nlohmann::json to_json(const CheckResult& check);
nlohmann::json to_json(const Report& report);
nlohmann::json to_json(const Eigen::MatrixXd& m);
nlohmann::json to_json(const FatouData& fd);
nlohmann::json to_json(const GrowthReport& report);
nlohmann::json to_json(const GromovReport& report);
nlohmann::json to_json(const GromovSearch& search);

/// CSV with columns T,value; values at 17 significant digits, '.' decimal.
void write_curve_csv(std::ostream& out, const CountingCurve& curve,
                     const std::vector<std::string>& comments = {});

}  // namespace gtube
