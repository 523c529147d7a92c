#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace tptkit {

/// One compared quantity. `pass` is derived from the numbers by the factory
/// functions below and never set by hand.
struct ReportRow {
  enum class Check { Relative, Sigma, AtMost, Exceeds, Equal };
  std::string name;
  std::string stage;
  Check check = Check::Relative;
  double empirical = 0.0;
  double stderr_ = 0.0;
  double analytic = 0.0;
  double rel_diff = 0.0;
  double tolerance = 0.0;
  double bias = 0.0;  // deterministic allowance added to a Sigma check
  bool pass = false;
  std::string note;
};

const char* to_string(ReportRow::Check c);

/// |e - a| <= tol |a|
ReportRow relative_row(std::string name, std::string stage, double empirical, double stderr_,
                       double analytic, double tol);
/// |e - a| <= k stderr + bias
ReportRow sigma_row(std::string name, std::string stage, double empirical, double stderr_,
                    double analytic, double k, double bias = 0.0);
/// value <= tol
ReportRow at_most_row(std::string name, std::string stage, double value, double tol);
/// value > tol
ReportRow exceeds_row(std::string name, std::string stage, double value, double tol);
/// empirical == analytic (counts)
ReportRow equal_row(std::string name, std::string stage, double empirical, double analytic);
/// Recomputes pass from the numbers.
bool row_consistent(const ReportRow& row);

struct Report {
  static constexpr const char* schema = "tptkit-report/1";
  static constexpr const char* version = "0.1.0";
  std::string command;
  std::string config_hash;  // 16 hex digits
  std::string model;
  std::string model_hash;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> provenance;
  std::vector<std::pair<std::string, double>> statistics;
  std::vector<ReportRow> identities;  // field-level identities
  std::vector<ReportRow> rows;        // empirical vs analytic comparisons

  bool all_pass() const;
  std::size_t failures() const;
  const ReportRow* find(const std::string& name) const;
};

std::string hex64(std::uint64_t v);
/// Fixed key order, doubles at 17 significant digits, no timestamps.
void write_report_json(std::ostream& os, const Report& report);
void write_report_csv(std::ostream& os, const Report& report);

}  // namespace tptkit
