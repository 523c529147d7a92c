#include "tptkit/report.hpp"

#include <fmt/format.h>

#include <cmath>
#include <limits>
#include <ostream>

namespace tptkit {

namespace {

double rel(double e, double a) {
  const double d = std::abs(e - a);
  if (a == 0.0) return d == 0.0 ? 0.0 : std::numeric_limits<double>::quiet_NaN();
  return d / std::abs(a);
}

ReportRow base(std::string name, std::string stage, ReportRow::Check c, double e, double se,
               double a, double tol) {
  ReportRow r;
  r.name = std::move(name);
  r.stage = std::move(stage);
  r.check = c;
  r.empirical = e;
  r.stderr_ = se;
  r.analytic = a;
  r.rel_diff = rel(e, a);
  r.tolerance = tol;
  return r;
}

std::string num(double v) {
  if (!std::isfinite(v)) return "null";
  return fmt::format("{:.17g}", v);
}

std::string csv_num(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.17g}", v);
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          out += fmt::format("\\u{:04x}", static_cast<int>(c));
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

void write_rows(std::ostream& os, const std::vector<ReportRow>& rows) {
  os << "[";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    os << (i ? ",\n    " : "\n    ");
    os << "{\"name\": " << quote(r.name) << ", \"stage\": " << quote(r.stage)
       << ", \"check\": " << quote(to_string(r.check)) << ", \"empirical\": " << num(r.empirical)
       << ", \"stderr\": " << num(r.stderr_) << ", \"analytic\": " << num(r.analytic)
       << ", \"rel_diff\": " << num(r.rel_diff) << ", \"tolerance\": " << num(r.tolerance)
       << ", \"bias\": " << num(r.bias) << ", \"pass\": " << (r.pass ? "true" : "false");
    if (!r.note.empty()) os << ", \"note\": " << quote(r.note);
    os << "}";
  }
  os << (rows.empty() ? "]" : "\n  ]");
}

}  // namespace

const char* to_string(ReportRow::Check c) {
  switch (c) {
    case ReportRow::Check::Relative: return "relative";
    case ReportRow::Check::Sigma: return "sigma";
    case ReportRow::Check::AtMost: return "at_most";
    case ReportRow::Check::Exceeds: return "exceeds";
    case ReportRow::Check::Equal: return "equal";
  }
  return "?";
}

bool row_consistent(const ReportRow& r) {
  bool ok = false;
  switch (r.check) {
    case ReportRow::Check::Relative: ok = !std::isnan(r.rel_diff) && r.rel_diff <= r.tolerance; break;
    case ReportRow::Check::Sigma:
      ok = std::abs(r.empirical - r.analytic) <= r.tolerance * r.stderr_ + r.bias;
      break;
    case ReportRow::Check::AtMost: ok = r.empirical <= r.tolerance; break;
    case ReportRow::Check::Exceeds: ok = r.empirical > r.tolerance; break;
    case ReportRow::Check::Equal: ok = r.empirical == r.analytic; break;
  }
  return ok == r.pass;
}

ReportRow relative_row(std::string name, std::string stage, double e, double se, double a,
                       double tol) {
  ReportRow r = base(std::move(name), std::move(stage), ReportRow::Check::Relative, e, se, a, tol);
  r.pass = !std::isnan(r.rel_diff) && r.rel_diff <= tol;
  return r;
}

ReportRow sigma_row(std::string name, std::string stage, double e, double se, double a, double k,
                    double bias) {
  ReportRow r = base(std::move(name), std::move(stage), ReportRow::Check::Sigma, e, se, a, k);
  r.bias = bias;
  r.pass = std::abs(e - a) <= k * se + bias;
  return r;
}

ReportRow at_most_row(std::string name, std::string stage, double value, double tol) {
  ReportRow r = base(std::move(name), std::move(stage), ReportRow::Check::AtMost, value, 0.0, 0.0, tol);
  r.pass = value <= tol;
  return r;
}

ReportRow exceeds_row(std::string name, std::string stage, double value, double tol) {
  ReportRow r = base(std::move(name), std::move(stage), ReportRow::Check::Exceeds, value, 0.0, 0.0, tol);
  r.pass = value > tol;
  return r;
}

ReportRow equal_row(std::string name, std::string stage, double e, double a) {
  ReportRow r = base(std::move(name), std::move(stage), ReportRow::Check::Equal, e, 0.0, a, 0.0);
  r.pass = e == a;
  return r;
}

std::size_t Report::failures() const {
  std::size_t n = 0;
  for (const auto& r : identities) n += !r.pass;
  for (const auto& r : rows) n += !r.pass;
  return n;
}

bool Report::all_pass() const { return failures() == 0; }

const ReportRow* Report::find(const std::string& name) const {
  for (const auto& r : identities) {
    if (r.name == name) return &r;
  }
  for (const auto& r : rows) {
    if (r.name == name) return &r;
  }
  return nullptr;
}

std::string hex64(std::uint64_t v) { return fmt::format("{:016x}", v); }

void write_report_json(std::ostream& os, const Report& rep) {
  os << "{\n";
  os << "  \"schema\": " << quote(Report::schema) << ",\n";
  os << "  \"version\": " << quote(Report::version) << ",\n";
  os << "  \"command\": " << quote(rep.command) << ",\n";
  os << "  \"config_hash\": " << quote(rep.config_hash) << ",\n";
  os << "  \"model\": " << quote(rep.model) << ",\n";
  os << "  \"model_hash\": " << quote(rep.model_hash) << ",\n";
  os << "  \"seed\": " << rep.seed << ",\n";
  os << "  \"provenance\": {";
  for (std::size_t i = 0; i < rep.provenance.size(); ++i) {
    os << (i ? ",\n    " : "\n    ") << quote(rep.provenance[i].first) << ": "
       << quote(rep.provenance[i].second);
  }
  os << (rep.provenance.empty() ? "},\n" : "\n  },\n");
  os << "  \"statistics\": {";
  for (std::size_t i = 0; i < rep.statistics.size(); ++i) {
    os << (i ? ",\n    " : "\n    ") << quote(rep.statistics[i].first) << ": "
       << num(rep.statistics[i].second);
  }
  os << (rep.statistics.empty() ? "},\n" : "\n  },\n");
  os << "  \"identities\": ";
  write_rows(os, rep.identities);
  os << ",\n  \"rows\": ";
  write_rows(os, rep.rows);
  os << ",\n  \"summary\": {\"identities\": " << rep.identities.size()
     << ", \"rows\": " << rep.rows.size() << ", \"failures\": " << rep.failures()
     << ", \"pass\": " << (rep.all_pass() ? "true" : "false") << "}\n";
  os << "}\n";
}

void write_report_csv(std::ostream& os, const Report& rep) {
  os << "block,name,stage,check,empirical,stderr,analytic,rel_diff,tolerance,bias,pass\n";
  auto emit = [&](const char* block, const std::vector<ReportRow>& rows) {
    for (const auto& r : rows) {
      os << block << ',' << r.name << ',' << r.stage << ',' << to_string(r.check) << ','
         << csv_num(r.empirical) << ',' << csv_num(r.stderr_) << ',' << csv_num(r.analytic) << ','
         << csv_num(r.rel_diff) << ',' << csv_num(r.tolerance) << ',' << csv_num(r.bias) << ','
         << (r.pass ? 1 : 0) << '\n';
    }
  };
  emit("identity", rep.identities);
  emit("row", rep.rows);
}

}  // namespace tptkit
