#include "phdiff/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace phdiff {
namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%-10.3e", v);
  return buf;
}

// JSON has no NaN/Inf; keep them visible as strings.
nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
}

}  // namespace

std::string to_string(CheckStatus status) {
  switch (status) {
    case CheckStatus::kPass: return "pass";
    case CheckStatus::kFail: return "fail";
    case CheckStatus::kSkipped: return "skipped";
  }
  return "unknown";
}

CheckRecord make_check(std::string name, double residual, double tolerance, std::string detail,
                       bool gated) {
  CheckRecord r;
  r.name = std::move(name);
  r.residual = residual;
  r.tolerance = tolerance;
  r.detail = std::move(detail);
  r.gated = gated;
  r.status = residual <= tolerance ? CheckStatus::kPass : CheckStatus::kFail;
  return r;
}

void VerificationReport::add(const std::vector<CheckRecord>& records) {
  records_.insert(records_.end(), records.begin(), records.end());
}

bool VerificationReport::passed() const noexcept { return failures() == 0; }

std::size_t VerificationReport::failures() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(records_.begin(), records_.end(), [](const auto& r) { return r.failed(); }));
}

nlohmann::json VerificationReport::to_json() const {
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& r : records_) {
    checks.push_back({{"name", r.name},
                      {"status", to_string(r.status)},
                      {"gated", r.gated},
                      {"residual", number(r.residual)},
                      {"tolerance", number(r.tolerance)},
                      {"detail", r.detail},
                      {"context", r.context}});
  }
  return {{"passed", passed()},
          {"failures", failures()},
          {"context", context_},
          {"checks", std::move(checks)}};
}

std::string VerificationReport::to_text() const {
  std::size_t width = 5;
  for (const auto& r : records_) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::string(width, ' ').replace(0, 5, "check") << "  status   gated  residual    tolerance   detail\n";
  for (const auto& r : records_) {
    std::string name = r.name;
    name.resize(width, ' ');
    std::string status = to_string(r.status);
    status.resize(7, ' ');
    out << name << "  " << status << "  " << (r.gated ? "yes  " : "no   ") << "  "
        << sci(r.residual) << "  " << sci(r.tolerance) << "  " << r.detail << '\n';
  }
  out << (passed() ? "PASSED" : "FAILED") << " (" << failures() << " gated failure(s), "
      << records_.size() << " checks)\n";
  return out.str();
}

}  // namespace phdiff
