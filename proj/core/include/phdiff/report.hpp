#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace phdiff {

enum class CheckStatus { kPass, kFail, kSkipped };

std::string to_string(CheckStatus status);

// One executed check. Ungated records are descriptive and never fail a run.
struct CheckRecord {
  std::string name;
  CheckStatus status = CheckStatus::kPass;
  bool gated = true;
  double residual = 0.0;
  double tolerance = 0.0;
  std::string detail;
  nlohmann::json context = nlohmann::json::object();

  bool failed() const noexcept { return gated && status == CheckStatus::kFail; }
};

// Pass when residual <= tolerance (NaN residuals fail).
CheckRecord make_check(std::string name, double residual, double tolerance, std::string detail = {},
                       bool gated = true);

class VerificationReport {
 public:
  void add(CheckRecord record) { records_.push_back(std::move(record)); }
  void add(const std::vector<CheckRecord>& records);

  const std::vector<CheckRecord>& records() const noexcept { return records_; }
  bool passed() const noexcept;
  std::size_t failures() const noexcept;

  // Attached to every serialized report (config hash, seed, ...).
  nlohmann::json& context() noexcept { return context_; }
  const nlohmann::json& context() const noexcept { return context_; }

  nlohmann::json to_json() const;
  // Aligned columns for terminals.
  std::string to_text() const;

 private:
  std::vector<CheckRecord> records_;
  nlohmann::json context_ = nlohmann::json::object();
};

}  // namespace phdiff
