#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace phdiff {

// 17 significant digits: doubles round-trip exactly.
std::string format_double(double value);

// Short human-readable form ("%g", 3 significant digits) for messages.
std::string format_compact(double value);

// Accumulates CSV text in memory; nothing touches disk until write_file_atomic.
class CsvBuilder {
 public:
  explicit CsvBuilder(const std::vector<std::string>& header);

  CsvBuilder& cell(double value);
  CsvBuilder& cell(std::size_t value);
  CsvBuilder& cell(std::string_view value);
  void end_row();

  const std::string& str() const noexcept { return text_; }

 private:
  void separator();

  std::string text_;
  bool row_open_ = false;
};

// Writes to a sibling temporary and renames, so readers never observe a
// partial file. Throws Error(kIo).
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace phdiff
