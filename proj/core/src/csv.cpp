#include "phdiff/csv.hpp"

#include <cstdio>
#include <fstream>

#include "phdiff/error.hpp"

namespace phdiff {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_compact(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", value);
  return buf;
}

CsvBuilder::CsvBuilder(const std::vector<std::string>& header) {
  for (const auto& name : header) cell(name);
  end_row();
}

void CsvBuilder::separator() {
  if (row_open_) text_ += ',';
  row_open_ = true;
}

CsvBuilder& CsvBuilder::cell(double value) {
  separator();
  text_ += format_double(value);
  return *this;
}

CsvBuilder& CsvBuilder::cell(std::size_t value) {
  separator();
  text_ += std::to_string(value);
  return *this;
}

CsvBuilder& CsvBuilder::cell(std::string_view value) {
  separator();
  text_ += value;
  return *this;
}

void CsvBuilder::end_row() {
  text_ += '\n';
  row_open_ = false;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create directory " + path.parent_path().string());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorCode::kIo, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot rename " + tmp.string() + " to " + path.string());
}

}  // namespace phdiff
