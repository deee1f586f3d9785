#pragma once

// CSV and JSON emission. Numbers in CSV use 17 significant digits with `.`
// as decimal separator; lines end in LF.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace nmbath::cli {

std::string format_number(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  std::size_t rows() const noexcept { return rows_; }
  const std::vector<std::string>& header() const noexcept { return header_; }
  std::string str() const { return body_; }

 private:
  std::vector<std::string> header_;
  std::string body_;
  std::size_t rows_ = 0;
};

/// JSON number, or null when x is not finite.
nlohmann::ordered_json json_number(double x);

void write_text(const std::filesystem::path& path, const std::string& text);
void write_csv(const std::filesystem::path& path, const CsvTable& table);
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);

}  // namespace nmbath::cli
