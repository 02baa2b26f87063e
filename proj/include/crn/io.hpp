#pragma once

#include <initializer_list>
#include <string>
#include <vector>

namespace crn {

// Scientific notation with 17 significant digits.
std::string fmt_num(double x);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}
  void add_row(const std::vector<double>& values);
  void add_row(const std::vector<std::string>& cells);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::vector<std::string> header_;
  std::vector<std::string> rows_;
};

// Write to a temporary sibling and rename over the target.
void atomic_write(const std::string& path, const std::string& content);

}  // namespace crn
