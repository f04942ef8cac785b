#pragma once

// Minimal CSV with '#' provenance comments: unique headers, rectangular
// numeric columns, '.' decimal separator, deterministic %.12g formatting.

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sivnems {

struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

class CsvTable {
 public:
  CsvTable() = default;
  explicit CsvTable(std::vector<std::string> headers) : headers_(std::move(headers)) {
    std::set<std::string> seen;
    for (const auto& h : headers_)
      if (!seen.insert(h).second) throw CsvError("duplicate column header: " + h);
  }

  void add_comment(const std::string& text) { comments_.push_back(text); }

  void add_row(const std::vector<double>& row) {
    if (row.size() != headers_.size())
      throw CsvError("row length does not match header count");
    rows_.push_back(row);
  }

  const std::vector<std::string>& headers() const { return headers_; }
  const std::vector<std::string>& comments() const { return comments_; }
  const std::vector<std::vector<double>>& rows() const { return rows_; }
  size_t row_count() const { return rows_.size(); }

  bool has_column(const std::string& name) const { return column_index(name) >= 0; }

  std::vector<double> column(const std::string& name) const {
    const int idx = column_index(name);
    if (idx < 0) throw CsvError("missing column: " + name);
    std::vector<double> out;
    out.reserve(rows_.size());
    for (const auto& r : rows_) out.push_back(r[static_cast<size_t>(idx)]);
    return out;
  }

  std::string to_string() const {
    std::ostringstream out;
    for (const auto& c : comments_) out << "# " << c << "\n";
    for (size_t i = 0; i < headers_.size(); ++i)
      out << (i ? "," : "") << headers_[i];
    out << "\n";
    char buf[40];
    for (const auto& row : rows_) {
      for (size_t i = 0; i < row.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%.12g", row[i]);
        out << (i ? "," : "") << buf;
      }
      out << "\n";
    }
    return out.str();
  }

  void write_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CsvError("cannot open output file: " + path);
    out << to_string();
  }

  static CsvTable parse_string(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    CsvTable t;
    bool have_header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line[0] == '#') {
        t.comments_.push_back(line.size() > 1 ? line.substr(line[1] == ' ' ? 2 : 1) : "");
        continue;
      }
      std::vector<std::string> cells = split(line);
      if (!have_header) {
        std::vector<std::string> comments = std::move(t.comments_);
        t = CsvTable(cells);
        t.comments_ = std::move(comments);
        have_header = true;
        continue;
      }
      if (cells.size() != t.headers_.size())
        throw CsvError("line " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.headers_.size()) + " cells, got " +
                       std::to_string(cells.size()));
      std::vector<double> row;
      row.reserve(cells.size());
      for (const auto& c : cells) {
        try {
          size_t pos = 0;
          row.push_back(std::stod(c, &pos));
          if (pos != c.size()) throw std::invalid_argument("trailing characters");
        } catch (const std::exception&) {
          throw CsvError("line " + std::to_string(lineno) + ": not a number: '" + c + "'");
        }
      }
      t.rows_.push_back(std::move(row));
    }
    if (!have_header) throw CsvError("empty CSV: no header row");
    return t;
  }

  static CsvTable parse_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CsvError("cannot open input file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_string(buf.str());
  }

 private:
  int column_index(const std::string& name) const {
    for (size_t i = 0; i < headers_.size(); ++i)
      if (headers_[i] == name) return static_cast<int>(i);
    return -1;
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
  }

  std::vector<std::string> headers_;
  std::vector<std::vector<double>> rows_;
  std::vector<std::string> comments_;
};

}  // namespace sivnems
