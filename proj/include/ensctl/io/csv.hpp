#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "ensctl/error.hpp"
#include "ensctl/precision.hpp"

namespace ensctl {

/// In-memory table written as RFC 4180 CSV with `\n` line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

  class Row {
   public:
    explicit Row(std::vector<std::string>& cells) : cells_(cells) {}
    Row& operator<<(const Real& v) { return push(format(v)); }
    Row& operator<<(const std::string& v) { return push(v); }
    Row& operator<<(const char* v) { return push(v); }
    Row& operator<<(std::uint64_t v) { return push(std::to_string(v)); }
    Row& operator<<(std::int64_t v) { return push(std::to_string(v)); }
    Row& operator<<(unsigned v) { return push(std::to_string(v)); }
    Row& operator<<(int v) { return push(std::to_string(v)); }
    Row& operator<<(bool v) { return push(v ? "true" : "false"); }

   private:
    Row& push(std::string v) {
      cells_.push_back(std::move(v));
      return *this;
    }
    std::vector<std::string>& cells_;
  };

  /// Appends an empty row and returns a stream-style appender for it.
  Row add_row() {
    rows_.emplace_back();
    return Row(rows_.back());
  }

  [[nodiscard]] const std::vector<std::string>& header() const noexcept { return header_; }
  [[nodiscard]] const std::vector<std::vector<std::string>>& rows() const noexcept { return rows_; }
  [[nodiscard]] bool empty() const noexcept { return rows_.empty(); }

  /// 30 significant digits, scientific notation, '.' as decimal separator.
  static std::string format(const Real& v) { return to_string(v, 29); }

  [[nodiscard]] std::string render() const {
    std::string out;
    append_line(out, header_);
    for (const auto& r : rows_) {
      if (r.size() != header_.size()) {
        throw IoError("csv: row has " + std::to_string(r.size()) + " fields, header has " +
                      std::to_string(header_.size()));
      }
      append_line(out, r);
    }
    return out;
  }

 private:
  static void append_field(std::string& out, const std::string& f) {
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out += f;
      return;
    }
    out += '"';
    for (char c : f) {
      if (c == '"') out += '"';
      out += c;
    }
    out += '"';
  }

  static void append_line(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      append_field(out, fields[i]);
    }
    out += '\n';
  }

  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw IoError("write failed for " + path);
}

inline void emit_csv(const CsvTable& table, const std::string& path) { write_text_file(path, table.render()); }

/// Parses RFC 4180 text (quoted fields, doubled quotes, embedded newlines).
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    any = true;
    if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
      any = false;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted) throw IoError("csv: unterminated quoted field");
  if (any) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace ensctl
