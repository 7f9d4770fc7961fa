#pragma once

// small RFC 4180 reader: quoted fields, "" escapes, embedded commas and
// newlines, optional CRLF endings.

#include <cstddef>
#include <istream>
#include <string>
#include <vector>

#include "briefkit/errors.hpp"

namespace briefkit::csv {

class CsvError : public Error {
 public:
  CsvError(std::size_t line, const std::string& detail)
      : Error("csv line " + std::to_string(line) + ": " + detail),
        line(line) {}
  std::size_t line;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  // reads one logical row; returns false at end of input. the row a quoted
  // field starts on is the one reported for diagnostics.
  bool next_row(std::vector<std::string>& row) {
    row.clear();
    int c = in_.get();
    if (c == std::istream::traits_type::eof()) return false;
    row_start_line_ = line_;
    std::string field;
    bool quoted = false;
    bool row_done = false;
    while (!row_done) {
      if (c == std::istream::traits_type::eof()) {
        if (quoted) throw CsvError(row_start_line_, "unterminated quote");
        row_done = true;
        break;
      }
      char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          int peek = in_.peek();
          if (peek == '"') {
            field.push_back('"');
            in_.get();
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line_;
          field.push_back(ch);
        }
      } else if (ch == '"') {
        if (!field.empty())
          throw CsvError(line_, "quote inside unquoted field");
        quoted = true;
      } else if (ch == ',') {
        row.push_back(std::move(field));
        field.clear();
      } else if (ch == '\n') {
        ++line_;
        row_done = true;
        break;
      } else if (ch == '\r') {
        // swallow; the \n that follows ends the row
      } else {
        field.push_back(ch);
      }
      if (!row_done) c = in_.get();
    }
    row.push_back(std::move(field));
    return true;
  }

  std::size_t row_line() const { return row_start_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 1;
  std::size_t row_start_line_ = 1;
};

}  // namespace briefkit::csv
