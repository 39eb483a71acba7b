#pragma once

#include <cctype>
#include <map>
#include <string>
#include <string_view>

namespace ensctl::cli {

/// Line number and raw number text of every value in a JSON document, keyed
/// by JSON pointer. Built by a small scanner over text that has already been
/// parsed successfully, so it does no error recovery of its own.
class SourceMap {
 public:
  explicit SourceMap(std::string text) : text_(std::move(text)) {
    skip_ws();
    if (pos_ < text_.size()) value("");
  }

  /// Line of the value at `pointer`, or of its nearest recorded ancestor.
  [[nodiscard]] std::size_t line(std::string pointer) const {
    for (;;) {
      auto it = lines_.find(pointer);
      if (it != lines_.end()) return it->second;
      if (pointer.empty()) return 1;
      pointer.erase(pointer.rfind('/'));
    }
  }

  /// Number literal exactly as written, or empty if the value is not a number.
  [[nodiscard]] std::string raw_number(const std::string& pointer) const {
    auto it = numbers_.find(pointer);
    return it == numbers_.end() ? std::string() : it->second;
  }

 private:
  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string string_token() {
    std::string out;
    ++pos_;  // opening quote
    while (pos_ < text_.size() && text_[pos_] != '"') {
      if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) {
        ++pos_;
        const char c = text_[pos_];
        switch (c) {
          case 'n': out += '\n'; break;
          case 't': out += '\t'; break;
          case 'r': out += '\r'; break;
          case 'b': out += '\b'; break;
          case 'f': out += '\f'; break;
          case 'u':
            out += "\\u" + text_.substr(pos_ + 1, 4);
            pos_ += 4;
            break;
          default: out += c;
        }
      } else {
        out += text_[pos_];
      }
      ++pos_;
    }
    ++pos_;  // closing quote
    return out;
  }

  static std::string escape(const std::string& key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void value(const std::string& path) {
    lines_[path] = line_;
    const char c = text_[pos_];
    if (c == '{') {
      ++pos_;
      skip_ws();
      while (pos_ < text_.size() && text_[pos_] != '}') {
        const std::string key = string_token();
        skip_ws();
        ++pos_;  // ':'
        skip_ws();
        value(path + "/" + escape(key));
        skip_ws();
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '[') {
      ++pos_;
      skip_ws();
      for (std::size_t i = 0; pos_ < text_.size() && text_[pos_] != ']'; ++i) {
        value(path + "/" + std::to_string(i));
        skip_ws();
        if (text_[pos_] == ',') {
          ++pos_;
          skip_ws();
        }
      }
      ++pos_;
    } else if (c == '"') {
      string_token();
    } else if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
      const std::size_t start = pos_;
      while (pos_ < text_.size() && std::string_view("+-.eE0123456789").find(text_[pos_]) != std::string_view::npos)
        ++pos_;
      numbers_[path] = text_.substr(start, pos_ - start);
    } else {
      while (pos_ < text_.size() && std::isalpha(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }
  }

  std::string text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
  std::map<std::string, std::size_t> lines_;
  std::map<std::string, std::string> numbers_;
};

}  // namespace ensctl::cli
