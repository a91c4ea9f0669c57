#pragma once

#include <charconv>
#include <cstdint>
#include <ostream>
#include <string>
#include <string_view>

namespace dpm::io {

// Shortest round-trip decimal representation, independent of locale.
inline std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

// Writes comma-separated fields followed by '\n'.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(std::string_view s) {
    sep();
    out_ << s;
    return *this;
  }
  CsvWriter& field(const char* s) { return field(std::string_view(s)); }
  CsvWriter& field(double v) { return field(std::string_view(format_double(v))); }
  CsvWriter& field(std::int64_t v) { return field(std::string_view(std::to_string(v))); }
  CsvWriter& field(std::uint64_t v) { return field(std::string_view(std::to_string(v))); }
  CsvWriter& field(int v) { return field(static_cast<std::int64_t>(v)); }
  CsvWriter& field(bool v) { return field(static_cast<std::int64_t>(v ? 1 : 0)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::ostream& out_;
  bool first_ = true;
};

}  // namespace dpm::io
