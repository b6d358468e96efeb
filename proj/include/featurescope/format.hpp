#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

namespace featurescope {

/// "%.6f", with negative zero printed as 0.000000 and non-finite as "nan".
std::string fixed6(double v);

/// JSON text with every floating-point number in fixed 6-decimal notation,
/// object keys in insertion order, two-space indent, trailing newline.
/// Non-finite floats become null.
std::string dump_report(const nlohmann::ordered_json& j);

/// RFC-4180 field quoting: fields containing , " CR or LF are wrapped in
/// quotes with embedded quotes doubled. Records end in CRLF-free "\n".
std::string csv_escape(const std::string& field);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return text_; }

 private:
  std::size_t width_;
  std::string text_;
};

/// Parses RFC-4180 text (quoted fields may span lines; CRLF or LF records).
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

}  // namespace featurescope
