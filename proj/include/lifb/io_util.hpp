#pragma once

#include <map>
#include <string>
#include <vector>

namespace lifb {

/// Shortest decimal form that round-trips to the same 64-bit value.
std::string format_real(double v);

/// RFC-4180 CSV: header row, CRLF line endings, minimal quoting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::string to_string() const;
};

/// Strict RFC-4180 reader (quoted fields, escaped quotes, CRLF or LF).
/// Returns all records including the header row. Malformed input -> error.
std::vector<std::vector<std::string>> parse_csv(const std::string& text);

std::string read_file(const std::string& path);

/// Write-temp-then-rename so readers never observe partial files.
void atomic_write_file(const std::string& path, const std::string& content);

/// Flat key=value configuration ('#' comments and blank lines ignored).
std::map<std::string, std::string> parse_config_text(const std::string& text);
std::map<std::string, std::string> load_config(const std::string& path);

/// Serialized sorted by key, one key=value per line.
std::string config_to_string(const std::map<std::string, std::string>& cfg);

/// Minimal SVG assembly; emits self-contained well-formed XML.
class SvgBuilder {
public:
    SvgBuilder(double width, double height);
    void rect(double x, double y, double w, double h, const std::string& fill);
    void line(double x1, double y1, double x2, double y2, const std::string& stroke, double width);
    void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                  double width);
    void circle(double cx, double cy, double r, const std::string& fill);
    void text(double x, double y, const std::string& s, double size,
              const std::string& anchor = "start");
    std::string finish() const;

private:
    double w_, h_;
    std::string body_;
};

std::string xml_escape(const std::string& s);

} // namespace lifb
