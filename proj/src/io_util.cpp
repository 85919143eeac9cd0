#include "lifb/io_util.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace lifb {

std::string format_real(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    if (res.ec != std::errc()) throw std::logic_error("format_real: to_chars failed");
    return std::string(buf, res.ptr);
}

static bool needs_quotes(const std::string& f) {
    return f.find_first_of(",\"\r\n") != std::string::npos;
}

static std::string csv_field(const std::string& f) {
    if (!needs_quotes(f)) return f;
    std::string out = "\"";
    for (char c : f) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += "\"";
    return out;
}

std::string CsvTable::to_string() const {
    std::string out;
    auto emit_row = [&out](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ",";
            out += csv_field(row[i]);
        }
        out += "\r\n";
    };
    emit_row(header);
    for (const auto& r : rows) {
        if (r.size() != header.size()) {
            throw std::invalid_argument("CsvTable: row width " + std::to_string(r.size()) +
                                        " does not match header width " +
                                        std::to_string(header.size()));
        }
        emit_row(r);
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    size_t i = 0;
    const size_t n = text.size();
    auto end_field = [&]() {
        row.push_back(field);
        field.clear();
        field_started = false;
    };
    auto end_record = [&]() {
        end_field();
        records.push_back(row);
        row.clear();
    };
    while (i < n) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < n && text[i + 1] == '"') {
                    field += '"';
                    i += 2;
                } else {
                    in_quotes = false;
                    ++i;
                    if (i < n && text[i] != ',' && text[i] != '\r' && text[i] != '\n') {
                        throw std::invalid_argument("parse_csv: garbage after closing quote at byte " +
                                                    std::to_string(i));
                    }
                }
            } else {
                field += c;
                ++i;
            }
        } else if (c == '"' && !field_started && field.empty()) {
            in_quotes = true;
            field_started = true;
            ++i;
        } else if (c == ',') {
            end_field();
            ++i;
        } else if (c == '\r' || c == '\n') {
            end_record();
            if (c == '\r' && i + 1 < n && text[i + 1] == '\n') i += 2;
            else ++i;
        } else {
            if (c == '"') throw std::invalid_argument("parse_csv: bare quote inside unquoted field");
            field += c;
            field_started = true;
            ++i;
        }
    }
    if (in_quotes) throw std::invalid_argument("parse_csv: unterminated quoted field");
    if (field_started || !field.empty() || !row.empty()) end_record();
    return records;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open file for writing: " + tmp);
        out.write(content.data(), std::streamsize(content.size()));
        if (!out) throw std::runtime_error("short write to " + tmp);
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0) {
        std::remove(tmp.c_str());
        throw std::runtime_error("cannot rename " + tmp + " to " + path);
    }
}

std::map<std::string, std::string> parse_config_text(const std::string& text) {
    std::map<std::string, std::string> cfg;
    std::istringstream in(text);
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos) continue;
        if (line[start] == '#') continue;
        size_t eq = line.find('=', start);
        if (eq == std::string::npos) {
            throw std::invalid_argument("config line " + std::to_string(lineno) +
                                        ": expected key=value, got '" + line + "'");
        }
        auto trim = [](std::string s) {
            size_t a = s.find_first_not_of(" \t");
            size_t b = s.find_last_not_of(" \t");
            return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
        };
        std::string key = trim(line.substr(start, eq - start));
        std::string val = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
        }
        if (val.size() >= 2 && val.front() == '"' && val.back() == '"') {
            val = val.substr(1, val.size() - 2);
        }
        cfg[key] = val;
    }
    return cfg;
}

std::map<std::string, std::string> load_config(const std::string& path) {
    return parse_config_text(read_file(path));
}

std::string config_to_string(const std::map<std::string, std::string>& cfg) {
    std::string out;
    for (const auto& [k, v] : cfg) {
        out += k;
        out += "=";
        out += v;
        out += "\n";
    }
    return out;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

SvgBuilder::SvgBuilder(double width, double height) : w_(width), h_(height) {}

static std::string num(double v) {
    // Fixed short form keeps files small; full precision is not needed for plots.
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void SvgBuilder::rect(double x, double y, double w, double h, const std::string& fill) {
    body_ += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" + num(w) +
             "\" height=\"" + num(h) + "\" fill=\"" + xml_escape(fill) + "\"/>\n";
}

void SvgBuilder::line(double x1, double y1, double x2, double y2, const std::string& stroke,
                      double width) {
    body_ += "<line x1=\"" + num(x1) + "\" y1=\"" + num(y1) + "\" x2=\"" + num(x2) + "\" y2=\"" +
             num(y2) + "\" stroke=\"" + xml_escape(stroke) + "\" stroke-width=\"" + num(width) +
             "\"/>\n";
}

void SvgBuilder::polyline(const std::vector<std::pair<double, double>>& pts,
                          const std::string& stroke, double width) {
    body_ += "<polyline fill=\"none\" stroke=\"" + xml_escape(stroke) + "\" stroke-width=\"" +
             num(width) + "\" points=\"";
    for (size_t i = 0; i < pts.size(); ++i) {
        if (i) body_ += " ";
        body_ += num(pts[i].first) + "," + num(pts[i].second);
    }
    body_ += "\"/>\n";
}

void SvgBuilder::circle(double cx, double cy, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + num(cx) + "\" cy=\"" + num(cy) + "\" r=\"" + num(r) + "\" fill=\"" +
             xml_escape(fill) + "\"/>\n";
}

void SvgBuilder::text(double x, double y, const std::string& s, double size,
                      const std::string& anchor) {
    body_ += "<text x=\"" + num(x) + "\" y=\"" + num(y) + "\" font-size=\"" + num(size) +
             "\" font-family=\"sans-serif\" text-anchor=\"" + xml_escape(anchor) + "\">" +
             xml_escape(s) + "</text>\n";
}

std::string SvgBuilder::finish() const {
    return "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<svg xmlns=\"http://www.w3.org/2000/svg\" "
           "width=\"" + num(w_) + "\" height=\"" + num(h_) + "\" viewBox=\"0 0 " + num(w_) + " " +
           num(h_) + "\">\n" + body_ + "</svg>\n";
}

} // namespace lifb
