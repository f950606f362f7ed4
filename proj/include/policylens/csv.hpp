#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "policylens/error.hpp"

namespace policylens {

/// One parsed CSV record plus the 1-based line number where it started
/// (quoted fields may span lines, so records track their own origin).
struct CsvRecord {
    std::vector<std::string> fields;
    int line = 0;
};

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("short write on file: " + path.string());
}

/// RFC-4180 parser. Accepts LF and CRLF endings; quoted fields may contain
/// commas, doubled quotes, and newlines.
inline std::vector<CsvRecord> parse_csv(std::string_view text, const std::string& origin) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool in_quotes = false;
    bool field_started = false;
    int line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        field.clear();
        field_started = false;
    };
    auto end_record = [&] {
        end_field();
        records.push_back(std::move(current));
        current = CsvRecord{};
        current.line = line;
    };

    for (size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field_started && field.empty()) {
                    in_quotes = true;
                    field_started = true;
                } else {
                    field += c;  // stray quote inside unquoted field: keep it
                }
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                ++line;
                end_record();
                break;
            default:
                field_started = true;
                field += c;
        }
    }
    if (in_quotes)
        throw Error(origin + ":" + std::to_string(current.line) + ": unterminated quoted field");
    if (field_started || !field.empty() || !current.fields.empty()) end_record();

    // A trailing blank line produces an empty single-field record; drop those.
    std::vector<CsvRecord> out;
    out.reserve(records.size());
    for (auto& r : records) {
        if (r.fields.size() == 1 && r.fields[0].empty()) continue;
        out.push_back(std::move(r));
    }
    return out;
}

inline std::vector<CsvRecord> read_csv_file(const std::filesystem::path& path) {
    return parse_csv(read_text_file(path), path.filename().string());
}

/// Quotes a field only when RFC-4180 requires it.
inline std::string csv_quote(std::string_view field) {
    bool needs = field.find_first_of(",\"\n\r") != std::string_view::npos;
    if (!needs) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
    std::string out;
    for (size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ',';
        out += csv_quote(fields[i]);
    }
    out += '\n';
    return out;
}

}
