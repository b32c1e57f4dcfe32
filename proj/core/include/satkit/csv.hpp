#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

namespace satkit {

// RFC 4180 CSV. The reader accepts both \n and \r\n line endings and quoted
// fields containing commas, quotes, and newlines.
class CsvReader {
public:
    explicit CsvReader(std::string path);

    const std::vector<std::string>& header() const { return header_; }
    bool has_column(const std::string& name) const;
    // Index of a named column; throws if absent.
    std::size_t column(const std::string& name) const;

    // Reads the next record into `row`. Returns false at end of input.
    bool next(std::vector<std::string>& row);

    std::size_t line() const { return line_; }
    const std::string& path() const { return path_; }

private:
    bool parse_record(std::vector<std::string>& row);

    std::string path_;
    std::string data_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
    std::vector<std::string> header_;
    std::unordered_map<std::string, std::size_t> columns_;
};

class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(out) {}

    void row(const std::vector<std::string>& fields);

    static std::string escape(const std::string& field);

private:
    std::ostream& out_;
};

// Canonical number formatting used by every CSV artifact: shortest decimal
// form that round-trips a double. Keeps outputs byte-stable across runs.
std::string format_double(double v);

}  // namespace satkit
