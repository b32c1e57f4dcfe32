#include "satkit/csv.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace satkit {

CsvReader::CsvReader(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open CSV file: " + path_);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    data_ = buf.str();
    if (!parse_record(header_)) {
        throw std::runtime_error("empty CSV file: " + path_);
    }
    for (std::size_t i = 0; i < header_.size(); ++i) {
        columns_.emplace(header_[i], i);
    }
}

bool CsvReader::has_column(const std::string& name) const {
    return columns_.count(name) > 0;
}

std::size_t CsvReader::column(const std::string& name) const {
    auto it = columns_.find(name);
    if (it == columns_.end()) {
        throw std::runtime_error(path_ + ": missing column '" + name + "'");
    }
    return it->second;
}

bool CsvReader::next(std::vector<std::string>& row) {
    return parse_record(row);
}

bool CsvReader::parse_record(std::vector<std::string>& row) {
    row.clear();
    if (pos_ >= data_.size()) return false;
    ++line_;
    std::string field;
    bool quoted = false;
    for (;;) {
        if (pos_ >= data_.size()) {
            if (quoted) {
                throw std::runtime_error(path_ + ": unterminated quoted field");
            }
            row.push_back(std::move(field));
            return true;
        }
        const char c = data_[pos_++];
        if (quoted) {
            if (c == '"') {
                if (pos_ < data_.size() && data_[pos_] == '"') {
                    field.push_back('"');
                    ++pos_;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
        } else if (c == '"' && field.empty()) {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            break;
        } else if (c == '\r') {
            if (pos_ < data_.size() && data_[pos_] == '\n') ++pos_;
            break;
        } else {
            field.push_back(c);
        }
    }
    row.push_back(std::move(field));
    return true;
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << escape(fields[i]);
    }
    out_ << '\n';
}

std::string CsvWriter::escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[64];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        double back = 0.0;
        std::sscanf(buf, "%lf", &back);
        if (back == v) break;
    }
    return buf;
}

}  // namespace satkit
