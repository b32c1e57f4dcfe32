#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "satkit/csv.hpp"

using namespace satkit;

namespace {

std::string write_temp(const std::string& name, const std::string& content) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << content;
    return path.string();
}

}  // namespace

TEST_CASE("reader handles quoting, embedded separators, and CRLF") {
    const auto path = write_temp(
        "satkit_csv_quotes.csv",
        "a,b,c\r\n1,\"x,y\",\"he said \"\"hi\"\"\"\r\n2,\"multi\nline\",plain\n");
    CsvReader r(path);
    CHECK(r.header() == std::vector<std::string>{"a", "b", "c"});
    std::vector<std::string> row;
    REQUIRE(r.next(row));
    CHECK(row == std::vector<std::string>{"1", "x,y", "he said \"hi\""});
    REQUIRE(r.next(row));
    CHECK(row == std::vector<std::string>{"2", "multi\nline", "plain"});
    CHECK_FALSE(r.next(row));
}

TEST_CASE("reader errors") {
    CHECK_THROWS_WITH_AS(CsvReader("/nonexistent/satkit.csv"),
                         doctest::Contains("cannot open"), std::runtime_error);
    const auto path = write_temp("satkit_csv_cols.csv", "a,b\n1,2\n");
    CsvReader r(path);
    CHECK(r.column("b") == 1);
    CHECK_THROWS_WITH_AS(r.column("missing"), doctest::Contains("missing column"),
                         std::runtime_error);
}

TEST_CASE("writer round-trips through reader") {
    std::ostringstream out;
    CsvWriter w(out);
    w.row({"id", "text"});
    w.row({"1", "commas, and \"quotes\" and\nnewlines"});
    const auto path = write_temp("satkit_csv_roundtrip.csv", out.str());
    CsvReader r(path);
    std::vector<std::string> row;
    REQUIRE(r.next(row));
    CHECK(row[1] == "commas, and \"quotes\" and\nnewlines");
}

TEST_CASE("format_double round-trips exactly") {
    for (double v : {0.0, 1.0, -1.5, 0.1, 3.141592653589793, 1e-300, 6.02e23,
                     0.30000000000000004}) {
        const std::string s = format_double(v);
        CHECK(std::stod(s) == v);
    }
}
