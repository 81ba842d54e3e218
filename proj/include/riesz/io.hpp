#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "riesz/common.hpp"

namespace riesz::io {

/// Shortest decimal form that round-trips ("%.17g").
std::string format_double(double v);

/// Whitespace-separated token stream over a text file; '#' starts a comment. Errors carry
/// the file name and line number.
class TokenReader {
public:
    explicit TokenReader(const std::filesystem::path& path);

    bool at_end();
    std::string peek();
    std::string next();
    double next_double();
    long long next_int();
    void expect(const std::string& keyword);
    [[noreturn]] void fail(const std::string& msg) const;

private:
    void fill();

    std::filesystem::path path_;
    std::ifstream in_;
    std::vector<std::string> pending_;
    std::size_t pos_ = 0;
    std::size_t line_ = 0;
};

/// Writes to a temporary sibling and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

struct FieldFile {
    double t = 0.0;
    Field values;
};

/// Field file: "riesz-flow-field 1", "count N", "t <time>", "values", then N floats.
void save_field(const std::filesystem::path& path, const Field& values, double t = 0.0);
FieldFile load_field(const std::filesystem::path& path);

}  // namespace riesz::io
