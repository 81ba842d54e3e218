#include "riesz/io.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

namespace riesz::io {

std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

TokenReader::TokenReader(const std::filesystem::path& path) : path_(path), in_(path)
{
    if (!in_) throw ConfigError("cannot open " + path.string());
}

void TokenReader::fill()
{
    std::string line;
    while (pos_ >= pending_.size() && std::getline(in_, line)) {
        ++line_;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        pending_.clear();
        pos_ = 0;
        for (std::string tok; ss >> tok;) pending_.push_back(tok);
    }
}

bool TokenReader::at_end()
{
    fill();
    return pos_ >= pending_.size();
}

std::string TokenReader::peek()
{
    if (at_end()) fail("unexpected end of file");
    return pending_[pos_];
}

std::string TokenReader::next()
{
    std::string tok = peek();
    ++pos_;
    return tok;
}

double TokenReader::next_double()
{
    const std::string tok = next();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail("expected a number, found '" + tok + "'");
    return v;
}

long long TokenReader::next_int()
{
    const std::string tok = next();
    long long v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || ptr != tok.data() + tok.size()) fail("expected an integer, found '" + tok + "'");
    return v;
}

void TokenReader::expect(const std::string& keyword)
{
    const std::string tok = next();
    if (tok != keyword) fail("expected '" + keyword + "', found '" + tok + "'");
}

void TokenReader::fail(const std::string& msg) const
{
    throw ConfigError(path_.string() + ":" + std::to_string(line_) + ": " + msg);
}

void write_atomic(const std::filesystem::path& path, const std::string& contents)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write " + tmp.string());
        out << contents;
        if (!out) throw ConfigError("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

void save_field(const std::filesystem::path& path, const Field& values, double t)
{
    std::string s = "riesz-flow-field 1\ncount " + std::to_string(values.size()) + "\nt " + format_double(t) + "\nvalues\n";
    for (double v : values) {
        s += format_double(v);
        s += '\n';
    }
    write_atomic(path, s);
}

FieldFile load_field(const std::filesystem::path& path)
{
    TokenReader r(path);
    r.expect("riesz-flow-field");
    if (r.next_int() != 1) r.fail("unsupported field file version");
    FieldFile f;
    r.expect("count");
    const long long n = r.next_int();
    if (n <= 0) r.fail("count must be positive");
    if (r.peek() == "t") {
        r.next();
        f.t = r.next_double();
    }
    r.expect("values");
    f.values.resize(static_cast<std::size_t>(n));
    for (auto& v : f.values) v = r.next_double();
    if (!r.at_end()) r.fail("trailing data after values");
    return f;
}

}  // namespace riesz::io
