#include "bconcord/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace bconcord {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

double parse_double(const std::string& tok, const std::string& path) {
    double v = 0.0;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (*(last - 1) == ' ' || *(last - 1) == '\t' || *(last - 1) == '\r')) --last;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last)
        throw InvalidInput(path + ": invalid numeric field '" + tok + "'");
    return v;
}

}  // namespace

Matrix read_csv_matrix(const std::string& path, bool header) {
    std::ifstream in(path);
    if (!in) throw InvalidInput("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first_line = true;
    while (std::getline(in, line)) {
        if (first_line && header) {
            first_line = false;
            continue;
        }
        first_line = false;
        if (line.empty() || line == "\r") continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) row.push_back(parse_double(tok, path));
        if (!rows.empty() && row.size() != rows.front().size())
            throw InvalidInput(path + ": ragged rows");
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw InvalidInput(path + ": empty file");
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

void write_csv_matrix(const std::string& path, const Matrix& m) {
    std::ofstream out(path);
    if (!out) throw InvalidInput("cannot write " + path);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out << ',';
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

Vector read_csv_vector(const std::string& path) {
    Matrix m = read_csv_matrix(path);
    if (m.rows() == 1) return m.row(0).transpose();
    if (m.cols() == 1) return m.col(0);
    throw InvalidInput(path + ": expected a single row or column");
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot write " + path);
    out << content;
}

std::string file_digest(const std::string& path) {
    const std::string bytes = read_file(path);
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json pattern_to_json(const SparsityPattern& pat) {
    Json edges = Json::array();
    std::size_t f = 0;
    for (int j = 0; j < pat.p - 1; ++j)
        for (int k = j + 1; k < pat.p; ++k, ++f)
            if (pat.bits[f]) edges.push_back(Json::array({j + 1, k + 1}));
    return Json{{"p", pat.p}, {"edges", std::move(edges)}};
}

SparsityPattern pattern_from_json(const Json& j) {
    if (!j.contains("p") || !j.contains("edges"))
        throw InvalidInput("graph json needs fields 'p' and 'edges'");
    const int p = j.at("p").get<int>();
    if (p < 2) throw InvalidInput("graph json: p must be >= 2");
    SparsityPattern pat(p);
    for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2)
            throw InvalidInput("graph json: each edge must be a [j,k] pair");
        int a = e[0].get<int>(), b = e[1].get<int>();
        if (a < 1 || b < 1 || a > p || b > p || a == b)
            throw InvalidInput("graph json: edge indices must be distinct and in 1..p");
        pat.set(std::min(a, b) - 1, std::max(a, b) - 1, true);
    }
    return pat;
}

Json pair_table(int p) {
    Json t = Json::array();
    for (int j = 0; j < p - 1; ++j)
        for (int k = j + 1; k < p; ++k) t.push_back(Json::array({j + 1, k + 1}));
    return t;
}

Json vector_to_json(const Vector& v) {
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
}

Vector vector_from_json(const Json& j) {
    Vector v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v[i++] = x.get<double>();
    return v;
}

namespace {

std::string toml_trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void toml_fail(int line, const std::string& what) {
    throw InvalidInput("config line " + std::to_string(line) + ": " + what);
}

TomlValue toml_parse_value(const std::string& raw, int line) {
    if (raw.empty()) toml_fail(line, "missing value");
    if (raw.front() == '"') {
        if (raw.size() < 2 || raw.back() != '"')
            toml_fail(line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
            char c = raw[i];
            if (c == '\\') {
                if (i + 2 >= raw.size()) toml_fail(line, "dangling escape");
                char n = raw[++i];
                if (n == '"' || n == '\\')
                    out.push_back(n);
                else
                    toml_fail(line, "unsupported escape");
            } else {
                out.push_back(c);
            }
        }
        return out;
    }
    if (raw == "true") return true;
    if (raw == "false") return false;
    // integer first, falling back to float
    {
        long long v = 0;
        auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (ec == std::errc() && ptr == raw.data() + raw.size()) return v;
    }
    {
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), v);
        if (ec == std::errc() && ptr == raw.data() + raw.size()) return v;
    }
    toml_fail(line, "cannot parse value '" + raw + "'");
}

// strip a trailing comment, respecting quoted strings
std::string toml_strip_comment(const std::string& s) {
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (c == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
        if (c == '#' && !in_str) return s.substr(0, i);
    }
    return s;
}

bool toml_valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-'))
            return false;
    return true;
}

}  // namespace

TomlTable parse_toml(const std::string& text) {
    TomlTable out;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = toml_trim(toml_strip_comment(line));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') toml_fail(lineno, "unterminated section header");
            section = toml_trim(line.substr(1, line.size() - 2));
            if (!toml_valid_key(section)) toml_fail(lineno, "bad section name");
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) toml_fail(lineno, "expected key = value");
        const std::string key = toml_trim(line.substr(0, eq));
        if (!toml_valid_key(key)) toml_fail(lineno, "bad key '" + key + "'");
        const std::string full = section.empty() ? key : section + "." + key;
        if (out.count(full)) toml_fail(lineno, "duplicate key '" + full + "'");
        out[full] = toml_parse_value(toml_trim(line.substr(eq + 1)), lineno);
    }
    return out;
}

TomlTable read_toml(const std::string& path) { return parse_toml(read_file(path)); }

namespace {

[[noreturn]] void toml_type_fail(const std::string& key, const char* want) {
    throw InvalidInput("config key '" + key + "' is not " + want);
}

}  // namespace

long long toml_int(const TomlTable& t, const std::string& key, long long fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    if (const auto* v = std::get_if<long long>(&it->second)) return *v;
    toml_type_fail(key, "an integer");
}

double toml_double(const TomlTable& t, const std::string& key, double fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    if (const auto* v = std::get_if<double>(&it->second)) return *v;
    if (const auto* v = std::get_if<long long>(&it->second))
        return static_cast<double>(*v);
    toml_type_fail(key, "a number");
}

bool toml_bool(const TomlTable& t, const std::string& key, bool fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    if (const auto* v = std::get_if<bool>(&it->second)) return *v;
    toml_type_fail(key, "a boolean");
}

std::string toml_string(const TomlTable& t, const std::string& key,
                        const std::string& fallback) {
    auto it = t.find(key);
    if (it == t.end()) return fallback;
    if (const auto* v = std::get_if<std::string>(&it->second)) return *v;
    toml_type_fail(key, "a string");
}

bool toml_has(const TomlTable& t, const std::string& key) { return t.count(key) != 0; }

}  // namespace bconcord
