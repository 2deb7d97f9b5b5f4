#pragma once

#include <map>
#include <string>
#include <variant>

#include "json.hpp"

#include "bconcord/types.hpp"

namespace bconcord {

// All structured output uses insertion-ordered JSON so serialization is
// byte-stable for a fixed payload.
using Json = nlohmann::ordered_json;

// Shortest 17-significant-digit decimal form, round-trip exact.
std::string format_double(double v);

// CSV numeric matrix, rows = observations. No header by default.
Matrix read_csv_matrix(const std::string& path, bool header = false);
void write_csv_matrix(const std::string& path, const Matrix& m);

Vector read_csv_vector(const std::string& path);

// FNV-1a 64-bit content digest (hex), used in run manifests.
std::string file_digest(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// ---- shared JSON payload helpers -------------------------------------

// {"p": P, "edges": [[j,k], ...]} with 1-based, canonically ordered pairs.
Json pattern_to_json(const SparsityPattern& pat);
SparsityPattern pattern_from_json(const Json& j);

// 1-based (j,k) table in canonical order, for readability next to flat arrays.
Json pair_table(int p);

Json vector_to_json(const Vector& v);
Vector vector_from_json(const Json& j);

// ---- minimal TOML subset ---------------------------------------------
// [section] headers, key = value pairs, # comments. Values: integers,
// floats, booleans, double-quoted strings. Keys flatten to "section.key".

using TomlValue = std::variant<long long, double, bool, std::string>;
using TomlTable = std::map<std::string, TomlValue>;

TomlTable parse_toml(const std::string& text);
TomlTable read_toml(const std::string& path);

// Typed lookups; missing key returns the fallback, wrong type throws.
long long toml_int(const TomlTable& t, const std::string& key, long long fallback);
double toml_double(const TomlTable& t, const std::string& key, double fallback);
bool toml_bool(const TomlTable& t, const std::string& key, bool fallback);
std::string toml_string(const TomlTable& t, const std::string& key,
                        const std::string& fallback);
bool toml_has(const TomlTable& t, const std::string& key);

}  // namespace bconcord
