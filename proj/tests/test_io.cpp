#include <cmath>
#include <cstdio>
#include <string>

#include "doctest.h"

#include "bconcord/errors.hpp"
#include "bconcord/io.hpp"

using namespace bconcord;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("io_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_SUITE("io") {

TEST_CASE("format_double round trips") {
    for (double v : {1.0 / 3.0, 0.1, -2.5e-308, 3.0, 12345.6789, -0.125}) {
        const std::string s = format_double(v);
        CHECK_EQ(std::stod(s), v);
    }
}

TEST_CASE("csv matrix round trip is exact") {
    TempFile f("mat.csv");
    Matrix m(3, 2);
    m << 1.0 / 3.0, -7.25, 1e-12, 2.0, 0.0, -1.0 / 7.0;
    write_csv_matrix(f.path, m);
    const Matrix back = read_csv_matrix(f.path);
    CHECK_EQ(back.rows(), 3);
    CHECK_EQ(back.cols(), 2);
    CHECK_EQ((back - m).cwiseAbs().maxCoeff(), 0.0);
}

TEST_CASE("csv header flag skips the first line") {
    TempFile f("hdr.csv");
    write_file(f.path, "a,b\n1,2\n3,4\n");
    const Matrix m = read_csv_matrix(f.path, true);
    CHECK_EQ(m.rows(), 2);
    CHECK_EQ(m(1, 0), 3.0);
    CHECK_THROWS_AS(read_csv_matrix(f.path, false), InvalidInput);
}

TEST_CASE("csv rejects ragged and empty input") {
    TempFile f("bad.csv");
    write_file(f.path, "1,2\n3\n");
    CHECK_THROWS_AS(read_csv_matrix(f.path), InvalidInput);
    write_file(f.path, "");
    CHECK_THROWS_AS(read_csv_matrix(f.path), InvalidInput);
    write_file(f.path, "1,oops\n");
    CHECK_THROWS_AS(read_csv_matrix(f.path), InvalidInput);
    CHECK_THROWS_AS(read_csv_matrix("no_such_file.csv"), InvalidInput);
}

TEST_CASE("csv vector accepts row or column layout") {
    TempFile f("vec.csv");
    write_file(f.path, "1.5,2.5,3.5\n");
    const Vector row = read_csv_vector(f.path);
    CHECK_EQ(row.size(), 3);
    CHECK_EQ(row[2], 3.5);

    write_file(f.path, "1.5\n2.5\n3.5\n");
    const Vector col = read_csv_vector(f.path);
    CHECK_EQ(col.size(), 3);
    CHECK_EQ(col[1], 2.5);

    write_file(f.path, "1,2\n3,4\n");
    CHECK_THROWS_AS(read_csv_vector(f.path), InvalidInput);
}

TEST_CASE("pattern json round trip with one-based edges") {
    SparsityPattern pat(4);
    pat.set(0, 1);
    pat.set(2, 3);
    const Json j = pattern_to_json(pat);
    CHECK_EQ(j.at("p").get<int>(), 4);
    CHECK_EQ(j.at("edges").size(), 2u);
    CHECK_EQ(j.at("edges")[0][0].get<int>(), 1);
    CHECK_EQ(j.at("edges")[0][1].get<int>(), 2);
    CHECK_EQ(j.at("edges")[1][0].get<int>(), 3);
    CHECK_EQ(j.at("edges")[1][1].get<int>(), 4);
    CHECK(pattern_from_json(j) == pat);
}

TEST_CASE("pattern json validation") {
    Json j;
    j["p"] = 3;
    j["edges"] = Json::array({Json::array({1, 4})});  // out of range
    CHECK_THROWS_AS(pattern_from_json(j), InvalidInput);
    j["edges"] = Json::array({Json::array({2, 2})});  // not an off-diagonal pair
    CHECK_THROWS_AS(pattern_from_json(j), InvalidInput);
    j["edges"] = Json::array({Json::array({0, 2})});  // edges are one-based
    CHECK_THROWS_AS(pattern_from_json(j), InvalidInput);
}

TEST_CASE("file digest is content addressed") {
    TempFile a("dig_a"), b("dig_b");
    write_file(a.path, "hello\n");
    write_file(b.path, "hello\n");
    CHECK_EQ(file_digest(a.path), file_digest(b.path));
    write_file(b.path, "hello!\n");
    CHECK_NE(file_digest(a.path), file_digest(b.path));
}

TEST_CASE("toml subset parses sections, scalars and comments") {
    const auto t = parse_toml(
        "# bench setup\n"
        "p = 50\n"
        "density = 0.04  # sparse\n"
        "name = \"trial \\\"A\\\"\"\n"
        "\n"
        "[fit]\n"
        "q = 0.5\n"
        "hyper = false\n"
        "keep = 2000\n");
    CHECK_EQ(toml_int(t, "p", -1), 50);
    CHECK_EQ(toml_double(t, "density", 0.0), 0.04);
    CHECK_EQ(toml_string(t, "name", ""), "trial \"A\"");
    CHECK_EQ(toml_double(t, "fit.q", 0.0), 0.5);
    CHECK_EQ(toml_bool(t, "fit.hyper", true), false);
    CHECK_EQ(toml_int(t, "fit.keep", 0), 2000);
    CHECK_FALSE(toml_has(t, "fit.missing"));
    CHECK_EQ(toml_int(t, "fit.missing", 7), 7);
    // integers promote to double on request, not the other way round
    CHECK_EQ(toml_double(t, "p", 0.0), 50.0);
    CHECK_THROWS_AS(toml_int(t, "density", 0), InvalidInput);
}

TEST_CASE("toml subset rejects malformed input") {
    CHECK_THROWS_AS(parse_toml("just words\n"), InvalidInput);
    CHECK_THROWS_AS(parse_toml("[unclosed\n"), InvalidInput);
    CHECK_THROWS_AS(parse_toml("x = \n"), InvalidInput);
    CHECK_THROWS_AS(parse_toml("x = what\n"), InvalidInput);
    CHECK_THROWS_AS(parse_toml("x = 1\nx = 2\n"), InvalidInput);
    CHECK_THROWS_AS(parse_toml("x = \"open\n"), InvalidInput);
}

TEST_CASE("json vector round trip") {
    Vector v(3);
    v << 1.0 / 3.0, -2.0, 5e-17;
    const Json j = vector_to_json(v);
    const Vector back = vector_from_json(j);
    CHECK_EQ((back - v).cwiseAbs().maxCoeff(), 0.0);
}

}  // TEST_SUITE
