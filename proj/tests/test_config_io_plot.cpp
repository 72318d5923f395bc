#include "doctest.h"
#include "test_util.hpp"

#include "snecl/config.hpp"
#include "snecl/error.hpp"
#include "snecl/io.hpp"
#include "snecl/plot.hpp"

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>

using namespace snecl;

namespace {

KeyValues parse_text(const std::string& text) {
    std::istringstream is(text);
    return KeyValues::parse(is, "test.cfg");
}

std::size_t count_of(const std::string& haystack, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
    return n;
}

CsvTable table_of(const std::string& text) {
    std::istringstream is(text);
    return read_csv_table(is);
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("KeyValues: grammar, comments, repeated keys") {
    const KeyValues kv = parse_text("# header\n\n  loss = infonce  \ntau=0.5 # inline\ntau = 0.25\n");
    CHECK(kv.get_string("loss", "") == "infonce");
    CHECK(kv.get_double("tau", 0) == 0.25);
    CHECK(kv.entries().size() == 2);
    CHECK(!kv.find("missing"));
    CHECK(kv.get_int("missing", 7) == 7);
}

TEST_CASE("KeyValues: malformed lines name the source and line") {
    try {
        parse_text("a = 1\nno equals sign\n");
        FAIL("expected a FormatError");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find("test.cfg:2") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_text(" = 3\n"), FormatError);
    CHECK_THROWS_AS(KeyValues::parse_file("/nonexistent/x.cfg"), FormatError);
}

TEST_CASE("KeyValues: typed getters reject bad values") {
    const KeyValues kv = parse_text("n = -3\nx = abc\nb = maybe\ninf = inf\nlist = 1, 2 ,3\nempty =\n");
    CHECK_THROWS_AS(kv.get_count("n", 0), ValidationError);
    CHECK(kv.get_int("n", 0) == -3);
    CHECK_THROWS_AS(kv.get_double("x", 0), ValidationError);
    CHECK_THROWS_AS(kv.get_bool("b", false), ValidationError);
    CHECK_THROWS_AS(kv.get_double("inf", 0), ValidationError);
    CHECK(kv.get_list("list") == std::vector<std::string>{"1", "2", "3"});
    CHECK(kv.get_list("empty").empty());

    const KeyValues bools = parse_text("a = yes\nb = 0\nc = true\n");
    CHECK(bools.get_bool("a", false));
    CHECK(!bools.get_bool("b", true));
    CHECK(bools.get_bool("c", false));
}

TEST_CASE("KeyValues: write is sorted and parses back; merge overrides") {
    KeyValues a;
    a.set("zeta", std::int64_t{1});
    a.set("alpha", 0.1);
    a.set("mid", std::string("text"));
    std::ostringstream os;
    a.write(os);
    CHECK(os.str() == "alpha = 0.1\nmid = text\nzeta = 1\n");
    CHECK(parse_text(os.str()).entries() == a.entries());

    KeyValues b;
    b.set("mid", std::string("other"));
    b.set("new", std::int64_t{2});
    a.merge(b);
    CHECK(a.get_string("mid", "") == "other");
    CHECK(a.get_int("new", 0) == 2);
    CHECK(a.get_int("zeta", 0) == 1);
}

TEST_CASE("format_double: shortest exact text") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.0, 5e-324}) {
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(2.0) == "2");
    CHECK(split_trimmed(" a , b,c ", ',') == std::vector<std::string>{"a", "b", "c"});
    CHECK(trim("  x y \t") == "x y");
}

} // TEST_SUITE

TEST_SUITE("io") {

TEST_CASE("dataset CSV: round trip and format errors") {
    Rng r(1);
    LabeledDataset d;
    d.x = random_matrix(5, 3, r);
    d.labels = {0, 1, 2, 1, 0};
    std::stringstream ss;
    write_dataset_csv(ss, d);
    CHECK(ss.str().rfind("x0,x1,x2,label\n", 0) == 0);
    const LabeledDataset back = read_dataset_csv(ss);
    CHECK(back.x == d.x);
    CHECK(back.labels == d.labels);

    std::istringstream no_label("x0,x1\n1,2\n");
    CHECK_THROWS_AS(read_dataset_csv(no_label), FormatError);
    std::istringstream bad_label("x0,label\n1,0.5\n");
    CHECK_THROWS_AS(read_dataset_csv(bad_label), FormatError);
    std::istringstream empty("x0,label\n");
    CHECK_THROWS_AS(read_dataset_csv(empty), FormatError);
}

TEST_CASE("CSV table: columns, ragged rows, non-numeric cells") {
    const CsvTable t = table_of("a,b\n1,2\n3,4\n");
    CHECK(t.rows.size() == 2);
    CHECK(t.column("b") == 1);
    CHECK(!t.has_column("c"));
    CHECK_THROWS_AS(t.column("c"), FormatError);
    CHECK_THROWS_AS(table_of("a,b\n1\n"), FormatError);
    CHECK_THROWS_AS(table_of("a,b\n1,x\n"), FormatError);
    CHECK_THROWS_AS(table_of(""), FormatError);
}

TEST_CASE("embedding CSV header with and without labels") {
    std::ostringstream a, b;
    write_embedding_csv(a, Matrix::Zero(1, 2));
    write_embedding_csv(b, Matrix::Zero(1, 2), std::vector<int>{3});
    CHECK(a.str().rfind("z0,z1\n", 0) == 0);
    CHECK(b.str().rfind("z0,z1,label\n", 0) == 0);
}

TEST_CASE("text file helpers") {
    const auto path = std::filesystem::temp_directory_path() / "snecl_io_test.txt";
    write_text_file(path.string(), "hello\n");
    CHECK(read_text_file(path.string()) == "hello\n");
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_text_file(path.string()), FormatError);
    CHECK_THROWS_AS(write_text_file("/nonexistent/dir/f.txt", "x"), FormatError);
}

} // TEST_SUITE

TEST_SUITE("plot") {

TEST_CASE("render_svg: scatter draws one circle per row inside the canvas") {
    const CsvTable t = table_of("z0,z1,label\n0,0,0\n1,1,1\n-1,2,2\n");
    const std::string svg = render_svg(t, PlotKind::scatter2d, "demo");
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(count_of(svg, "<circle") == 3);
    CHECK(svg.find("demo") != std::string::npos);
    CHECK(svg.find("nan") == std::string::npos);
}

TEST_CASE("render_svg: line series and heatmap cells") {
    const CsvTable lines = table_of("epoch,loss,align\n1,2,0.1\n2,1,0.5\n3,0.5,0.9\n");
    CHECK(count_of(render_svg(lines, PlotKind::line), "<polyline") == 2);

    const CsvTable heat = table_of("class,c0,c1\n0,1,-0.5\n1,-0.5,1\n");
    const std::string svg = render_svg(heat, PlotKind::heatmap);
    CHECK(count_of(svg, "<rect") >= 4);
    CHECK(svg.find("-0.5") != std::string::npos);

    // A single point has a zero-width range, widened rather than divided by zero.
    const CsvTable one = table_of("x,y\n3,3\n");
    CHECK(render_svg(one, PlotKind::scatter2d).find("nan") == std::string::npos);
}

TEST_CASE("render_svg: errors") {
    CHECK_THROWS_AS(render_svg(table_of("a,b\n"), PlotKind::scatter2d), FormatError);
    CHECK_THROWS_AS(render_svg(table_of("a\n1\n"), PlotKind::scatter2d), FormatError);
    CHECK_THROWS_AS(render_svg(table_of("class,c0\n0,1\n1,1\n"), PlotKind::heatmap), FormatError);
    CHECK(parse_plot_kind("line") == PlotKind::line);
    CHECK_THROWS_AS(parse_plot_kind("pie"), ValidationError);
}

} // TEST_SUITE
