#include "doctest.h"

#include "cli.hpp"
#include "snecl/io.hpp"
#include "snecl/trainer.hpp"

#include <cstdlib>
#include <unistd.h>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace snecl;

namespace {

struct Result {
    int code = 0;
    std::string out;
    std::string err;
};

Result run_cli(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// A fresh directory under the system temp dir, removed on scope exit.
struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("snecl_cli_" + tag + "_" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

const std::vector<std::string> small_train{"--epochs", "3", "--hidden", "8", "--data.n", "60", "--data.test_n", "60"};

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("gen: deterministic dataset, output path required") {
    TempDir dir("gen");
    ::unsetenv("SNECL_OUT_DIR");
    CHECK(run_cli({"gen", "--preset", "fig3a", "--out", dir / "a.csv"}).code == cli::exit_ok);
    CHECK(run_cli({"gen", "--preset", "fig3a", "--out", dir / "b.csv"}).code == cli::exit_ok);
    CHECK(read_text_file(dir / "a.csv") == read_text_file(dir / "b.csv"));
    CHECK(run_cli({"gen", "--preset", "fig3a", "--split", "test", "--out", dir / "c.csv"}).code == cli::exit_ok);
    CHECK(read_text_file(dir / "a.csv") != read_text_file(dir / "c.csv"));

    const Result missing = run_cli({"gen", "--preset", "fig3a"});
    CHECK(missing.code == cli::exit_usage);
    CHECK(missing.err.find("error[usage]") != std::string::npos);

    ::setenv("SNECL_OUT_DIR", dir.path.c_str(), 1);
    CHECK(run_cli({"gen", "--preset", "fig3a"}).code == cli::exit_ok);
    ::unsetenv("SNECL_OUT_DIR");
}

TEST_CASE("argument and config errors map to exit codes") {
    TempDir dir("errors");
    CHECK(run_cli({}).code == cli::exit_usage);
    CHECK(run_cli({"frobnicate"}).code == cli::exit_usage);
    CHECK(run_cli({"train", "--preset", "fig3b", "--no_such_key", "1", "--out", dir / "t"}).code ==
          cli::exit_validation);
    CHECK(run_cli({"train", "--preset", "fig3b", "--loss", "t_simclr", "--out", dir / "t"}).code ==
          cli::exit_validation);
    CHECK(run_cli({"train", "--preset", "no-such-preset", "--out", dir / "t"}).code != cli::exit_ok);
    CHECK(run_cli({"verify", "bogus"}).code == cli::exit_usage);
}

TEST_CASE("train then eval: files, report keys, layered config") {
    TempDir dir("train");
    write_text_file(dir / "extra.cfg", "epochs = 2\n");
    const Result t = run_cli(concat({"train", "--preset", "fig3b", "--out", dir / "run"}, small_train));
    REQUIRE(t.code == cli::exit_ok);
    CHECK(t.out.find("final_loss") != std::string::npos);
    for (const char* f : {"checkpoint.snecl", "train_log.csv", "embedding.csv", "config.cfg"}) {
        CHECK(fs::exists(dir.path / "run" / f));
    }
    const TrainReport rep = load_checkpoint(dir / "run/checkpoint.snecl");
    CHECK(rep.history.size() == 3);

    // Flags win over config files, which win over the preset.
    const Result layered = run_cli({"train", "--preset", "fig3b", "--config", dir / "extra.cfg", "--hidden", "8",
                                    "--data.n", "60", "--out", dir / "layered"});
    REQUIRE(layered.code == cli::exit_ok);
    CHECK(load_checkpoint(dir / "layered/checkpoint.snecl").history.size() == 2);
    const Result flag = run_cli({"train", "--preset", "fig3b", "--config", dir / "extra.cfg", "--epochs=1",
                                 "--hidden", "8", "--data.n", "60", "--out", dir / "flag"});
    REQUIRE(flag.code == cli::exit_ok);
    CHECK(load_checkpoint(dir / "flag/checkpoint.snecl").history.size() == 1);

    const Result e = run_cli({"eval", "--preset", "fig3d", "--checkpoint", dir / "run/checkpoint.snecl",
                              "--data.test_n", "60", "--out", dir / "eval"});
    REQUIRE(e.code == cli::exit_ok);
    for (const char* key : {"knn_accuracy", "probe_accuracy", "ood_probe_accuracy", "ood_retrained_probe_accuracy"}) {
        CHECK(e.out.find(key) != std::string::npos);
    }
    CHECK(fs::exists(dir.path / "eval" / "eval_report.txt"));
    CHECK(fs::exists(dir.path / "eval" / "heatmap.csv"));

    const Result two = run_cli({"eval", "--preset", "fig3b", "--checkpoint", "a=" + dir / "run/checkpoint.snecl",
                                "--checkpoint", "b=" + dir / "flag/checkpoint.snecl", "--data.test_n", "60"});
    REQUIRE(two.code == cli::exit_ok);
    CHECK(two.out.find("a.knn_accuracy") != std::string::npos);
    CHECK(two.out.find("b.knn_accuracy") != std::string::npos);

    const Result gone = run_cli({"eval", "--preset", "fig3b", "--checkpoint", dir / "nope.snecl"});
    CHECK(gone.code == cli::exit_failure);
    CHECK(gone.err.find("error[format]") != std::string::npos);
}

TEST_CASE("train from a dataset file rejects resampling augmentation") {
    TempDir dir("data");
    REQUIRE(run_cli({"gen", "--preset", "fig3a", "--data.n", "60", "--out", dir / "d.csv"}).code == cli::exit_ok);
    CHECK(run_cli(concat({"train", "--preset", "fig3b", "--data", dir / "d.csv", "--out", dir / "r"}, small_train))
              .code == cli::exit_validation);
    CHECK(run_cli(concat({"train", "--preset", "fig3b", "--augment", "gaussian_noise", "--data", dir / "d.csv",
                          "--out", dir / "r"},
                         small_train))
              .code == cli::exit_ok);
}

TEST_CASE("verify: passing suite prints PASS") {
    const Result v = run_cli({"verify", "equivalence"});
    CHECK(v.code == cli::exit_ok);
    CHECK(v.out.rfind("PASS equivalence", 0) == 0);
}

TEST_CASE("sweep: grid, resume and parallel jobs agree") {
    TempDir dir("sweep");
    const std::vector<std::string> grid{"sweep", "--preset", "fig3b", "--sweep.tau", "0.1,0.5",
                                        "--sweep.d_z", "2,3", "--epochs", "2", "--hidden", "8",
                                        "--data.n", "40", "--data.test_n", "40"};
    REQUIRE(run_cli(concat(grid, {"--out", dir / "s1"})).code == cli::exit_ok);
    const std::string first = read_text_file(dir / "s1/sweep.csv");
    std::istringstream lines(first);
    std::string header, row;
    std::getline(lines, header);
    CHECK(header.rfind("cell,", 0) == 0);
    CHECK(header.find("knn_accuracy") != std::string::npos);
    int rows = 0;
    while (std::getline(lines, row)) ++rows;
    CHECK(rows == 4);

    // Resume: a completed cell is not retrained, so its file is untouched.
    const auto stamp = fs::last_write_time(dir.path / "s1/cells/cell_0000.csv");
    REQUIRE(run_cli(concat(grid, {"--out", dir / "s1"})).code == cli::exit_ok);
    CHECK(fs::last_write_time(dir.path / "s1/cells/cell_0000.csv") == stamp);
    CHECK(read_text_file(dir / "s1/sweep.csv") == first);

    REQUIRE(run_cli(concat(grid, {"--jobs", "3", "--out", dir / "s2"})).code == cli::exit_ok);
    CHECK(read_text_file(dir / "s2/sweep.csv") == first);

    CHECK(run_cli({"sweep", "--preset", "fig3b", "--sweep.bogus", "1,2", "--out", dir / "s3"}).code ==
          cli::exit_validation);
}

TEST_CASE("plot: SVG from CSV, empty input writes nothing") {
    TempDir dir("plot");
    write_text_file(dir / "pts.csv", "z0,z1,label\n0,1,0\n1,0,1\n");
    REQUIRE(run_cli({"plot", dir / "pts.csv", "--kind", "scatter2d", "--out", dir / "pts.svg"}).code == cli::exit_ok);
    CHECK(read_text_file(dir / "pts.svg").rfind("<svg", 0) == 0);

    write_text_file(dir / "empty.csv", "z0,z1\n");
    CHECK(run_cli({"plot", dir / "empty.csv", "--kind", "scatter2d", "--out", dir / "empty.svg"}).code ==
          cli::exit_failure);
    CHECK(!fs::exists(dir.path / "empty.svg"));
}

} // TEST_SUITE
