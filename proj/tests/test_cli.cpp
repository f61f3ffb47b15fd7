#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kCli = PROGRADE_CLI_PATH;

fs::path temp_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / ("prograde_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run_in(const fs::path& cwd, const std::string& args) {
    const std::string cmd = "cd " + cwd.string() + " && " + kCli + " " + args +
                            " > cli_stdout.log 2> cli_stderr.log";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// relative path -> file bytes, excluding the shell capture logs
std::map<std::string, std::string> tree_bytes(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& entry : fs::recursive_directory_iterator(root)) {
        if (!entry.is_regular_file()) continue;
        const std::string rel = fs::relative(entry.path(), root).string();
        if (rel.find("cli_std") == 0) continue;
        out[rel] = slurp(entry.path());
    }
    return out;
}

// One complete pipeline pass with everything addressed relative to cwd, so
// two runs in different directories are comparable byte for byte.
void full_pipeline(const fs::path& dir) {
    REQUIRE(run_in(dir, "synth --out corpus --per-class 1 --seed 7 --size 512 --jobs 2") == 0);
    REQUIRE(run_in(dir, "mask corpus/s000_train_3p3 --k 3 --seed 5") == 0);
    REQUIRE(run_in(dir, "decompose corpus/s000_train_3p3 --lambda 1.0") == 0);
    REQUIRE(run_in(dir, "dataset --corpus corpus --out patches.bin --patches 20 "
                        "--patch-size 64 --seed 11") == 0);
    REQUIRE(run_in(dir, "train --data patches.bin --out weights.bin --iters 80 "
                        "--lr 0.1 --batch 20 --seed 4 --conv 5x6,3x8 --fc 16 "
                        "--dropout 0.0") == 0);
    REQUIRE(run_in(dir, "grade corpus/s002_eval_3p4 --weights weights.bin "
                        "--patches 40 --seed 17 --out grade.txt") == 0);
    REQUIRE(run_in(dir, "eval --corpus corpus --weights weights.bin --patches 40 "
                        "--seed 17 --jobs 2 --out eval.txt") == 0);
}

} // namespace

TEST_CASE("repeated runs with identical seeds are byte-identical") {
    auto a = temp_dir("det_a");
    auto b = temp_dir("det_b");
    full_pipeline(a);
    full_pipeline(b);
    auto ta = tree_bytes(a);
    auto tb = tree_bytes(b);
    REQUIRE(ta.size() == tb.size());
    for (const auto& [rel, bytes] : ta) {
        REQUIRE(tb.count(rel) == 1);
        CHECK_MESSAGE(bytes == tb[rel], rel);
    }
    // the deliverables named by the determinism requirement all exist
    for (const char* f : {"corpus/s000_train_3p3/mask.png", "weights.bin",
                          "grade.txt", "eval.txt"}) {
        CHECK(ta.count(f) == 1);
    }
    // a different seed changes the weights
    REQUIRE(run_in(a, "train --data patches.bin --out weights2.bin --iters 80 "
                      "--lr 0.1 --batch 20 --seed 9 --conv 5x6,3x8 --fc 16 "
                      "--dropout 0.0") == 0);
    CHECK(slurp(a / "weights.bin") != slurp(a / "weights2.bin"));
}

TEST_CASE("reports and provenance: no timestamps unless requested") {
    auto dir = temp_dir("prov");
    full_pipeline(dir);
    const std::string prov = slurp(dir / "eval.txt.provenance.txt");
    CHECK(prov.find("command: ") != std::string::npos);
    CHECK(prov.find("version: ") != std::string::npos);
    CHECK(prov.find("timestamp") == std::string::npos);

    REQUIRE(run_in(dir, "--timestamps mask corpus/s001_train_4p4 --k 3 --seed 5 "
                        "--out mask4.png") == 0);
    CHECK(slurp(dir / "mask4.png.provenance.txt").find("timestamp: ") !=
          std::string::npos);

    const std::string eval_report = slurp(dir / "eval.txt");
    CHECK(eval_report.find("summary slides 2 accuracy ") != std::string::npos);
    CHECK(eval_report.find("verdict") != std::string::npos);
    const std::string grade_report = slurp(dir / "grade.txt");
    CHECK(grade_report.find("verdict") != std::string::npos);
}

TEST_CASE("detector subcommands run on slide packages") {
    auto dir = temp_dir("detect");
    REQUIRE(run_in(dir, "synth --out corpus --per-class 1 --seed 3 --size 512") == 0);
    REQUIRE(run_in(dir, "nucleoli corpus/s001_train_4p4 --out nucleoli.txt") == 0);
    const std::string nuc = slurp(dir / "nucleoli.txt");
    CHECK(nuc.find("summary nuclei ") != std::string::npos);
    REQUIRE(run_in(dir, "cribriform corpus/s000_train_3p3 --out crib.txt") == 0);
    CHECK(slurp(dir / "crib.txt").find("summary regions 0") != std::string::npos);
}

TEST_CASE("gradcheck passes and reports the max relative errors") {
    auto dir = temp_dir("gradcheck");
    REQUIRE(run_in(dir, "gradcheck --out gc.txt") == 0);
    const std::string report = slurp(dir / "gc.txt");
    CHECK(report.find("gradcheck energy max_rel") != std::string::npos);
    CHECK(report.find("gradcheck cnn max_rel") != std::string::npos);
    CHECK(report.find("gradcheck pass") != std::string::npos);
}

TEST_CASE("exit codes: 2 for usage errors, 1 for pipeline errors") {
    auto dir = temp_dir("exit");
    CHECK(run_in(dir, "unknown-subcommand") == 2);
    CHECK(run_in(dir, "mask somewhere --bogus-flag 1") == 2);
    CHECK(run_in(dir, "mask nonexistent_slide") == 1);
    CHECK(run_in(dir, "") == 2);  // a subcommand is required
    CHECK(run_in(dir, "--help") == 0);

    // pipeline errors are single-line and machine-parsable
    CHECK(run_in(dir, "mask nonexistent_slide") == 1);
    const std::string err = slurp(dir / "cli_stderr.log");
    CHECK(err.rfind("error: ", 0) == 0);
    CHECK(std::count(err.begin(), err.end(), '\n') == 1);
}
