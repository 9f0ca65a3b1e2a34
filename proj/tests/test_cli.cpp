#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

const std::string cli = DPGS_CLI_PATH;

fs::path work_dir() {
    auto dir = fs::temp_directory_path() / "dpgs_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run_raw(const std::string& command) {
    std::string cmd = "cd " + work_dir().string() + " && " + command +
                      " >cli_stdout.txt 2>cli_stderr.txt";
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    return WEXITSTATUS(status);
}

int run(const std::string& args) { return run_raw(cli + " " + args); }

std::string stdout_text() {
    std::ifstream in(work_dir() / "cli_stdout.txt");
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

std::string file_bytes(const std::string& name) {
    std::ifstream in(work_dir() / name, std::ios::binary);
    REQUIRE(in.good());
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_file(const std::string& name, const std::string& content) {
    std::ofstream(work_dir() / name) << content;
}

const std::string plant_args =
    "plant --classes 2 --true-k 2 --dim 3 --n-per-class 400 --sigma 0.1 --separation 8";
const std::string fit_args =
    "fit --input data.csv --out model.bin --epsilon 1 --delta 1e-5 --k 2 --clip 12 "
    "--est-clip 6 --cov-clip 2";

} // namespace

TEST_CASE("help exits zero, usage mistakes exit 64") {
    CHECK(run("--help") == 0);
    CHECK(run("fit --help") == 0);
    CHECK(run("--definitely-not-a-flag") == 64);
    CHECK(run("fit --input x.csv") == 64);
}

TEST_CASE("budget usage errors exit 64") {
    CHECK(run(plant_args + " --out data.csv --seed 7") == 0);
    CHECK(run("fit --input data.csv --out m.bin --k 2 --clip 12 --seed 1") == 64);
    CHECK(run("fit --input data.csv --out m.bin --epsilon -1 --k 2 --clip 12 --seed 1") == 64);
    CHECK(run("fit --input data.csv --out m.bin --epsilon 1 --delta 1.5 --k 2 --clip 12 "
              "--seed 1") == 64);
    CHECK(run("generate --model missing.bin --out s.csv -m 10 --filter --seed 1") == 64);
}

TEST_CASE("the full chain runs and prints its audit") {
    CHECK(run(plant_args + " --out data.csv --truth-out truth.bin --seed 7") == 0);
    CHECK(run(fit_args + " --seed 7") == 0);
    std::string fit_out = stdout_text();
    CHECK(fit_out.find("dp-cluster") != std::string::npos);
    CHECK(fit_out.find("composed") != std::string::npos);

    CHECK(run("generate --model model.bin --out synth.csv -m 60 --filter --original data.csv "
              "--threshold 1 --seed 7") == 0);
    CHECK(run("generate --model model.bin --out plain.csv -m 60 --seed 7") == 0);
    CHECK(run("filter --synthetic plain.csv --original data.csv --out filtered.csv "
              "--threshold 1 --epsilon 0.2 --seed 7") == 0);
    CHECK(run("train-mlp --input synth.csv --out mlp.bin --epochs 5 --hidden 8 --batch 32 "
              "--seed 7") == 0);
    CHECK(run("eval --model mlp.bin --test data.csv") == 0);
    CHECK(stdout_text().find("accuracy") != std::string::npos);
}

TEST_CASE("same seed means byte-identical artifacts") {
    CHECK(run(plant_args + " --out data.csv --seed 7") == 0);

    CHECK(run(fit_args + " --seed 11") == 0);
    std::string first = file_bytes("model.bin");
    CHECK(run(fit_args + " --seed 11") == 0);
    CHECK(file_bytes("model.bin") == first);

    CHECK(run("generate --model model.bin --out synth.csv -m 40 --seed 11") == 0);
    std::string synth = file_bytes("synth.csv");
    CHECK(run("generate --model model.bin --out synth.csv -m 40 --seed 11") == 0);
    CHECK(file_bytes("synth.csv") == synth);

    CHECK(run(fit_args + " --seed 12") == 0);
    CHECK(file_bytes("model.bin") != first);
}

TEST_CASE("the environment seed matches an explicit flag") {
    CHECK(run(plant_args + " --out by_flag.csv --seed 31") == 0);
    CHECK(run_raw("env DPGS_SEED=31 " + cli + " " + plant_args + " --out by_env.csv") == 0);
    CHECK(file_bytes("by_flag.csv") == file_bytes("by_env.csv"));

    CHECK(run_raw("env DPGS_SEED=junk " + cli + " " + plant_args + " --out junk.csv") == 64);
}

TEST_CASE("config files supply defaults and flags override them") {
    CHECK(run(plant_args + " --out data.csv --seed 7") == 0);
    write_file("fit.cfg", "epsilon = 1\ndelta = 1e-5\nk = 2\nclip = 12\nest-clip = 6\n");
    CHECK(run("fit --config fit.cfg --input data.csv --out from_cfg.bin --seed 11") == 0);

    CHECK(run(fit_args + " --seed 11") == 0);
    // The config carries a different cov clip than the flag run, so the
    // models agree only if the flag-equivalent settings were honored.
    CHECK(run("fit --config fit.cfg --cov-clip 2 --input data.csv --out override.bin "
              "--seed 11") == 0);
    CHECK(file_bytes("override.bin") == file_bytes("model.bin"));
}

TEST_CASE("io and parse failures exit 3") {
    CHECK(run("fit --input not_there.csv --out m.bin --epsilon 1 --delta 1e-5 --k 2 "
              "--clip 12 --seed 1") == 3);
    write_file("broken.csv", "1.0,2.0,0\n1.0,oops,1\n");
    CHECK(run("fit --input broken.csv --out m.bin --epsilon 1 --delta 1e-5 --k 2 --clip 12 "
              "--seed 1") == 3);
}

TEST_CASE("contract violations exit 1") {
    write_file("single.csv", "1.0,2.0,0\n1.1,2.1,0\n0.9,1.9,0\n1.2,2.2,0\n");
    CHECK(run("train-mlp --input single.csv --out m.bin --epochs 2 --seed 1") == 1);
}

TEST_CASE("bench gates on its thresholds") {
    const std::string bench_base =
        "bench --classes 2 --true-k 2 --dim 3 --n-per-class 800 --sigma 0.5 "
        "--separation 26 --k-grid 2 --clip-grid 6 --cov-clip 2 --epsilon-grid inf "
        "--seed-list 1,2,3 --no-classifiers --out bench.tsv";
    CHECK(run(bench_base) == 0);
    std::string table = file_bytes("bench.tsv");
    CHECK(table.find("weight_l1") != std::string::npos);
    CHECK(stdout_text().find("PASS") != std::string::npos);

    CHECK(run(bench_base + " --min-purity 1.5") == 1);
    CHECK(stdout_text().find("FAIL") != std::string::npos);
}
