#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "lfc/lattice.hpp"

namespace fs = std::filesystem;

namespace {

const std::string kSmall =
    " -s rows=12 -s cols=10 -s wavelet_length=9 -s sweeps=30 -s burn_in=10 -s thin=2 -s nu=4"
    " -s trace_columns=2,5 -s realisations=2 -s profile_sweeps=20";

int run_cli(const std::string& args, const fs::path& log, const fs::path& cwd = {}) {
    const std::string cd = cwd.empty() ? "" : "cd " + cwd.string() + " && ";
    const std::string cmd = cd + std::string(LFC_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("lfc_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
        if (e.is_regular_file() && e.path().filename() != "log.txt") out[fs::relative(e.path(), dir).string()] = slurp(e.path());
    }
    return out;
}

}  // namespace

TEST(Cli, FullPipelineIsByteReproducible) {
    std::map<std::string, std::string> runs[2];
    for (int r = 0; r < 2; ++r) {
        const fs::path d = fresh_dir("pipeline" + std::to_string(r));
        // Relative output dir so the echoed config is identical across runs.
        const std::string base = kSmall + " --seed 5 -o .";
        ASSERT_EQ(run_cli(base + " simulate-prior", d / "log.txt", d), 0) << slurp(d / "log.txt");
        ASSERT_EQ(run_cli(base + " synth", d / "log.txt", d), 0) << slurp(d / "log.txt");
        ASSERT_EQ(run_cli(base + " invert", d / "log.txt", d), 0) << slurp(d / "log.txt");
        ASSERT_EQ(run_cli(base + " analyze", d / "log.txt", d), 0) << slurp(d / "log.txt");
        runs[r] = snapshot(d);
    }
    EXPECT_EQ(runs[0], runs[1]);
    const auto& files = runs[0];
    for (const char* f : {"prior_000.txt", "prior_001.txt", "truth.txt", "elastic.txt", "cube.txt", "manifest.txt",
                          "trace.csv", "diagnostics.txt", "marginal.csv", "marginal.pgm", "mode.txt", "trace_j2.csv",
                          "trace_j5.csv", "connectivity_curve.csv", "marginal_hist.csv", "effective_invert.cfg"}) {
        EXPECT_TRUE(files.count(f)) << f;
    }
    int samples = 0, contacts = 0;
    for (const auto& [name, body] : files) {
        samples += name.rfind("samples/sample_", 0) == 0;
        contacts += name.rfind("contact_", 0) == 0 && name.ends_with(".csv");
    }
    EXPECT_EQ(samples, 10);
    EXPECT_EQ(contacts, 4);

    std::istringstream cube(files.at("cube.txt"));
    std::string line;
    int lines = 0;
    while (std::getline(cube, line)) ++lines;
    EXPECT_EQ(lines, 1 + 12 * 10);

    std::istringstream prior(files.at("prior_000.txt"));
    const lfc::LfcField f = lfc::read_field(prior);
    EXPECT_EQ(f.rows(), 12);
    EXPECT_EQ(f.cols(), 10);

    std::istringstream curve(files.at("connectivity_curve.csv"));
    std::getline(curve, line);
    double prev = 1.0;
    while (std::getline(curve, line)) {
        const double p = std::stod(line.substr(line.find(',') + 1));
        EXPECT_LE(p, prev);
        prev = p;
    }
}

TEST(Cli, SeedChangesOutput) {
    const fs::path a = fresh_dir("seed_a"), b = fresh_dir("seed_b");
    ASSERT_EQ(run_cli(kSmall + " --seed 1 -o " + a.string() + " synth", a / "log.txt"), 0);
    ASSERT_EQ(run_cli(kSmall + " --seed 2 -o " + b.string() + " synth", b / "log.txt"), 0);
    EXPECT_NE(slurp(a / "cube.txt"), slurp(b / "cube.txt"));
}

TEST(Cli, ProfilePriorAndTuning) {
    const fs::path d = fresh_dir("profile");
    const std::string base = kSmall + " -s prior=profile --seed 3 -o " + d.string();
    ASSERT_EQ(run_cli(base + " synth", d / "log.txt", d), 0) << slurp(d / "log.txt");
    ASSERT_EQ(run_cli(base + " invert --tune", d / "log.txt"), 0) << slurp(d / "log.txt");
    const std::string table = slurp(d / "tune.csv");
    EXPECT_EQ(table.rfind("nu,", 0), 0u) << table;
    EXPECT_TRUE(fs::exists(d / "trace.csv"));
}

TEST(Cli, ConfigFileAndOverrides) {
    const fs::path d = fresh_dir("config");
    {
        std::ofstream cfg(d / "run.cfg");
        cfg << "rows = 12\ncols = 10\nwavelet_length = 9\nrealisations = 1\n";
    }
    ASSERT_EQ(run_cli("-c " + (d / "run.cfg").string() + " -s realisations=3 -o " + d.string() + " simulate-prior", d / "log.txt"), 0)
        << slurp(d / "log.txt");
    EXPECT_TRUE(fs::exists(d / "prior_002.txt"));
    const std::string eff = slurp(d / "effective_simulate-prior.cfg");
    EXPECT_NE(eff.find("realisations = 3"), std::string::npos);
    EXPECT_NE(eff.find("rows = 12"), std::string::npos);
}

TEST(Cli, ErrorsMapToExitCodes) {
    const fs::path d = fresh_dir("errors");
    EXPECT_EQ(run_cli("-s no_such_key=1 -o " + d.string() + " synth", d / "log.txt"), 2);
    EXPECT_EQ(run_cli("-s rows=abc -o " + d.string() + " synth", d / "log.txt"), 2);
    EXPECT_EQ(run_cli("--bogus-flag synth", d / "log.txt"), 2);
    EXPECT_EQ(run_cli(kSmall + " -o " + d.string() + " invert", d / "log.txt"), 2);  // no cube yet
    EXPECT_EQ(run_cli(kSmall + " -o " + d.string() + " analyze", d / "log.txt"), 2);  // no samples
    ASSERT_EQ(run_cli(kSmall + " -o " + d.string() + " synth", d / "log.txt"), 0);
    EXPECT_EQ(run_cli(kSmall + " -s rows=11 -o " + d.string() + " invert", d / "log.txt"), 2);  // dims mismatch
}
