#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "nlohmann/json.hpp"

// Drives the installed binary end to end through a shell, the way a user
// would. The binary path arrives via HOMTOM_CLI_PATH (set by the test
// harness).

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string cli_path() {
    const char* p = std::getenv("HOMTOM_CLI_PATH");
    REQUIRE_MESSAGE(p != nullptr,
                    "HOMTOM_CLI_PATH must point at the command-line binary");
    return p;
}

fs::path work_dir(const char* name) {
    auto dir = fs::temp_directory_path() / "homtom_test_cli" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

struct RunResult {
    int code = -1;
    std::string out;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run(const fs::path& dir, const std::string& args,
              const std::string& env_prefix = "") {
    const std::string cmd = "cd '" + dir.string() + "' && " + env_prefix + "'" +
                            cli_path() + "' " + args + " > stdout.txt 2> stderr.txt";
    const int st = std::system(cmd.c_str());
    RunResult r;
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    r.out = slurp(dir / "stdout.txt");
    return r;
}

}  // namespace

TEST_CASE("usage and help") {
    auto dir = work_dir("usage");
    CHECK(run(dir, "").code == 2);
    CHECK(run(dir, "--help").code == 0);
    CHECK(run(dir, "reconstruct --no-such-flag").code == 2);
    CHECK(run(dir, "frobnicate").code == 2);
}

TEST_CASE("reconstruct writes a matrix table and a summary") {
    auto dir = work_dir("reconstruct");
    auto r = run(dir, "reconstruct --state coherent --mean-n 4 --f 16 --n-max 8 "
                      "--output rec.csv");
    CHECK(r.code == 0);
    CHECK(r.out.find("max epsilon") != std::string::npos);

    const auto table = slurp(dir / "rec.csv");
    CHECK(table.rfind("n,m,re,im,epsilon\n", 0) == 0);

    const auto summary = json::parse(slurp(dir / "rec.summary.json"));
    CHECK(summary["command"] == "reconstruct");
    CHECK(summary["f"] == 16);
    CHECK(summary["max_epsilon"].get<double>() < 1e-4);

    // Identical configs give byte-identical artifacts.
    auto r2 = run(dir, "reconstruct --state coherent --mean-n 4 --f 16 --n-max 8 "
                       "--output rec2.csv");
    CHECK(r2.code == 0);
    CHECK(slurp(dir / "rec2.csv") == table);
}

TEST_CASE("kernel table has the documented schema") {
    auto dir = work_dir("kernel");
    auto r = run(dir, "kernel --m 0,2 --d 0,1 --x-max 1 --x-step 0.5 --output k.csv");
    CHECK(r.code == 0);
    const auto table = slurp(dir / "k.csv");
    CHECK(table.rfind("m,d,x,re,im\n", 0) == 0);
    // The vacuum diagonal at the origin is exactly representable.
    CHECK(table.find("\n0,0,0,1.9999999999999996,0\n") != std::string::npos);
}

TEST_CASE("config file drives a run and flags override it") {
    auto dir = work_dir("config");
    std::ofstream(dir / "run.cfg") << "# scan setup\n"
                                   << "command = reconstruct\n"
                                   << "state.kind = coherent\n"
                                   << "state.mean_n = 4.0\n"
                                   << "f = 8\n"
                                   << "n_max = 6\n"
                                   << "output = from_config.csv\n";
    auto r = run(dir, "--config run.cfg");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "from_config.csv"));
    CHECK(r.out.find("f=8") != std::string::npos);

    auto r2 = run(dir, "--config run.cfg --f 12 --output flag_wins.csv");
    CHECK(r2.code == 0);
    CHECK(fs::exists(dir / "flag_wins.csv"));
    CHECK(r2.out.find("f=12") != std::string::npos);

    std::ofstream(dir / "bad.cfg") << "no_such_key = 1\n";
    CHECK(run(dir, "--config bad.cfg reconstruct").code == 2);
    CHECK(run(dir, "--config missing.cfg reconstruct").code == 2);
}

TEST_CASE("relative outputs land in the directory from the environment") {
    auto dir = work_dir("envdir");
    auto r = run(dir, "reconstruct --state vacuum --f 2 --n-max 2 --output env.csv",
                 "HOMTOM_OUTPUT_DIR=results ");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "results" / "env.csv"));
    CHECK(fs::exists(dir / "results" / "env.summary.json"));
    CHECK_FALSE(fs::exists(dir / "env.csv"));
}

TEST_CASE("exit codes separate config, domain, and convergence failures") {
    auto dir = work_dir("codes");
    // Physical domain: efficiency at or below the smearing bound.
    CHECK(run(dir, "reconstruct --state coherent --mean-n 4 --eta 0.4 --f 2 "
                   "--n-max 2").code == 3);
    // Number states have no smeared pdf.
    CHECK(run(dir, "reconstruct --state fock --fock-n 2 --eta 0.9 --f 2 "
                   "--n-max 2").code == 3);
    // Config: unknown state kind.
    CHECK(run(dir, "reconstruct --state banana --f 2 --n-max 2").code == 2);
    // Convergence: kernel value beyond double-precision reach.
    CHECK(run(dir, "kernel --eta 0.8 --m 47 --d 0 --x-max 0 --x-step 1 "
                   "--output pl.csv").code == 4);
    // Unknown simd backend name.
    CHECK(run(dir, "verify --isa pentium").code == 2);
}

TEST_CASE("observable emits the documented json fields") {
    auto dir = work_dir("observable");
    auto r = run(dir, "observable --state coherent --mean-n 4 --output obs.json");
    CHECK(r.code == 0);
    const auto doc = json::parse(slurp(dir / "obs.json"));
    CHECK(std::abs(doc["mean"].get<double>() - 4.0) < 1e-8);
    CHECK(std::abs(doc["variance"].get<double>() - 4.0) < 1e-8);
    CHECK(std::abs(doc["precision"].get<double>() - 3.5355339059327378) < 1e-6);
    CHECK(doc["n_samples"] == 0);

    auto rmc = run(dir, "observable --state coherent --mean-n 4 --mode mc "
                        "--samples 20000 --seed 3 --output mc.json");
    CHECK(rmc.code == 0);
    const auto mc = json::parse(slurp(dir / "mc.json"));
    CHECK(mc["n_samples"] == 20000);
    const double se = mc["std_error"].get<double>();
    CHECK(se > 0.0);
    CHECK(std::abs(mc["mean"].get<double>() - 4.0) < 5.0 * se);
}

TEST_CASE("sweep-f reports the threshold crossing") {
    auto dir = work_dir("sweepf");
    auto r = run(dir, "sweep-f --state coherent --mean-n 4 --f 6..12 --n-max 10 "
                      "--track 5,5 --output sf.csv");
    CHECK(r.code == 0);
    CHECK(r.out.find("f0 = 8") != std::string::npos);
    const auto table = slurp(dir / "sf.csv");
    CHECK(table.rfind("f,eps_5_5\n", 0) == 0);
    const auto summary = json::parse(slurp(dir / "sf.summary.json"));
    CHECK(summary["f0"] == 8);
}

TEST_CASE("mc-experiment round-trips its records through a dataset file") {
    auto dir = work_dir("mcexp");
    auto r = run(dir, "mc-experiment --state coherent --mean-n 2 --f 4 --n-max 3 "
                      "--samples-per-phase 500 --seed 9 --keep-records "
                      "--output mc.csv");
    CHECK(r.code == 0);
    CHECK(fs::exists(dir / "mc.csv"));
    CHECK(fs::exists(dir / "mc.stderr.csv"));
    CHECK(fs::exists(dir / "mc.homodyne"));
    CHECK(slurp(dir / "mc.csv").rfind("n,m,re,im,epsilon\n", 0) == 0);
    CHECK(slurp(dir / "mc.stderr.csv").rfind("n,m,re,im,sigma\n", 0) == 0);

    auto r2 = run(dir, "mc-experiment --input mc.homodyne --n-max 3 --output back.csv");
    CHECK(r2.code == 0);
    const auto summary = json::parse(slurp(dir / "back.summary.json"));
    CHECK(summary["n_records"] == 2000);

    // Same seed, same bytes.
    auto r3 = run(dir, "mc-experiment --state coherent --mean-n 2 --f 4 --n-max 3 "
                       "--samples-per-phase 500 --seed 9 --keep-records "
                       "--output mc2.csv");
    CHECK(r3.code == 0);
    CHECK(slurp(dir / "mc2.csv") == slurp(dir / "mc.csv"));
    CHECK(slurp(dir / "mc2.homodyne") == slurp(dir / "mc.homodyne"));
}

TEST_CASE("stat-errors and sweep-eta emit sigma tables") {
    auto dir = work_dir("sigma");
    auto r = run(dir, "stat-errors --state coherent --mean-n 4 --f 32 --n-max 6 "
                      "--output se.csv");
    CHECK(r.code == 0);
    CHECK(slurp(dir / "se.csv").rfind("n,m,re,im,sigma\n", 0) == 0);
    const auto summary = json::parse(slurp(dir / "se.summary.json"));
    CHECK(summary["n_data_scaling"].get<std::string>().find("sqrt(N)") !=
          std::string::npos);

    auto r2 = run(dir, "sweep-eta --state coherent --mean-n 4 --eta 1.0,0.95 --f 32 "
                       "--n-max 6 --track 5,5 --output sw.csv");
    CHECK(r2.code == 0);
    const auto table = slurp(dir / "sw.csv");
    CHECK(table.rfind("eta,sigma_5_5\n", 0) == 0);
}

TEST_CASE("verify passes on a healthy build") {
    auto dir = work_dir("verify");
    auto r = run(dir, "verify");
    CHECK(r.code == 0);
    CHECK(r.out.find("verify: PASS") != std::string::npos);
    // The scalar backend must pass the same checks.
    CHECK(run(dir, "verify --isa scalar").code == 0);
}
