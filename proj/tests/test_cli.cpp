#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string bin()
{
    const char* b = std::getenv("RSACE_BIN");
    REQUIRE_MESSAGE(b != nullptr, "RSACE_BIN must point at the rsace executable");
    return b;
}

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("rsace_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

int run(const std::string& args)
{
    const int st = std::system((bin() + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("validate on defaults")
{
    const fs::path d = scratch("validate");
    CHECK(run("validate --out " + d.string()) == 0);
    CHECK(fs::exists(d / "validate.json"));
}

TEST_CASE("usage errors")
{
    const fs::path d = scratch("usage");
    CHECK(run("run --config " + (d / "missing.json").string()) == 64);
    CHECK(run("sweep --param eps_out --values 0.1,abc --out " + d.string()) == 64);
    CHECK(run("sweep --param nope --values 1 --out " + d.string()) == 64);
    CHECK(run("run --mechanisms X-YZ --out " + d.string()) == 64);
    CHECK(run("frobnicate") == 64);
    CHECK(run("validate --inject nothing") == 64);
}

TEST_CASE("seeded runs are reproducible")
{
    const fs::path a = scratch("run_a"), b = scratch("run_b");
    REQUIRE(run("run --seed 7 --out " + a.string()) == 0);
    REQUIRE(run("run --seed 7 --out " + b.string()) == 0);
    const std::string ja = slurp(a / "run_R-SACE.json");
    CHECK_FALSE(ja.empty());
    CHECK(ja == slurp(b / "run_R-SACE.json"));
    CHECK(slurp(a / "run.csv") == slurp(b / "run.csv"));
}

TEST_CASE("sweep CSV layout")
{
    const fs::path d = scratch("sweep");
    REQUIRE(run("sweep --param eps_out --values 0.05 --realizations 1 --mechanisms R-SACE --jobs 1 --out " +
                d.string()) == 0);
    const std::string csv = slurp(d / "sweep_eps_out.csv");
    CHECK(csv.substr(0, csv.find('\n')) ==
          "param,value,mechanism,seed,ast,ast_se,r_cu_isac,r_cu_pc,r_tc,pd,pf,pe,tau1_opt,iters,ms");
    CHECK(fs::exists(d / "sweep_eps_out.json"));
}

TEST_CASE("injected faults fail validation")
{
    const fs::path d = scratch("inject");
    for (const char* f : {"detector", "outage", "closed_form", "qt", "chi2"}) {
        INFO(f);
        CHECK(run(std::string("validate --inject ") + f + " --out " + d.string()) == 2);
    }
}

TEST_CASE("infeasible sensing")
{
    const fs::path d = scratch("infeasible");
    std::ofstream(d / "cfg.json") << R"({"sigma0_2": 1e-6})";
    CHECK(run("run --config " + (d / "cfg.json").string() + " --out " + d.string()) == 1);
}
