#include "runner.hpp"
#include "ppk/csv.hpp"
#include "ppk/fcs.hpp"

#include <doctest.h>

#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <sys/wait.h>

using namespace ppk;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path p = fs::temp_directory_path() / ("ppk_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(PPK_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

cli::SweepSpec small_spec(cli::Task task, const fs::path& out) {
    cli::SweepSpec s;
    s.task = task;
    s.base = {0.0, 1.0, 1.0, 1.0};
    s.dim = 12;
    s.out = out.string();
    return s;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("number formatting round-trips exactly") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0, -0.0, std::numeric_limits<double>::denorm_min()}) {
        const double back = csv::parse_double(csv::format(v));
        CHECK(std::memcmp(&back, &v, sizeof v) == 0);
    }
    CHECK(std::isnan(csv::parse_double(csv::format(std::nan("")))));
    CHECK(std::isinf(csv::parse_double(csv::format(-std::numeric_limits<double>::infinity()))));
    CHECK_THROWS_AS(csv::parse_double("1.5x"), std::invalid_argument);
    CHECK_THROWS_AS(csv::parse_int("2.0"), std::invalid_argument);
}

TEST_CASE("tables round-trip through files") {
    const auto dir = scratch_dir();
    csv::Table t;
    t.metadata = {{"tool", "ppk"}, {"note", "x = a + a^dagger"}};
    t.columns = {"a", "b", "label"};
    t.rows = {{csv::format(0.1), csv::format(std::int64_t{-3}), "pd"}, {csv::format(1e-17), csv::format(2.0), "hom"}};
    csv::write((dir / "t.csv").string(), t);
    const auto r = csv::read((dir / "t.csv").string());
    CHECK(r.metadata == t.metadata);
    CHECK(r.columns == t.columns);
    CHECK(r.rows == t.rows);
    CHECK(r.numeric_column("a") == std::vector<double>{0.1, 1e-17});
    CHECK(*r.meta("tool") == "ppk");
    CHECK(r.meta("missing") == nullptr);
    CHECK_THROWS_AS(r.column("zzz"), std::out_of_range);
    fs::remove_all(dir);
}

TEST_CASE("axis parsing and sweep validation") {
    const auto a = cli::Axis::parse("delta:-1:1:5");
    CHECK(a.name == "delta");
    CHECK(a.values == std::vector<double>{-1.0, -0.5, 0.0, 0.5, 1.0});
    const auto l = cli::Axis::parse("g:0.1:10:3:log");
    CHECK(l.values[1] == doctest::Approx(1.0));
    CHECK(cli::Axis::parse("u=0.5,0.25").values == std::vector<double>{0.5, 0.25});
    CHECK_THROWS(cli::Axis::parse("delta:0:1:0"));
    CHECK_THROWS(cli::Axis::parse("g:-1:1:3:log"));
    CHECK_THROWS(cli::Axis::parse("delta:0:1:3:cubic"));

    cli::SweepSpec s;
    s.out = "x.csv";
    CHECK_NOTHROW(s.validate());
    s.base.g = -1.0;
    CHECK_THROWS_AS(s.validate(), cli::ValidationError);
    s = cli::SweepSpec{};
    CHECK_THROWS_AS(s.validate(), cli::ValidationError);  // no output path
    s.out = "x.csv";
    s.scheme = "heterodyne";
    CHECK_THROWS_AS(s.validate(), cli::ValidationError);
    s.scheme.clear();
    s.axes = {cli::Axis::parse("colour:0:1:3")};
    CHECK_THROWS_AS(s.validate(), cli::ValidationError);
}

TEST_CASE("diffusion output schema and values") {
    const auto dir = scratch_dir();
    auto s = small_spec(cli::Task::diffusion, dir / "d.csv");
    s.scheme = "pd";
    s.axes = {cli::Axis::parse("delta=0,0.5")};
    std::ostringstream log;
    const auto summary = cli::run(s, log);
    CHECK(summary.complete);
    const auto t = csv::read(s.out);
    CHECK(t.columns == std::vector<std::string>{"g", "delta", "u", "kappa", "scheme", "theta", "dim", "mean_current",
                                                "diffusion", "residual_norm"});
    REQUIRE(t.rows.size() == 2);
    const auto ss = solve_steady_state({0.5, 1.0, 1.0, 1.0}, 12);
    CHECK(t.numeric_column("diffusion")[1] == doctest::Approx(diffusion(ss, MeasurementScheme::photodetection())));
    CHECK(t.rows[0][t.column("scheme")] == "pd");
    CHECK(t.rows[0][t.column("theta")] == "nan");
    CHECK(t.meta("tool") != nullptr);
    fs::remove_all(dir);
}

TEST_CASE("trajectory output is deterministic for a fixed seed") {
    const auto dir = scratch_dir();
    for (const char* name : {"a.csv", "b.csv"}) {
        auto s = small_spec(cli::Task::trajectory, dir / name);
        s.scheme = "hom";
        s.t_final = 2.0;
        s.n_traj = 3;
        s.seed = 7;
        s.workers = std::string(name) == "a.csv" ? 1 : 3;
        std::ostringstream log;
        cli::run(s, log);
    }
    CHECK(slurp(dir / "a.csv") == slurp(dir / "b.csv"));
    CHECK(!slurp(dir / "a.csv").empty());
    fs::remove_all(dir);
}

TEST_CASE("resume after interruption reproduces the uninterrupted run") {
    const auto dir = scratch_dir();
    auto make = [&](const fs::path& out) {
        auto s = small_spec(cli::Task::trajectory, out);
        s.t_final = 1.0;
        s.record_stride = 200;
        s.seed = 11;
        s.axes = {cli::Axis::parse("delta=0,1,2"), cli::Axis::parse("g=0.8,1.0")};
        return s;
    };
    std::ostringstream log;
    cli::run(make(dir / "full.csv"), log);

    auto partial = make(dir / "resumed.csv");
    partial.stop_after = 2;
    const auto first = cli::run(partial, log);
    CHECK_FALSE(first.complete);
    CHECK(first.points_done == 2);
    // A torn final row left behind by a kill is discarded on resume.
    std::ofstream(dir / "resumed.csv", std::ios::app) << "0.8,1,1,1,pd,na";
    auto rest = make(dir / "resumed.csv");
    rest.resume = true;
    const auto second = cli::run(rest, log);
    CHECK(second.complete);
    CHECK(slurp(dir / "resumed.csv") == slurp(dir / "full.csv"));

    auto changed = make(dir / "resumed.csv");
    changed.resume = true;
    changed.seed = 12;
    CHECK_THROWS_AS(cli::run(changed, log), cli::ValidationError);
    fs::remove_all(dir);
}

TEST_CASE("CSV files written by every task reparse") {
    const auto dir = scratch_dir();
    std::ostringstream log;
    auto st = small_spec(cli::Task::steady_state, dir / "s.csv");
    st.axes = {cli::Axis::parse("delta:-1:1:3")};
    cli::run(st, log);
    auto sp = small_spec(cli::Task::spectrum, dir / "sp.csv");
    sp.scheme = "hom";
    sp.omega_count = 4;
    cli::run(sp, log);
    auto wg = small_spec(cli::Task::wigner, dir / "w.csv");
    wg.dim = 0;
    wg.wigner_step = 0.5;
    cli::run(wg, log);
    for (const char* f : {"s.csv", "sp.csv", "w.csv"}) {
        const auto t = csv::read((dir / f).string());
        const auto copy = dir / (std::string("copy_") + f);
        csv::write(copy.string(), t);
        CHECK(slurp(copy) == slurp(dir / f));
        CHECK(!t.rows.empty());
    }
    const auto s = csv::read((dir / "s.csv").string());
    CHECK(s.rows.size() == 3);
    const auto w = csv::read((dir / "w.csv").string());
    CHECK(w.meta("convention") != nullptr);
    fs::remove_all(dir);
}

TEST_CASE("exit codes of the command-line tool") {
    const auto dir = scratch_dir();
    const std::string out = (dir / "o.csv").string();
    CHECK(run_cli("diffusion --g 1 --delta 0 --u 1 --dim 12 --scheme hom --out " + out) == 0);
    CHECK(run_cli("diffusion --g -1 --out " + out) == 1);
    CHECK(run_cli("diffusion --g 1") == 1);
    CHECK(run_cli("diffusion --scheme het --out " + out) == 1);
    CHECK(run_cli("frobnicate") == 1);
    // A phase-space window that clips the state is a numerical failure.
    CHECK(run_cli("wigner --g 0 --dim 4 --extent 1 --step 0.5 --out " + out) == 2);
    {
        std::ofstream cfg(dir / "run.ini");
        cfg << "[steady-state]\ng = 0.5\ndelta = 1\ndim = 10\n";
    }
    CHECK(run_cli("--config " + (dir / "run.ini").string() + " steady-state --out " + out) == 0);
    const auto t = csv::read(out);
    CHECK(t.numeric_column("g")[0] == 0.5);
    CHECK(t.numeric_column("dim")[0] == 10);
    fs::remove_all(dir);
}

}
