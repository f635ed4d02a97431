#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "kfree/cli_io.hpp"
#include "kfree/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace kfree;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("kfree_cli_io_" + name);
    fs::remove_all(p);
    return p;
}

std::pair<ErrorCode, std::string> failure_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return {e.code(), e.what()};
    }
    return {ErrorCode::Io, ""};
}

const char* kParaboloidToml = R"(
h0 = 1.0
lambda0 = 1.118033988749895
K0 = 0.25
psi = "one"
solver = "elliptic"

[omega]
kind = "disk"
radius = 1.0
)";

std::vector<std::vector<std::string>> read_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::stringstream ss(text);
    std::string line;
    while (std::getline(ss, line)) {
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.emplace_back();
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("minimal TOML is filled with defaults") {
    const auto cfg = parse_config_string("h0 = 1.0\nlambda0 = 2.0\n[omega]\nkind = \"disk\"\nradius = 1.0\n", ConfigFormat::Toml);
    CHECK(cfg.K0 == 0.0);
    CHECK(cfg.psi == "zero");
    CHECK(cfg.solver == "homogeneous");
    CHECK(cfg.mesh.n_planes == 256);
    CHECK(cfg.tolerances.ma == 1e-8);
    CHECK(cfg.tolerances.fb == 1e-3);
    CHECK(cfg.seed == kDefaultSeed);
    CHECK(cfg.dimension == 2);
}

TEST_CASE("every violation is reported with its field path") {
    const auto [code, what] = failure_of([] {
        parse_config_string("h0 = -1.0\nlambda0 = -1.0\nbogus = 3\n[mesh]\nn_planes = 2\n", ConfigFormat::Toml);
    });
    CHECK(code == ErrorCode::ValidationError);
    CHECK(what.find("lambda0") != std::string::npos);
    CHECK(what.find("h0") != std::string::npos);
    CHECK(what.find("bogus") != std::string::npos);
    CHECK(what.find("mesh.n_planes") != std::string::npos);
}

TEST_CASE("curvature and solver rules") {
    CHECK(failure_of([] { parse_config_string("h0 = 1.0\nlambda0 = 1.0\nK0 = 0.5\nsolver = \"homogeneous\"\n[omega]\nkind = \"disk\"\n", ConfigFormat::Toml); })
              .first == ErrorCode::ValidationError);
    CHECK(failure_of([] { parse_config_string("h0 = 1.0\nlambda0 = 1.0\nK0 = 0.5\npsi = \"zero\"\nsolver = \"elliptic\"\n[omega]\nkind = \"disk\"\n", ConfigFormat::Toml); })
              .first == ErrorCode::ValidationError);
    const auto cfg = parse_config_string("h0 = 1.0\nlambda0 = 1.0\nK0 = 0.5\nsolver = \"elliptic\"\n[omega]\nkind = \"disk\"\n", ConfigFormat::Toml);
    CHECK(cfg.psi == "one");
}

TEST_CASE("malformed input is a parse error") {
    CHECK(failure_of([] { parse_config_string("h0 = = 1\n", ConfigFormat::Toml); }).first == ErrorCode::ParseError);
    CHECK(failure_of([] { parse_config_string("{\"h0\": ", ConfigFormat::Json); }).first == ErrorCode::ParseError);
    CHECK(failure_of([] { parse_config_string("h0 = \"one\"\nlambda0 = 1.0\n", ConfigFormat::Toml); }).first ==
          ErrorCode::ValidationError);
}

TEST_CASE("paraboloid config round-trips through both formats") {
    const auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
    for (auto fmt : {ConfigFormat::Toml, ConfigFormat::Json}) {
        const auto back = parse_config_string(serialize(cfg, fmt), fmt);
        CHECK(back == cfg);
        CHECK(serialize(back, fmt) == serialize(cfg, fmt));
    }
    CHECK(cfg.lambda0 == 0.5 * std::sqrt(5.0));
}

TEST_CASE("config files are read by extension") {
    const fs::path dir = scratch("files");
    fs::create_directories(dir);
    const auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
    write_atomic(dir / "a.toml", serialize(cfg, ConfigFormat::Toml));
    write_atomic(dir / "a.json", serialize(cfg, ConfigFormat::Json));
    CHECK(parse_config(dir / "a.toml") == cfg);
    CHECK(parse_config(dir / "a.json") == cfg);
    write_atomic(dir / "a.yaml", "x");
    CHECK(failure_of([&] { parse_config(dir / "a.yaml"); }).first != ErrorCode::Io);
}

TEST_CASE("homogeneous disk run writes a circle of radius 1 + h0 / lambda0") {
    auto cfg = parse_config_string("h0 = 1.0\nlambda0 = 2.0\n[omega]\nkind = \"disk\"\nradius = 1.0\n", ConfigFormat::Toml);
    const fs::path out = scratch("homog");
    const auto rep = run(cfg, out);
    CHECK(rep.exit_code == 0);
    CHECK(rep.status == "converged");
    CHECK(rep.fb_radius == doctest::Approx(1.5).epsilon(1e-3));
    const auto rows = read_csv(slurp(out / "free_boundary.csv"));
    REQUIRE(rows.size() > 10);
    CHECK(rows[0] == std::vector<std::string>{"x", "y"});
    CHECK(rows[1] == rows.back());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const double r = std::hypot(std::stod(rows[i][0]), std::stod(rows[i][1]));
        CHECK(std::abs(r - 1.5) < 1e-3);
    }
    const std::string obj = slurp(out / "surface.obj");
    CHECK(obj.rfind("#", 0) == 0);
    CHECK(obj.find("\nv ") != std::string::npos);
    CHECK(obj.find("\nf ") != std::string::npos);
    const auto report = nlohmann::json::parse(slurp(out / "report.json"));
    CHECK(report["config"]["mesh"]["n_planes"] == 256);
    CHECK(report["exit_code"] == 0);
    CHECK(fs::exists(out / "timings.json"));
}

TEST_CASE("paraboloid elliptic run finds radius sqrt 5") {
    const auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
    const auto rep = run(cfg, scratch("parab"));
    CHECK(rep.exit_code == 0);
    CHECK(std::abs(rep.fb_radius - std::sqrt(5.0)) / std::sqrt(5.0) < 1e-2);
    const auto report = nlohmann::json::parse(rep.report_json);
    CHECK(report["existence"] == true);
    CHECK(report["certificates"].contains("weak_solution"));
    CHECK(report["certificates"].contains("ot_mass"));
}

TEST_CASE("infeasible data exits with 2 and reports nonexistence") {
    for (const char* solver : {"elliptic", "oracle"}) {
        auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
        cfg.lambda0 = 2.0;
        cfg.K0 = 3.0;
        cfg.solver = solver;
        const auto rep = run(cfg, scratch(std::string("infeasible_") + solver));
        CHECK(rep.exit_code == 2);
        CHECK(rep.status == "nonexistence_suspected");
        const auto report = nlohmann::json::parse(rep.report_json);
        CHECK(report["existence"] == false);
        CHECK(!report["reason"].get<std::string>().empty());
        CHECK(report["existence_checks"]["radial"]["exists"] == false);
    }
}

TEST_CASE("curvature sweep flips at the computed bound") {
    auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
    cfg.lambda0 = 2.0;
    const double bound = std::pow(std::sqrt(5.0) - 1.0, 2);
    cfg.sweep.K0 = std::vector<double>{bound * (1 - 1e-6), bound * (1 + 1e-6)};
    cfg.sweep.evaluate_only = true;
    const auto res = sweep(cfg, scratch("ksweep"));
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].curvature_condition == "true");
    CHECK(res.rows[1].curvature_condition == "false");
    CHECK(res.rows[0].condition_margin > 0.0);
    CHECK(res.rows[1].condition_margin < 0.0);
}

TEST_CASE("slope sweep with zero curvature gives cone radii") {
    auto cfg = parse_config_string("h0 = 1.0\nlambda0 = 1.0\n[omega]\nkind = \"disk\"\nradius = 1.0\n", ConfigFormat::Toml);
    cfg.sweep.lambda0 = std::vector<double>{0.5, 1.0, 2.0, 4.0};
    const auto res = sweep(cfg, scratch("lsweep"));
    REQUIRE(res.rows.size() == 4);
    for (const auto& row : res.rows) {
        CHECK(row.exit_code == 0);
        CHECK(row.oracle_fb_radius == doctest::Approx(1.0 + 1.0 / row.lambda0).epsilon(1e-12));
        CHECK(row.fb_radius == doctest::Approx(1.0 + 1.0 / row.lambda0).epsilon(1e-3));
    }
    const auto table = read_csv(res.csv);
    REQUIRE(table.size() == 5);
    CHECK(table[0][0] == "index");
}

TEST_CASE("empty grid gives a header-only table") {
    auto cfg = parse_config_string("h0 = 1.0\nlambda0 = 1.0\n[omega]\nkind = \"disk\"\n[sweep]\nK0 = []\n", ConfigFormat::Toml);
    const auto res = sweep(cfg, scratch("empty"));
    CHECK(res.rows.empty());
    CHECK(std::count(res.csv.begin(), res.csv.end(), '\n') == 1);
    CHECK(res.csv.rfind("index,K0,lambda0,h0,status", 0) == 0);
}

TEST_CASE("a failing tuple does not stop the sweep") {
    auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
    cfg.lambda0 = 2.0;
    cfg.mesh.sectors = 16;
    cfg.mesh.rings = 8;
    cfg.sweep.K0 = std::vector<double>{3.0, 0.3};
    const auto res = sweep(cfg, scratch("partial"));
    REQUIRE(res.rows.size() == 2);
    CHECK(res.rows[0].exit_code == 2);
    CHECK(res.rows[1].exit_code == 0);
}

TEST_CASE("identical runs produce identical bytes") {
    auto cfg = parse_config_string(kParaboloidToml, ConfigFormat::Toml);
    cfg.mesh.sectors = 32;
    cfg.mesh.rings = 16;
    const fs::path a = scratch("det_a"), b = scratch("det_b");
    run(cfg, a);
    run(cfg, b);
    for (const char* f : {"report.json", "free_boundary.csv", "surface.obj"}) CHECK(slurp(a / f) == slurp(b / f));
    cfg.sweep.K0 = std::vector<double>{0.1, 0.25};
    cfg.sweep.evaluate_only = true;
    CHECK(sweep(cfg, a).csv == sweep(cfg, b).csv);
    CHECK(slurp(a / "sweep.csv") == slurp(b / "sweep.csv"));
}

TEST_CASE("shortest round-trip number text") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345.678, -2.5}) CHECK(std::stod(format_double(v)) == v);
    CHECK(format_double(0.25) == "0.25");
}
