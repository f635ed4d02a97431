#pragma once

#include "kfree/geometry.hpp"
#include "kfree/verification.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace kfree {

struct OmegaSpec {
    std::string kind = "disk";  ///< disk, ellipse, polygon, sampled, polytope
    Vec2 center = Vec2::Zero();
    double radius = 1.0;
    Vec2 semi_axes = Vec2(1.0, 1.0);
    double rotation = 0.0;
    std::vector<Vec2> vertices;
    std::vector<Halfspace3> facets;
    std::vector<Vec2> points;
    std::vector<Vec2> normals;
    std::vector<double> curvatures;

    bool operator==(const OmegaSpec&) const = default;
};

struct MeshSpec {
    int n_planes = 256;
    int sectors = 64;
    int rings = 32;
    int stencil = 3;
    bool operator==(const MeshSpec&) const = default;
};

struct ToleranceSpec {
    double ma = 1e-8;
    double fb = 1e-3;
    int max_outer = 300;
    int max_newton = 60;
    bool operator==(const ToleranceSpec&) const = default;
};

struct OutputSpec {
    std::string dir = "out";
    std::string surface = "surface.obj";
    std::string free_boundary = "free_boundary.csv";
    std::string report = "report.json";
    std::string timings = "timings.json";
    std::string sweep = "sweep.csv";
    bool operator==(const OutputSpec&) const = default;
};

/// Absent lists fall back to the single template value; an empty list gives no rows.
struct SweepSpec {
    std::optional<std::vector<double>> K0;
    std::optional<std::vector<double>> lambda0;
    std::optional<std::vector<double>> h0;
    bool evaluate_only = false;
    bool operator==(const SweepSpec&) const = default;
};

struct RunConfig {
    int dimension = 2;
    double h0 = 1.0;
    double lambda0 = 1.0;
    double K0 = 0.0;
    std::string psi = "zero";
    double psi_power = 0.0;
    std::string solver = "homogeneous";  ///< homogeneous, elliptic, oracle
    std::uint64_t seed = kDefaultSeed;
    double damping = 0.5;
    OmegaSpec omega;
    MeshSpec mesh;
    ToleranceSpec tolerances;
    OutputSpec output;
    SweepSpec sweep;

    bool operator==(const RunConfig&) const = default;
};

enum class ConfigFormat { Toml, Json };

/// Format from the file extension (.toml or .json).
ConfigFormat format_from_path(const std::filesystem::path& path);

/// Throws ParseError for malformed input and ValidationError listing every
/// violation with its field path.
RunConfig parse_config(const std::filesystem::path& path);
RunConfig parse_config_string(const std::string& text, ConfigFormat format);

std::string serialize(const RunConfig& cfg, ConfigFormat format);

/// Resolves the psi weight of a config.
PsiSpec psi_of(const RunConfig& cfg);

/// Builds the domain described by a config.
ConvexDomain domain_of(const RunConfig& cfg);

struct SolveReport {
    int exit_code = 1;
    std::string status;       ///< converged, nonexistence_suspected, not_certified, error
    std::string report_json;  ///< contents of report.json
    double fb_radius = 0.0;   ///< mean free boundary distance from the domain center (NaN when absent)
    std::vector<Certificate> certificates;
    std::vector<std::string> certificate_names;  ///< parallel to certificates
    std::vector<std::filesystem::path> files;
};

/// Runs the configured solver and writes the surface OBJ, free boundary CSV,
/// report and timings into out_dir (the config's output.dir when empty).
SolveReport run(const RunConfig& cfg, const std::filesystem::path& out_dir = {});

struct SweepRow {
    double K0 = 0.0, lambda0 = 0.0, h0 = 0.0;
    std::string status;
    int exit_code = 1;
    std::string curvature_condition;  ///< true, false or n/a
    double condition_margin = 0.0;
    std::string rmax_test;            ///< true, false or n/a
    std::string radial_exists;        ///< true, false or n/a
    double fb_radius = 0.0;
    double oracle_fb_radius = 0.0;
    double ma_residual = 0.0;
    double fb_gradient_residual = 0.0;
    std::string error;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    std::string csv;
    std::filesystem::path file;
};

/// Cartesian product of the grid lists in the order K0, lambda0, h0. Tuples run
/// on a worker pool capped by KFREE_MAX_THREADS; rows keep grid order.
SweepResult sweep(const RunConfig& cfg, const std::filesystem::path& out_dir = {});

/// Writes text to path through a temporary file and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

}  // namespace kfree
