#include "kfree/kfree.h"

#include "CLI11.hpp"

#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

namespace {

struct Options {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
};

int report_error(const char* what, bool quiet) {
    if (!quiet) std::fprintf(stderr, "kfree: %s: %s\n", what, kfree_last_error());
    return 1;
}

kfree_config* load(const Options& o) {
    kfree_config* cfg = nullptr;
    if (kfree_config_load(o.config.c_str(), &cfg) != KFREE_OK) return nullptr;
    if (o.seed) kfree_config_set_seed(cfg, *o.seed);
    return cfg;
}

int solve(const Options& o, const char* force_solver, bool print_certificates) {
    kfree_config* cfg = load(o);
    if (!cfg) return report_error("config", false);
    if (force_solver && kfree_config_set_solver(cfg, force_solver) != KFREE_OK) {
        kfree_config_free(cfg);
        return report_error("config", false);
    }
    kfree_report* rep = nullptr;
    const kfree_status st = kfree_run(cfg, o.out.empty() ? nullptr : o.out.c_str(), &rep);
    kfree_config_free(cfg);
    if (st != KFREE_OK) return report_error("run", false);
    const int code = kfree_report_exit_code(rep);
    if (!o.quiet) {
        if (print_certificates) std::fputs(kfree_report_certificate_text(rep), stdout);
        const double r = kfree_report_fb_radius(rep);
        if (std::isnan(r))
            std::printf("status=%s exit=%d\n", kfree_report_status(rep), code);
        else
            std::printf("status=%s exit=%d fb_radius=%.9g\n", kfree_report_status(rep), code, r);
    }
    kfree_report_free(rep);
    return code;
}

int sweep(const Options& o) {
    kfree_config* cfg = load(o);
    if (!cfg) return report_error("config", false);
    std::size_t rows = 0;
    const kfree_status st = kfree_sweep(cfg, o.out.empty() ? nullptr : o.out.c_str(), &rows);
    kfree_config_free(cfg);
    if (st != KFREE_OK) return report_error("sweep", false);
    if (!o.quiet) std::printf("rows=%zu\n", rows);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Concave K-surfaces with a free boundary"};
    app.set_version_flag("--version", kfree_version());
    app.require_subcommand(1);
    Options o;
    std::uint64_t seed = 0;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "TOML or JSON run configuration")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", o.out, "output directory (overrides output.dir)");
        sub->add_option("--seed", seed, "seed for randomized certificate checks (overrides seed)");
        sub->add_flag("--quiet", o.quiet, "print nothing on success");
    };
    CLI::App* s_solve = app.add_subcommand("solve", "run the configured solver and write artifacts");
    CLI::App* s_oracle = app.add_subcommand("oracle", "evaluate the radial closed form or shooting profile");
    CLI::App* s_verify = app.add_subcommand("verify", "solve and print every certificate check");
    CLI::App* s_sweep = app.add_subcommand("sweep", "evaluate a parameter grid into a CSV table");
    for (CLI::App* sub : {s_solve, s_oracle, s_verify, s_sweep}) add_common(sub);

    CLI11_PARSE(app, argc, argv);
    for (CLI::App* sub : {s_solve, s_oracle, s_verify, s_sweep})
        if (sub->count("--seed") > 0) o.seed = seed;

    if (s_solve->parsed()) return solve(o, nullptr, false);
    if (s_oracle->parsed()) return solve(o, "oracle", false);
    if (s_verify->parsed()) return solve(o, nullptr, true);
    return sweep(o);
}
