#include "kfree/kfree.h"

#include "kfree/cli_io.hpp"
#include "kfree/elliptic.hpp"
#include "kfree/error.hpp"
#include "kfree/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <new>
#include <string>

struct kfree_config {
    kfree::RunConfig cfg;
};

struct kfree_report {
    kfree::SolveReport rep;
    std::string certificate_text;
};

namespace {

thread_local std::string g_last_error;
thread_local kfree_status g_last_kind = KFREE_OK;

kfree_status status_of(kfree::ErrorCode c) {
    return static_cast<kfree_status>(static_cast<int>(c) + 1);
}

kfree_status set_error(kfree_status kind, const std::string& msg) {
    g_last_kind = kind;
    g_last_error = msg;
    return kind;
}

template <class F>
kfree_status guarded(F&& f) {
    try {
        f();
        g_last_kind = KFREE_OK;
        g_last_error.clear();
        return KFREE_OK;
    } catch (const kfree::Error& e) {
        return set_error(status_of(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        return set_error(KFREE_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        return set_error(KFREE_ERR_INTERNAL, e.what());
    }
}

kfree::ConfigFormat format_of(const char* format) {
    const std::string f = format ? format : "";
    if (f == "toml") return kfree::ConfigFormat::Toml;
    if (f == "json") return kfree::ConfigFormat::Json;
    kfree::fail(kfree::ErrorCode::InvalidParam, "format must be \"toml\" or \"json\"");
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

std::string certificate_lines(const kfree::SolveReport& rep) {
    std::string out;
    for (std::size_t i = 0; i < rep.certificates.size(); ++i) {
        const auto& cert = rep.certificates[i];
        const std::string& cname = rep.certificate_names[i];
        for (const auto& c : cert.checks) {
            char buf[512];
            std::snprintf(buf, sizeof(buf), "%s %s.%s residual=%.6g tol=%.3g\n", c.passed ? "PASS" : "FAIL",
                          cname.c_str(), c.name.c_str(), c.residual, c.tolerance);
            out += buf;
        }
    }
    return out;
}

}  // namespace

#define KFREE_REQUIRE(ptr)                                                                 \
    do {                                                                                   \
        if (!(ptr)) return set_error(KFREE_ERR_NULL_ARGUMENT, "null argument: " #ptr);     \
    } while (0)

extern "C" {

const char* kfree_last_error(void) { return g_last_error.c_str(); }

kfree_status kfree_last_error_kind(void) { return g_last_kind; }

const char* kfree_version(void) { return "1.0.0"; }

void kfree_string_free(char* s) { std::free(s); }

kfree_status kfree_config_load(const char* path, kfree_config** out) {
    KFREE_REQUIRE(path);
    KFREE_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new kfree_config{kfree::parse_config(path)}; });
}

kfree_status kfree_config_from_string(const char* text, const char* format, kfree_config** out) {
    KFREE_REQUIRE(text);
    KFREE_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = new kfree_config{kfree::parse_config_string(text, format_of(format))}; });
}

kfree_status kfree_config_to_string(const kfree_config* cfg, const char* format, char** out) {
    KFREE_REQUIRE(cfg);
    KFREE_REQUIRE(out);
    *out = nullptr;
    return guarded([&] { *out = dup_string(kfree::serialize(cfg->cfg, format_of(format))); });
}

kfree_status kfree_config_set_seed(kfree_config* cfg, uint64_t seed) {
    KFREE_REQUIRE(cfg);
    cfg->cfg.seed = seed;
    return KFREE_OK;
}

kfree_status kfree_config_set_solver(kfree_config* cfg, const char* solver) {
    KFREE_REQUIRE(cfg);
    KFREE_REQUIRE(solver);
    return guarded([&] {
        kfree::RunConfig next = cfg->cfg;
        next.solver = solver;
        // Round trip through the parser so every invariant is rechecked.
        next = kfree::parse_config_string(kfree::serialize(next, kfree::ConfigFormat::Json), kfree::ConfigFormat::Json);
        cfg->cfg = next;
    });
}

void kfree_config_free(kfree_config* cfg) { delete cfg; }

kfree_status kfree_run(const kfree_config* cfg, const char* out_dir, kfree_report** out) {
    KFREE_REQUIRE(cfg);
    KFREE_REQUIRE(out);
    *out = nullptr;
    return guarded([&] {
        auto* r = new kfree_report{kfree::run(cfg->cfg, out_dir ? out_dir : ""), {}};
        r->certificate_text = certificate_lines(r->rep);
        *out = r;
    });
}

kfree_status kfree_sweep(const kfree_config* cfg, const char* out_dir, size_t* rows) {
    KFREE_REQUIRE(cfg);
    return guarded([&] {
        const auto res = kfree::sweep(cfg->cfg, out_dir ? out_dir : "");
        if (rows) *rows = res.rows.size();
    });
}

int kfree_report_exit_code(const kfree_report* rep) { return rep ? rep->rep.exit_code : 1; }

const char* kfree_report_status(const kfree_report* rep) { return rep ? rep->rep.status.c_str() : ""; }

const char* kfree_report_json(const kfree_report* rep) { return rep ? rep->rep.report_json.c_str() : ""; }

double kfree_report_fb_radius(const kfree_report* rep) {
    return rep ? rep->rep.fb_radius : std::numeric_limits<double>::quiet_NaN();
}

const char* kfree_report_certificate_text(const kfree_report* rep) {
    return rep ? rep->certificate_text.c_str() : "";
}

void kfree_report_free(kfree_report* rep) { delete rep; }

kfree_status kfree_existence_condition(double kappa0, double h0, double lambda0, double K0, const char* psi,
                                       double psi_power, int* holds, double* margin) {
    KFREE_REQUIRE(psi);
    return guarded([&] {
        if (!(kappa0 > 0.0)) kfree::fail(kfree::ErrorCode::ZeroCurvature, "kappa0 must be > 0");
        const auto disk = kfree::ConvexDomain::disk(kfree::Vec2::Zero(), 1.0 / kappa0);
        const auto chk =
            kfree::check_existence_condition(disk, h0, lambda0, K0, kfree::parse_psi(psi, 2, psi_power), 2);
        if (holds) *holds = chk.holds ? 1 : 0;
        if (margin) *margin = chk.margin;
    });
}

kfree_status kfree_radial_fb_radius(int dim, double R0, double h0, double lambda0, double K0, const char* psi,
                                    double psi_power, double* r_fb) {
    KFREE_REQUIRE(psi);
    KFREE_REQUIRE(r_fb);
    return guarded([&] {
        if (K0 == 0.0) {
            *r_fb = kfree::cone(R0, h0, lambda0).r_fb;
            return;
        }
        const auto p = kfree::parse_psi(psi, dim, psi_power);
        if (dim == 2 && p.kind == kfree::PsiSpec::Kind::One)
            *r_fb = kfree::radial_case2_d2(R0, h0, lambda0, K0).profile.r_fb;
        else
            *r_fb = kfree::radial_shoot(dim, R0, h0, lambda0, K0, p).r_fb;
    });
}

}  // extern "C"
