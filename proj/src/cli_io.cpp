#include "kfree/cli_io.hpp"

#include "kfree/error.hpp"
#include "kfree/oracles.hpp"

#include "json.hpp"
#include "toml.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

namespace kfree {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;
namespace fs = std::filesystem;

std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_atomic(const fs::path& path, const std::string& text) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) fail(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
        f << text;
        if (!f) fail(ErrorCode::Io, "write failed for " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

ConfigFormat format_from_path(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".toml") return ConfigFormat::Toml;
    if (ext == ".json") return ConfigFormat::Json;
    fail(ErrorCode::ParseError, "config must be .toml or .json: " + path.string());
}

// ---------------------------------------------------------------------------
// reading

namespace {

class Reader {
public:
    Reader(const json& obj, std::string prefix, std::vector<std::string>& errs)
        : obj_(obj), prefix_(std::move(prefix)), errs_(errs) {}

    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }
    bool has(const std::string& key) const { return obj_.contains(key); }
    const json& at(const std::string& key) const { return obj_.at(key); }
    void error(const std::string& key, const std::string& msg) { errs_.push_back(path(key) + ": " + msg); }

    void number(const std::string& key, double& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number()) return error(key, "expected a number");
        out = v.get<double>();
    }

    void integer(const std::string& key, int& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (!v.is_number_integer()) return error(key, "expected an integer");
        const auto x = v.get<std::int64_t>();
        if (x < std::numeric_limits<int>::min() || x > std::numeric_limits<int>::max()) return error(key, "out of range");
        out = static_cast<int>(x);
    }

    void unsigned_integer(const std::string& key, std::uint64_t& out) {
        if (!has(key)) return;
        const json& v = at(key);
        if (v.is_number_unsigned()) {
            out = v.get<std::uint64_t>();
        } else if (v.is_number_integer()) {
            const auto x = v.get<std::int64_t>();
            if (x < 0) return error(key, "must be >= 0");
            out = static_cast<std::uint64_t>(x);
        } else {
            error(key, "expected a non-negative integer");
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (!has(key)) return;
        if (!at(key).is_boolean()) return error(key, "expected true or false");
        out = at(key).get<bool>();
    }

    void string(const std::string& key, std::string& out) {
        if (!has(key)) return;
        if (!at(key).is_string()) return error(key, "expected a string");
        out = at(key).get<std::string>();
    }

    bool vec(const json& v, int n, Eigen::VectorXd& out) const {
        if (!v.is_array() || static_cast<int>(v.size()) != n) return false;
        out.resize(n);
        for (int i = 0; i < n; ++i) {
            if (!v[static_cast<std::size_t>(i)].is_number()) return false;
            out[i] = v[static_cast<std::size_t>(i)].get<double>();
        }
        return true;
    }

    void vec2(const std::string& key, Vec2& out) {
        if (!has(key)) return;
        Eigen::VectorXd v;
        if (!vec(at(key), 2, v)) return error(key, "expected [x, y]");
        out = v;
    }

    void vec2_list(const std::string& key, std::vector<Vec2>& out) {
        if (!has(key)) return;
        const json& a = at(key);
        if (!a.is_array()) return error(key, "expected a list of [x, y] pairs");
        out.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            Eigen::VectorXd v;
            if (!vec(a[i], 2, v)) return error(key + "[" + std::to_string(i) + "]", "expected [x, y]");
            out.emplace_back(v);
        }
    }

    void number_list(const std::string& key, std::vector<double>& out) {
        if (!has(key)) return;
        const json& a = at(key);
        if (!a.is_array()) return error(key, "expected a list of numbers");
        out.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (!a[i].is_number()) return error(key + "[" + std::to_string(i) + "]", "expected a number");
            out.push_back(a[i].get<double>());
        }
    }

    void optional_number_list(const std::string& key, std::optional<std::vector<double>>& out) {
        if (!has(key)) return;
        std::vector<double> v;
        const std::size_t before = errs_.size();
        number_list(key, v);
        if (errs_.size() == before) out = std::move(v);
    }

    void facets(const std::string& key, std::vector<Halfspace3>& out) {
        if (!has(key)) return;
        const json& a = at(key);
        if (!a.is_array()) return error(key, "expected a list of {normal, offset} tables");
        out.clear();
        for (std::size_t i = 0; i < a.size(); ++i) {
            const std::string k = key + "[" + std::to_string(i) + "]";
            Eigen::VectorXd n;
            if (!a[i].is_object() || !a[i].contains("normal") || !a[i].contains("offset") ||
                !vec(a[i]["normal"], 3, n) || !a[i]["offset"].is_number())
                return error(k, "expected {normal = [x, y, z], offset = c}");
            out.push_back({Vec3(n), a[i]["offset"].get<double>()});
        }
    }

    /// Records every key not in the allowed set.
    void only(std::initializer_list<const char*> allowed) {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            const bool ok = std::any_of(allowed.begin(), allowed.end(), [&](const char* a) { return it.key() == a; });
            if (!ok) error(it.key(), "unknown key");
        }
    }

    /// Sub-table reader, or nullopt (with an error) when the key is not a table.
    std::optional<Reader> table(const std::string& key) {
        if (!has(key)) return std::nullopt;
        if (!at(key).is_object()) {
            error(key, "expected a table");
            return std::nullopt;
        }
        return Reader(at(key), path(key), errs_);
    }

private:
    const json& obj_;
    std::string prefix_;
    std::vector<std::string>& errs_;
};

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

void validate(const RunConfig& c, std::vector<std::string>& errs) {
    auto bad = [&](const std::string& path, const std::string& msg) { errs.push_back(path + ": " + msg); };
    if (c.dimension != 2 && c.dimension != 3) bad("dimension", "must be 2 or 3");
    if (!positive(c.h0)) bad("h0", "must be > 0 (got " + format_double(c.h0) + ")");
    if (!positive(c.lambda0)) bad("lambda0", "must be > 0 (got " + format_double(c.lambda0) + ")");
    if (!(c.K0 >= 0.0) || !std::isfinite(c.K0)) bad("K0", "must be >= 0 (got " + format_double(c.K0) + ")");
    const bool known_psi = c.psi == "zero" || c.psi == "one" || c.psi == "gauss" || c.psi == "power";
    if (!known_psi) bad("psi", "must be one of zero, one, gauss, power");
    if (c.psi == "power" && !(c.psi_power >= 0.0 && std::isfinite(c.psi_power))) bad("psi_power", "must be >= 0");
    if (known_psi && (c.psi == "zero") != (c.K0 == 0.0)) bad("psi", "psi = zero exactly when K0 = 0");
    const bool known_solver = c.solver == "homogeneous" || c.solver == "elliptic" || c.solver == "oracle";
    if (!known_solver) bad("solver", "must be one of homogeneous, elliptic, oracle");
    if (c.solver == "homogeneous" && c.K0 != 0.0) bad("solver", "K0 > 0 requires solver = elliptic or oracle");
    if (c.solver == "elliptic" && c.K0 == 0.0) bad("solver", "solver = elliptic requires K0 > 0");
    if (c.solver == "elliptic" && c.dimension != 2) bad("dimension", "solver = elliptic is planar (dimension = 2)");

    const auto& o = c.omega;
    const bool known_kind = o.kind == "disk" || o.kind == "ellipse" || o.kind == "polygon" || o.kind == "sampled" ||
                            o.kind == "polytope";
    if (!known_kind) bad("omega.kind", "must be one of disk, ellipse, polygon, sampled, polytope");
    if (c.dimension == 3 && o.kind != "polytope" && !(c.solver == "oracle" && o.kind == "disk"))
        bad("omega.kind", "dimension = 3 needs a polytope (or a disk, read as a ball, for the oracle)");
    if (c.dimension == 2 && o.kind == "polytope") bad("omega.kind", "polytope domains need dimension = 3");
    if (c.solver == "oracle" && o.kind != "disk") bad("omega.kind", "solver = oracle needs a disk");
    if (c.solver == "elliptic" && !(o.kind == "disk" || o.kind == "ellipse" || o.kind == "sampled"))
        bad("omega.kind", "solver = elliptic needs a smooth domain (disk, ellipse or sampled)");
    if (o.kind == "disk" && !positive(o.radius)) bad("omega.radius", "must be > 0");
    if (o.kind == "ellipse" && !(positive(o.semi_axes.x()) && positive(o.semi_axes.y())))
        bad("omega.semi_axes", "both semi-axes must be > 0");
    if (o.kind == "polygon" && o.vertices.size() < 3) bad("omega.vertices", "need at least 3 vertices");
    if (o.kind == "sampled" &&
        (o.points.size() < 3 || o.normals.size() != o.points.size() || o.curvatures.size() != o.points.size()))
        bad("omega.points", "need >= 3 points with matching normals and curvatures");
    if (o.kind == "polytope" && o.facets.size() < 4) bad("omega.facets", "need at least 4 facets");

    if (c.mesh.n_planes < 8) bad("mesh.n_planes", "must be >= 8");
    if (c.mesh.sectors < 8) bad("mesh.sectors", "must be >= 8");
    if (c.mesh.rings < 3) bad("mesh.rings", "must be >= 3");
    if (c.mesh.stencil < 1) bad("mesh.stencil", "must be >= 1");
    if (!positive(c.tolerances.ma)) bad("tolerances.ma", "must be > 0");
    if (!positive(c.tolerances.fb)) bad("tolerances.fb", "must be > 0");
    if (c.tolerances.max_outer < 1) bad("tolerances.max_outer", "must be >= 1");
    if (c.tolerances.max_newton < 1) bad("tolerances.max_newton", "must be >= 1");
    if (!(c.damping > 0.0 && c.damping <= 2.0)) bad("elliptic.damping", "must be in (0, 2]");
    for (const auto* name : {"dir", "surface", "free_boundary", "report", "timings", "sweep"}) {
        const std::string& v = std::string(name) == "dir" ? c.output.dir
                               : std::string(name) == "surface" ? c.output.surface
                               : std::string(name) == "free_boundary" ? c.output.free_boundary
                               : std::string(name) == "report" ? c.output.report
                               : std::string(name) == "timings" ? c.output.timings
                                                                : c.output.sweep;
        if (v.empty()) bad(std::string("output.") + name, "must not be empty");
    }
    auto check_list = [&](const char* name, const std::optional<std::vector<double>>& l, bool allow_zero) {
        if (!l) return;
        for (double v : *l)
            if (!(allow_zero ? v >= 0.0 : v > 0.0) || !std::isfinite(v))
                bad(std::string("sweep.") + name, allow_zero ? "entries must be >= 0" : "entries must be > 0");
    };
    check_list("K0", c.sweep.K0, true);
    check_list("lambda0", c.sweep.lambda0, false);
    check_list("h0", c.sweep.h0, false);

    if (errs.empty() && known_kind) {
        try {
            (void)domain_of(c);
        } catch (const Error& e) {
            bad("omega", e.what());
        }
    }
}

RunConfig from_json(const json& j) {
    if (!j.is_object()) fail(ErrorCode::ValidationError, "config: expected a table at the top level");
    std::vector<std::string> errs;
    RunConfig c;
    Reader r(j, "", errs);
    r.only({"dimension", "h0", "lambda0", "K0", "psi", "psi_power", "solver", "seed", "omega", "mesh", "tolerances",
            "elliptic", "output", "sweep"});
    r.integer("dimension", c.dimension);
    r.number("h0", c.h0);
    r.number("lambda0", c.lambda0);
    r.number("K0", c.K0);
    c.psi = c.K0 == 0.0 ? "zero" : "one";
    r.string("psi", c.psi);
    r.number("psi_power", c.psi_power);
    r.string("solver", c.solver);
    r.unsigned_integer("seed", c.seed);
    if (auto o = r.table("omega")) {
        o->only({"kind", "center", "radius", "semi_axes", "rotation", "vertices", "facets", "points", "normals",
                 "curvatures"});
        o->string("kind", c.omega.kind);
        o->vec2("center", c.omega.center);
        o->number("radius", c.omega.radius);
        o->vec2("semi_axes", c.omega.semi_axes);
        o->number("rotation", c.omega.rotation);
        o->vec2_list("vertices", c.omega.vertices);
        o->facets("facets", c.omega.facets);
        o->vec2_list("points", c.omega.points);
        o->vec2_list("normals", c.omega.normals);
        o->number_list("curvatures", c.omega.curvatures);
    } else if (!r.has("omega")) {
        errs.push_back("omega: missing table");
    }
    if (auto m = r.table("mesh")) {
        m->only({"n_planes", "sectors", "rings", "stencil"});
        m->integer("n_planes", c.mesh.n_planes);
        m->integer("sectors", c.mesh.sectors);
        m->integer("rings", c.mesh.rings);
        m->integer("stencil", c.mesh.stencil);
    }
    if (auto t = r.table("tolerances")) {
        t->only({"ma", "fb", "max_outer", "max_newton"});
        t->number("ma", c.tolerances.ma);
        t->number("fb", c.tolerances.fb);
        t->integer("max_outer", c.tolerances.max_outer);
        t->integer("max_newton", c.tolerances.max_newton);
    }
    if (auto e = r.table("elliptic")) {
        e->only({"damping"});
        e->number("damping", c.damping);
    }
    if (auto o = r.table("output")) {
        o->only({"dir", "surface", "free_boundary", "report", "timings", "sweep"});
        o->string("dir", c.output.dir);
        o->string("surface", c.output.surface);
        o->string("free_boundary", c.output.free_boundary);
        o->string("report", c.output.report);
        o->string("timings", c.output.timings);
        o->string("sweep", c.output.sweep);
    }
    if (auto s = r.table("sweep")) {
        s->only({"K0", "lambda0", "h0", "evaluate_only"});
        s->optional_number_list("K0", c.sweep.K0);
        s->optional_number_list("lambda0", c.sweep.lambda0);
        s->optional_number_list("h0", c.sweep.h0);
        s->boolean("evaluate_only", c.sweep.evaluate_only);
    }
    validate(c, errs);
    if (!errs.empty()) {
        std::string msg;
        for (const auto& e : errs) msg += (msg.empty() ? "" : "; ") + e;
        fail(ErrorCode::ValidationError, msg);
    }
    return c;
}

ojson vec_json(const Vec2& v) { return ojson::array({v.x(), v.y()}); }

ojson to_json(const RunConfig& c) {
    ojson j;
    j["dimension"] = c.dimension;
    j["h0"] = c.h0;
    j["lambda0"] = c.lambda0;
    j["K0"] = c.K0;
    j["psi"] = c.psi;
    j["psi_power"] = c.psi_power;
    j["solver"] = c.solver;
    j["seed"] = c.seed;
    ojson o;
    o["kind"] = c.omega.kind;
    o["center"] = vec_json(c.omega.center);
    o["radius"] = c.omega.radius;
    o["semi_axes"] = vec_json(c.omega.semi_axes);
    o["rotation"] = c.omega.rotation;
    auto list = [](const std::vector<Vec2>& v) {
        ojson a = ojson::array();
        for (const auto& p : v) a.push_back(vec_json(p));
        return a;
    };
    if (!c.omega.vertices.empty()) o["vertices"] = list(c.omega.vertices);
    if (!c.omega.points.empty()) o["points"] = list(c.omega.points);
    if (!c.omega.normals.empty()) o["normals"] = list(c.omega.normals);
    if (!c.omega.curvatures.empty()) o["curvatures"] = c.omega.curvatures;
    if (!c.omega.facets.empty()) {
        ojson a = ojson::array();
        for (const auto& f : c.omega.facets)
            a.push_back({{"normal", {f.normal.x(), f.normal.y(), f.normal.z()}}, {"offset", f.offset}});
        o["facets"] = a;
    }
    j["omega"] = o;
    j["mesh"] = {{"n_planes", c.mesh.n_planes}, {"sectors", c.mesh.sectors}, {"rings", c.mesh.rings},
                 {"stencil", c.mesh.stencil}};
    j["tolerances"] = {{"ma", c.tolerances.ma}, {"fb", c.tolerances.fb}, {"max_outer", c.tolerances.max_outer},
                       {"max_newton", c.tolerances.max_newton}};
    j["elliptic"] = {{"damping", c.damping}};
    j["output"] = {{"dir", c.output.dir},       {"surface", c.output.surface}, {"free_boundary", c.output.free_boundary},
                   {"report", c.output.report}, {"timings", c.output.timings}, {"sweep", c.output.sweep}};
    ojson s;
    if (c.sweep.K0) s["K0"] = *c.sweep.K0;
    if (c.sweep.lambda0) s["lambda0"] = *c.sweep.lambda0;
    if (c.sweep.h0) s["h0"] = *c.sweep.h0;
    s["evaluate_only"] = c.sweep.evaluate_only;
    j["sweep"] = s;
    return j;
}

toml::array toml_array(const ojson& a);

toml::table toml_table(const ojson& j) {
    toml::table t;
    for (auto it = j.begin(); it != j.end(); ++it) {
        const ojson& v = it.value();
        if (v.is_object()) t.insert(it.key(), toml_table(v));
        else if (v.is_array()) t.insert(it.key(), toml_array(v));
        else if (v.is_boolean()) t.insert(it.key(), v.get<bool>());
        else if (v.is_number_unsigned()) t.insert(it.key(), static_cast<std::int64_t>(v.get<std::uint64_t>()));
        else if (v.is_number_integer()) t.insert(it.key(), v.get<std::int64_t>());
        else if (v.is_number_float()) t.insert(it.key(), v.get<double>());
        else if (v.is_string()) t.insert(it.key(), v.get<std::string>());
    }
    return t;
}

toml::array toml_array(const ojson& a) {
    toml::array out;
    for (const auto& v : a) {
        if (v.is_object()) out.push_back(toml_table(v));
        else if (v.is_array()) out.push_back(toml_array(v));
        else if (v.is_boolean()) out.push_back(v.get<bool>());
        else if (v.is_number_unsigned()) out.push_back(static_cast<std::int64_t>(v.get<std::uint64_t>()));
        else if (v.is_number_integer()) out.push_back(v.get<std::int64_t>());
        else if (v.is_number_float()) out.push_back(v.get<double>());
        else if (v.is_string()) out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

RunConfig parse_config_string(const std::string& text, ConfigFormat format) {
    json j;
    if (format == ConfigFormat::Json) {
        try {
            j = json::parse(text);
        } catch (const json::parse_error& e) {
            fail(ErrorCode::ParseError, e.what());
        }
    } else {
        try {
            const toml::table t = toml::parse(text);
            std::ostringstream ss;
            ss << toml::json_formatter{t};
            j = json::parse(ss.str());
        } catch (const toml::parse_error& e) {
            std::ostringstream ss;
            ss << e.description() << " at line " << e.source().begin.line;
            fail(ErrorCode::ParseError, ss.str());
        }
    }
    return from_json(j);
}

RunConfig parse_config(const fs::path& path) {
    const ConfigFormat fmt = format_from_path(path);
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Io, "cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_string(ss.str(), fmt);
}

std::string serialize(const RunConfig& cfg, ConfigFormat format) {
    const ojson j = to_json(cfg);
    if (format == ConfigFormat::Json) return j.dump(2) + "\n";
    std::ostringstream ss;
    ss << toml_table(j) << "\n";
    return ss.str();
}

PsiSpec psi_of(const RunConfig& cfg) { return parse_psi(cfg.psi, cfg.dimension, cfg.psi_power); }

ConvexDomain domain_of(const RunConfig& cfg) {
    const auto& o = cfg.omega;
    if (o.kind == "disk") return ConvexDomain::disk(o.center, o.radius);
    if (o.kind == "ellipse") return ConvexDomain::ellipse(o.center, o.semi_axes.x(), o.semi_axes.y(), o.rotation);
    if (o.kind == "polygon") return ConvexDomain::polygon(o.vertices);
    if (o.kind == "sampled") return ConvexDomain::sampled(o.points, o.normals, o.curvatures);
    if (o.kind == "polytope") return ConvexDomain::polytope(o.facets);
    fail(ErrorCode::InvalidParam, "unknown domain kind '" + o.kind + "'");
}

// ---------------------------------------------------------------------------
// artifacts

namespace {

class ObjWriter {
public:
    explicit ObjWriter(const std::string& comment) {
        text_ = "# " + comment + "\n# z-up: vertex z is the height of the graph\n";
    }
    int vertex(double x, double y, double z) {
        char buf[128];
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", x, y, z);
        text_ += buf;
        return ++count_;
    }
    void face(int a, int b, int c) {
        text_ += "f " + std::to_string(a) + " " + std::to_string(b) + " " + std::to_string(c) + "\n";
    }
    void fan(const std::vector<int>& ring) {
        for (std::size_t k = 1; k + 1 < ring.size(); ++k) face(ring[0], ring[k], ring[k + 1]);
    }
    std::string str() const { return text_; }

private:
    std::string text_;
    int count_ = 0;
};

std::string ring_csv(const std::vector<Vec2>& ring) {
    std::string out = "x,y\n";
    for (std::size_t i = 0; i <= ring.size() && !ring.empty(); ++i) {
        const Vec2& p = ring[i % ring.size()];
        out += format_double(p.x()) + "," + format_double(p.y()) + "\n";
    }
    return out;
}

void add_plateau(ObjWriter& obj, const std::vector<Vec2>& ring, double h0) {
    Vec2 c = Vec2::Zero();
    for (const auto& p : ring) c += p;
    c /= static_cast<double>(ring.size());
    const int center = obj.vertex(c.x(), c.y(), h0);
    std::vector<int> ids;
    for (const auto& p : ring) ids.push_back(obj.vertex(p.x(), p.y(), h0));
    for (std::size_t i = 0; i < ids.size(); ++i) obj.face(center, ids[i], ids[(i + 1) % ids.size()]);
}

std::string homogeneous_obj(const HomogeneousSolution& sol) {
    ObjWriter obj("zero-curvature solution: envelope pieces over the positivity annulus plus the plateau");
    const auto& fb = sol.free_boundary;
    Box2 box{fb.front(), fb.front()};
    for (const auto& p : fb) {
        box.lo = box.lo.cwiseMin(p);
        box.hi = box.hi.cwiseMax(p);
    }
    box.lo -= Vec2::Ones();
    box.hi += Vec2::Ones();
    for (std::size_t k = 0; k < sol.surface.size(); ++k) {
        const AffinePiece& piece = sol.surface.pieces()[k];
        ConvexPolygon band = active_region(sol.surface, k, box);
        band = clip_polygon(band, Halfplane{-piece.gradient2(), piece.offset, -1});
        band = clip_polygon(band, Halfplane{piece.gradient2(), sol.h0 - piece.offset, -1});
        if (band.empty()) continue;
        std::vector<int> ids;
        for (const auto& v : band.vertices) ids.push_back(obj.vertex(v.x(), v.y(), piece(v)));
        obj.fan(ids);
    }
    add_plateau(obj, sol.omega->boundary_polygon(256), sol.h0);
    return obj.str();
}

std::string polytope_obj(const Polytope3& p) {
    ObjWriter obj("free boundary of the d = 3 solution (the graph lives in four dimensions)");
    std::vector<int> ids;
    for (const auto& v : p.vertices) ids.push_back(obj.vertex(v.x(), v.y(), v.z()));
    for (const auto& f : p.faces) {
        std::vector<int> ring;
        for (int i : f) ring.push_back(ids[static_cast<std::size_t>(i)]);
        obj.fan(ring);
    }
    return obj.str();
}

std::string polytope_csv(const Polytope3& p) {
    std::string out = "x,y,z\n";
    for (const auto& v : p.vertices)
        out += format_double(v.x()) + "," + format_double(v.y()) + "," + format_double(v.z()) + "\n";
    return out;
}

std::string grid_obj(const AnnulusGrid& g, const std::string& comment) {
    ObjWriter obj(comment);
    std::vector<int> ids;
    for (int i = 0; i < g.size(); ++i) {
        const Vec2 x = g.node(i);
        ids.push_back(obj.vertex(x.x(), x.y(), g.values[static_cast<std::size_t>(i)]));
    }
    for (int k = 0; k < g.rings; ++k)
        for (int s = 0; s < g.sectors; ++s) {
            const int a = ids[static_cast<std::size_t>(g.index(s, k))];
            const int b = ids[static_cast<std::size_t>(g.index(s + 1, k))];
            const int c = ids[static_cast<std::size_t>(g.index(s + 1, k + 1))];
            const int d = ids[static_cast<std::size_t>(g.index(s, k + 1))];
            obj.face(a, b, c);
            obj.face(a, c, d);
        }
    std::vector<Vec2> inner = g.inner_boundary();
    add_plateau(obj, inner, g.h0);
    return obj.str();
}

ojson certificate_json(const Certificate& c) {
    ojson j;
    j["overall"] = c.overall;
    j["seed"] = c.seed;
    ojson checks = ojson::array();
    for (const auto& k : c.checks)
        checks.push_back({{"name", k.name},
                          {"passed", k.passed},
                          {"residual", k.residual},
                          {"tolerance", k.tolerance},
                          {"statement", k.statement}});
    j["checks"] = checks;
    ojson q = ojson::object();
    for (const auto& [k, v] : c.quantities) q[k] = v;
    j["quantities"] = q;
    return j;
}

struct ExistenceFlags {
    std::optional<ExistenceCheck> condition;
    std::optional<Case2Existence> radial;  ///< disk, d = 2, psi = one
    std::optional<bool> radial_exists;
    double oracle_radius = std::numeric_limits<double>::quiet_NaN();
};

ExistenceFlags existence_flags(const RunConfig& cfg) {
    ExistenceFlags f;
    const ConvexDomain omega = domain_of(cfg);
    const PsiSpec psi = psi_of(cfg);
    if (cfg.dimension == 2 && cfg.K0 > 0.0 && omega.kind() != ConvexDomain::Kind::Polygon && omega.min_curvature() > 0.0)
        f.condition = check_existence_condition(omega, cfg.h0, cfg.lambda0, cfg.K0, psi, 2);
    if (cfg.omega.kind != "disk") return f;
    const double R = cfg.omega.radius;
    if (cfg.K0 == 0.0) {
        f.radial_exists = true;
        f.oracle_radius = R + cfg.h0 / cfg.lambda0;
        return f;
    }
    if (cfg.dimension == 2 && psi.kind == PsiSpec::Kind::One) {
        f.radial = case2_existence(R, cfg.h0, cfg.lambda0, cfg.K0);
        f.radial_exists = f.radial->exists;
        if (f.radial->r_fb) f.oracle_radius = *f.radial->r_fb;
        return f;
    }
    try {
        f.oracle_radius = radial_shoot(cfg.dimension, R, cfg.h0, cfg.lambda0, cfg.K0, psi).r_fb;
        f.radial_exists = true;
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoSolution) throw;
        f.radial_exists = false;
    }
    return f;
}

ojson existence_json(const ExistenceFlags& f) {
    ojson j = ojson::object();
    if (f.condition) {
        j["curvature_condition"] = {{"holds", f.condition->holds},   {"lhs", f.condition->lhs},
                                    {"rhs", f.condition->rhs},       {"margin", f.condition->margin},
                                    {"kappa0", f.condition->kappa0}, {"alpha", f.condition->alpha}};
    }
    if (f.radial) {
        j["radial"] = {{"exists", f.radial->exists},
                       {"rmax_test_holds", f.radial->rmax_test_holds},
                       {"r_max", f.radial->r_max},
                       {"v_at_rmax", f.radial->v_at_rmax},
                       {"substituted_phi_value", f.radial->substituted_phi_value}};
        if (f.radial->r_fb) j["radial"]["r_fb"] = *f.radial->r_fb;
    } else if (f.radial_exists) {
        j["radial"] = {{"exists", *f.radial_exists}};
        if (!std::isnan(f.oracle_radius)) j["radial"]["r_fb"] = f.oracle_radius;
    }
    return j;
}

std::string nonexistence_reason(const ExistenceFlags& f) {
    std::string out;
    if (f.condition && !f.condition->holds) out += "curvature bound K0^(1/d) <= psi(lambda0)^(-1/d) 2 alpha fails";
    if (f.radial && !f.radial->rmax_test_holds) {
        if (!out.empty()) out += "; ";
        out += "radial test v(R_max) <= 0 fails";
    }
    if (f.radial_exists && !*f.radial_exists) {
        if (!out.empty()) out += "; ";
        out += "no radial solution";
    }
    return out;
}

struct Outcome {
    int exit_code = 1;
    std::string status;
    ojson report;
    double fb_radius = std::numeric_limits<double>::quiet_NaN();
    std::vector<Certificate> certificates;
    std::vector<std::string> names;
    std::string obj, csv;
    ExistenceFlags flags;
    double ma_residual = std::numeric_limits<double>::quiet_NaN();
    double fb_residual = std::numeric_limits<double>::quiet_NaN();
    double solve_seconds = 0.0;
};

double mean_radius(const std::vector<Vec2>& ring, const Vec2& c, double* lo = nullptr, double* hi = nullptr) {
    double sum = 0.0, mn = std::numeric_limits<double>::infinity(), mx = 0.0;
    for (const auto& p : ring) {
        const double r = (p - c).norm();
        sum += r;
        mn = std::min(mn, r);
        mx = std::max(mx, r);
    }
    if (lo) *lo = mn;
    if (hi) *hi = mx;
    return ring.empty() ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(ring.size());
}

void finish(Outcome& out, bool certified_ok) {
    out.exit_code = certified_ok ? 0 : 1;
    out.status = certified_ok ? "converged" : "not_certified";
}

void run_homogeneous(const RunConfig& cfg, Outcome& out, bool artifacts) {
    const ConvexDomain omega = domain_of(cfg);
    const auto t0 = std::chrono::steady_clock::now();
    const HomogeneousSolution sol = omega.smooth() ? solve_smooth(omega, cfg.h0, cfg.lambda0, cfg.mesh.n_planes)
                                                   : solve_polytope(omega, cfg.h0, cfg.lambda0);
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    HomogeneousCertOptions copt;
    copt.seed = cfg.seed;
    const Certificate cert = certify_weak_solution(sol, copt);
    out.certificates.push_back(cert);
    out.names.push_back("weak_solution");
    out.report["certificates"]["weak_solution"] = certificate_json(cert);
    out.report["existence"] = true;
    out.report["existence_checks"] = existence_json(out.flags);
    if (sol.dim() == 2) {
        double lo = 0.0, hi = 0.0;
        out.fb_radius = mean_radius(sol.free_boundary, omega.center(), &lo, &hi);
        out.report["free_boundary"] = {{"vertices", sol.free_boundary.size()},
                                       {"radius_mean", out.fb_radius},
                                       {"radius_min", lo},
                                       {"radius_max", hi},
                                       {"area", signed_area(sol.free_boundary)}};
        if (artifacts) {
            out.obj = homogeneous_obj(sol);
            out.csv = ring_csv(sol.free_boundary);
        }
    } else {
        out.report["free_boundary"] = {{"vertices", sol.free_boundary_3d.vertices.size()},
                                       {"faces", sol.free_boundary_3d.faces.size()}};
        if (artifacts) {
            out.obj = polytope_obj(sol.free_boundary_3d);
            out.csv = polytope_csv(sol.free_boundary_3d);
        }
    }
    out.report["planes"] = sol.n_planes;
    out.report["fb_radius"] = out.fb_radius;
    finish(out, cert.overall);
}

void run_elliptic(const RunConfig& cfg, Outcome& out, bool artifacts) {
    const ConvexDomain omega = domain_of(cfg);
    EllipticOptions eo;
    eo.sectors = cfg.mesh.sectors;
    eo.rings = cfg.mesh.rings;
    eo.stencil = cfg.mesh.stencil;
    eo.n_planes = cfg.mesh.n_planes;
    eo.ma_tol = cfg.tolerances.ma;
    eo.fb_tol = cfg.tolerances.fb;
    eo.max_outer = cfg.tolerances.max_outer;
    eo.max_newton = cfg.tolerances.max_newton;
    eo.damping = cfg.damping;
    const auto t0 = std::chrono::steady_clock::now();
    const EllipticSolution sol = solve_free_boundary(omega, cfg.h0, cfg.lambda0, cfg.K0, psi_of(cfg), eo);
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.report["existence_checks"] = existence_json(out.flags);
    out.report["iterations"] = {{"outer", sol.outer_iterations}, {"newton", sol.newton_iterations}};
    if (sol.status == SolveStatus::NonexistenceSuspected) {
        out.exit_code = 2;
        out.status = "nonexistence_suspected";
        std::string why = nonexistence_reason(out.flags);
        out.report["existence"] = false;
        out.report["reason"] = why.empty() ? sol.reason : sol.reason + " (" + why + ")";
        out.report["fb_radius"] = nullptr;
        return;
    }
    out.ma_residual = sol.ma_residual;
    out.fb_residual = sol.fb_gradient_residual;
    out.report["existence"] = true;
    out.report["residuals"] = {{"ma_relative", sol.ma_residual},
                               {"ma_max_abs", sol.ma_max_residual},
                               {"fb_gradient_relative", sol.fb_gradient_residual}};
    EllipticCertOptions copt;
    copt.seed = cfg.seed;
    copt.slope_tol = cfg.tolerances.fb;
    const Certificate cert = certify_weak_solution(sol, copt);
    out.certificates.push_back(cert);
    out.names.push_back("weak_solution");
    out.report["certificates"]["weak_solution"] = certificate_json(cert);
    bool ok = cert.overall;
    if (sol.psi.kind == PsiSpec::Kind::One) {
        const Certificate ot = certify_ot_mass(sol);
        out.certificates.push_back(ot);
        out.names.push_back("ot_mass");
        out.report["certificates"]["ot_mass"] = certificate_json(ot);
        ok = ok && ot.overall;
    }
    double lo = 0.0, hi = 0.0;
    out.fb_radius = mean_radius(sol.free_boundary, omega.center(), &lo, &hi);
    out.report["free_boundary"] = {{"vertices", sol.free_boundary.size()},
                                   {"radius_mean", out.fb_radius},
                                   {"radius_min", lo},
                                   {"radius_max", hi},
                                   {"area", signed_area(sol.free_boundary)}};
    out.report["fb_radius"] = out.fb_radius;
    if (artifacts) {
        out.obj = grid_obj(sol.grid, "curvature solution on the annulus mesh plus the plateau");
        out.csv = ring_csv(sol.free_boundary);
    }
    finish(out, ok);
}

void run_oracle(const RunConfig& cfg, Outcome& out, bool artifacts) {
    const PsiSpec psi = psi_of(cfg);
    const double R = cfg.omega.radius;
    const Vec2 c = cfg.omega.center;
    out.report["existence_checks"] = existence_json(out.flags);
    const auto t0 = std::chrono::steady_clock::now();
    RadialProfile prof;
    try {
        prof = cfg.K0 == 0.0 ? cone(R, cfg.h0, cfg.lambda0)
                             : radial_shoot(cfg.dimension, R, cfg.h0, cfg.lambda0, cfg.K0, psi);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::NoSolution) throw;
        out.exit_code = 2;
        out.status = "nonexistence_suspected";
        out.report["existence"] = false;
        const std::string why = nonexistence_reason(out.flags);
        out.report["reason"] = why.empty() ? std::string(e.what()) : std::string(e.what()) + " (" + why + ")";
        out.report["fb_radius"] = nullptr;
        return;
    }
    out.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.fb_radius = prof.r_fb;
    out.report["existence"] = true;
    out.report["profile"] = {{"kind", to_string(prof.kind)}, {"r_fb", prof.r_fb}, {"initial_slope", prof.initial_slope}};
    if (cfg.K0 > 0.0 && cfg.dimension == 2 && psi.kind == PsiSpec::Kind::One && out.flags.radial &&
        out.flags.radial->r_fb)
        out.report["profile"]["closed_form_r_fb"] = *out.flags.radial->r_fb;

    Certificate cert;
    cert.seed = cfg.seed;
    const double tol = prof.kind == RadialCase::Shot ? 1e-8 : 1e-10;
    cert.add("boundary_value", std::abs(prof.value(R) - cfg.h0), tol, "v(R0) = h0");
    cert.add("free_boundary_level", std::abs(prof.value(prof.r_fb)), tol, "v(r_fb) = 0");
    cert.add("free_boundary_slope", std::abs(std::abs(prof.slope(prof.r_fb)) - cfg.lambda0), tol, "|v'(r_fb)| = lambda0");
    double rise = 0.0, bend = 0.0;
    double prev = prof.slope(R);
    for (int k = 1; k <= 200; ++k) {
        const double r = R + (prof.r_fb - R) * k / 200.0;
        const double s = prof.slope(r);
        rise = std::max(rise, s);
        bend = std::max(bend, s - prev);
        prev = s;
    }
    cert.add("decreasing", std::max(0.0, rise), 1e-12, "v' <= 0 on the annulus");
    cert.add("concave", std::max(0.0, bend), 1e-9, "v' nonincreasing on the annulus");
    cert.note("free_boundary_radius", prof.r_fb);
    out.certificates.push_back(cert);
    out.names.push_back("profile");
    out.report["certificates"]["profile"] = certificate_json(cert);
    out.report["fb_radius"] = prof.r_fb;
    if (artifacts) {
        const int S = 128, M = 32;
        ObjWriter obj("radial profile revolved about the domain center");
        std::vector<int> ids;
        for (int k = 0; k <= M; ++k)
            for (int s = 0; s < S; ++s) {
                const double r = R + (prof.r_fb - R) * k / M;
                const double t = 2.0 * M_PI * s / S;
                ids.push_back(obj.vertex(c.x() + r * std::cos(t), c.y() + r * std::sin(t), k == M ? 0.0 : prof.value(r)));
            }
        for (int k = 0; k < M; ++k)
            for (int s = 0; s < S; ++s) {
                const auto at = [&](int ss, int kk) { return ids[static_cast<std::size_t>(kk * S + (ss % S))]; };
                obj.face(at(s, k), at(s + 1, k), at(s + 1, k + 1));
                obj.face(at(s, k), at(s + 1, k + 1), at(s, k + 1));
            }
        std::vector<Vec2> inner, outer;
        for (int s = 0; s < S; ++s) {
            const double t = 2.0 * M_PI * s / S;
            inner.push_back(c + R * Vec2(std::cos(t), std::sin(t)));
            outer.push_back(c + prof.r_fb * Vec2(std::cos(t), std::sin(t)));
        }
        add_plateau(obj, inner, cfg.h0);
        out.obj = obj.str();
        out.csv = ring_csv(outer);
    }
    finish(out, cert.overall);
}

Outcome execute(const RunConfig& cfg, bool artifacts) {
    Outcome out;
    out.report["config"] = to_json(cfg);
    out.report["solver"] = cfg.solver;
    out.flags = existence_flags(cfg);
    if (cfg.solver == "homogeneous") run_homogeneous(cfg, out, artifacts);
    else if (cfg.solver == "elliptic") run_elliptic(cfg, out, artifacts);
    else run_oracle(cfg, out, artifacts);
    out.report["status"] = out.status;
    out.report["exit_code"] = out.exit_code;
    out.report["timings"] = cfg.output.timings;
    return out;
}

}  // namespace

SolveReport run(const RunConfig& cfg, const fs::path& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    const fs::path dir = out_dir.empty() ? fs::path(cfg.output.dir) : out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir.string() + ": " + ec.message());

    SolveReport rep;
    Outcome out;
    try {
        out = execute(cfg, true);
    } catch (const Error& e) {
        out = Outcome{};
        out.report["config"] = to_json(cfg);
        out.report["solver"] = cfg.solver;
        out.report["status"] = "error";
        out.report["exit_code"] = 1;
        out.report["error"] = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
        out.status = "error";
        out.exit_code = 1;
    }
    rep.exit_code = out.exit_code;
    rep.status = out.status;
    rep.fb_radius = out.fb_radius;
    rep.certificates = out.certificates;
    rep.certificate_names = out.names;
    rep.report_json = out.report.dump(2) + "\n";
    if (!out.obj.empty()) {
        write_atomic(dir / cfg.output.surface, out.obj);
        rep.files.push_back(dir / cfg.output.surface);
    }
    if (!out.csv.empty()) {
        write_atomic(dir / cfg.output.free_boundary, out.csv);
        rep.files.push_back(dir / cfg.output.free_boundary);
    }
    write_atomic(dir / cfg.output.report, rep.report_json);
    rep.files.push_back(dir / cfg.output.report);
    ojson timings;
    timings["solve_seconds"] = out.solve_seconds;
    timings["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_atomic(dir / cfg.output.timings, timings.dump(2) + "\n");
    rep.files.push_back(dir / cfg.output.timings);
    return rep;
}

namespace {

std::string flag(const std::optional<bool>& b) { return b ? (*b ? "true" : "false") : "n/a"; }

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

std::string num(double v) { return std::isnan(v) ? "" : format_double(v); }

SweepRow sweep_row(const RunConfig& tmpl, double K0, double lambda0, double h0) {
    SweepRow row;
    row.K0 = K0;
    row.lambda0 = lambda0;
    row.h0 = h0;
    row.condition_margin = row.fb_radius = row.oracle_fb_radius = row.ma_residual = row.fb_gradient_residual =
        std::numeric_limits<double>::quiet_NaN();
    RunConfig cfg = tmpl;
    cfg.K0 = K0;
    cfg.lambda0 = lambda0;
    cfg.h0 = h0;
    if (K0 == 0.0) {
        cfg.psi = "zero";
        if (cfg.solver == "elliptic") cfg.solver = "homogeneous";
    } else {
        if (cfg.psi == "zero") cfg.psi = "one";
        if (cfg.solver == "homogeneous") cfg.solver = "elliptic";
    }
    try {
        std::vector<std::string> errs;
        validate(cfg, errs);
        if (!errs.empty()) fail(ErrorCode::ValidationError, errs.front());
        ExistenceFlags flags;
        if (cfg.sweep.evaluate_only) {
            flags = existence_flags(cfg);
            row.status = "evaluated";
            row.exit_code = 0;
        } else {
            const Outcome out = execute(cfg, false);
            flags = out.flags;
            row.status = out.status;
            row.exit_code = out.exit_code;
            row.fb_radius = out.fb_radius;
            row.ma_residual = out.ma_residual;
            row.fb_gradient_residual = out.fb_residual;
        }
        if (flags.condition) {
            row.curvature_condition = flags.condition->holds ? "true" : "false";
            row.condition_margin = flags.condition->margin;
        } else {
            row.curvature_condition = "n/a";
        }
        row.rmax_test = flags.radial ? (flags.radial->rmax_test_holds ? "true" : "false") : "n/a";
        row.radial_exists = flag(flags.radial_exists);
        row.oracle_fb_radius = flags.oracle_radius;
    } catch (const Error& e) {
        row.status = "error";
        row.exit_code = 1;
        row.error = e.what();
        if (row.curvature_condition.empty()) row.curvature_condition = "n/a";
        if (row.rmax_test.empty()) row.rmax_test = "n/a";
        if (row.radial_exists.empty()) row.radial_exists = "n/a";
    }
    return row;
}

unsigned worker_count(std::size_t jobs) {
    unsigned n = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("KFREE_MAX_THREADS")) {
        const long cap = std::strtol(env, nullptr, 10);
        if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
    }
    return static_cast<unsigned>(std::max<std::size_t>(1, std::min<std::size_t>(n, jobs)));
}

}  // namespace

SweepResult sweep(const RunConfig& cfg, const fs::path& out_dir) {
    const std::vector<double> Ks = cfg.sweep.K0.value_or(std::vector<double>{cfg.K0});
    const std::vector<double> Ls = cfg.sweep.lambda0.value_or(std::vector<double>{cfg.lambda0});
    const std::vector<double> Hs = cfg.sweep.h0.value_or(std::vector<double>{cfg.h0});
    struct Tuple {
        double K, l, h;
    };
    std::vector<Tuple> tuples;
    for (double K : Ks)
        for (double l : Ls)
            for (double h : Hs) tuples.push_back({K, l, h});

    SweepResult res;
    res.rows.resize(tuples.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i = next++; i < tuples.size(); i = next++)
            res.rows[i] = sweep_row(cfg, tuples[i].K, tuples[i].l, tuples[i].h);
    };
    std::vector<std::thread> pool;
    const unsigned n = worker_count(tuples.size());
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(work);
    work();
    for (auto& t : pool) t.join();

    res.csv = "index,K0,lambda0,h0,status,exit_code,curvature_condition,condition_margin,rmax_test,radial_exists,"
              "fb_radius,oracle_fb_radius,ma_residual,fb_gradient_residual,error\n";
    for (std::size_t i = 0; i < res.rows.size(); ++i) {
        const SweepRow& r = res.rows[i];
        res.csv += std::to_string(i) + "," + format_double(r.K0) + "," + format_double(r.lambda0) + "," +
                   format_double(r.h0) + "," + r.status + "," + std::to_string(r.exit_code) + "," +
                   r.curvature_condition + "," + num(r.condition_margin) + "," + r.rmax_test + "," + r.radial_exists +
                   "," + num(r.fb_radius) + "," + num(r.oracle_fb_radius) + "," + num(r.ma_residual) + "," +
                   num(r.fb_gradient_residual) + "," + csv_field(r.error) + "\n";
    }
    const fs::path dir = out_dir.empty() ? fs::path(cfg.output.dir) : out_dir;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::Io, "cannot create output directory " + dir.string() + ": " + ec.message());
    res.file = dir / cfg.output.sweep;
    write_atomic(res.file, res.csv);
    return res;
}

}  // namespace kfree
