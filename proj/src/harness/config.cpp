#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "fieldslab/harness.hpp"
#include "fieldslab/lattice.hpp"
#include "fieldslab/params.hpp"

namespace fieldslab {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ConfigError(where + ": " + what);
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!ok.count(it.key())) fail(where, "unknown key '" + it.key() + "'");
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "expected an integer");
    return j.get<int>();
}

std::uint64_t get_u64(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<std::int64_t>() >= 0))
        fail(where, "expected a non-negative integer");
    return j.get<std::uint64_t>();
}

template <class T, class Get>
std::vector<T> get_list(const json& j, const std::string& where, Get get) {
    std::vector<T> out;
    if (!j.is_array()) {
        out.push_back(get(j, where));  // scalar shorthand
        return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get(j[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<int> int_list(const json& j, const std::string& w) { return get_list<int>(j, w, get_int); }
std::vector<double> num_list(const json& j, const std::string& w) { return get_list<double>(j, w, get_number); }

std::vector<int> vec_d(const json& j, int d, const std::string& where) {
    auto v = int_list(j, where);
    if (static_cast<int>(v.size()) != d) fail(where, "expected " + std::to_string(d) + " entries");
    return v;
}

std::vector<double> dvec_d(const json& j, int d, const std::string& where) {
    auto v = num_list(j, where);
    if (static_cast<int>(v.size()) != d) fail(where, "expected " + std::to_string(d) + " entries");
    return v;
}

double opt_number(const json& j, const char* key, double dflt, const std::string& where) {
    return j.contains(key) ? get_number(j.at(key), where + "." + key) : dflt;
}

json default_functions(const std::string& command) {
    json sin1 = {{"name", "sin1"}, {"factors", json::array({{{"type", "sin"}, {"mode", {1}}}})}};
    json sin_cos = {{"name", "sin1_x_1pcos1"},
                    {"factors", json::array({{{"type", "sin"}, {"mode", {1}}},
                                             {{"type", "cos"}, {"mode", {1}}, {"offset", 1.0}}})}};
    if (command == "fluct-sweep" || command == "hydro-sweep") return json::array({sin1, sin_cos});
    return json::array({sin1});
}

}  // namespace

FactorPtr parse_factor(const json& j, int d) {
    const std::string w = "factor";
    if (!j.is_object() || !j.contains("type") || !j.at("type").is_string()) fail(w, "expected an object with a 'type'");
    const std::string type = j.at("type").get<std::string>();
    const std::string where = "factor(" + type + ")";
    if (type == "const") {
        check_keys(j, where, {"type", "value"});
        return make_constant(d, opt_number(j, "value", 1.0, where));
    }
    if (type == "sin") {
        check_keys(j, where, {"type", "mode", "amplitude"});
        return make_sin(d, vec_d(j.at("mode"), d, where + ".mode"), opt_number(j, "amplitude", 1.0, where));
    }
    if (type == "cos") {
        check_keys(j, where, {"type", "mode", "amplitude", "offset"});
        return make_cos(d, vec_d(j.at("mode"), d, where + ".mode"), opt_number(j, "amplitude", 1.0, where),
                        opt_number(j, "offset", 0.0, where));
    }
    if (type == "trig") {
        check_keys(j, where, {"type", "offset", "terms"});
        std::vector<TrigTerm> terms;
        if (j.contains("terms")) {
            if (!j.at("terms").is_array()) fail(where + ".terms", "expected an array");
            for (const auto& t : j.at("terms")) {
                check_keys(t, where + ".terms[]", {"amplitude", "mode", "phase"});
                terms.push_back({opt_number(t, "amplitude", 1.0, where), vec_d(t.at("mode"), d, where + ".mode"),
                                 opt_number(t, "phase", 0.0, where)});
            }
        }
        return make_trig(d, opt_number(j, "offset", 0.0, where), std::move(terms));
    }
    if (type == "bump") {
        check_keys(j, where, {"type", "center", "width", "amplitude"});
        const double width = get_number(j.at("width"), where + ".width");
        if (!(width > 0.0)) fail(where + ".width", "must be positive");
        return make_bump(d, dvec_d(j.at("center"), d, where + ".center"), width,
                         opt_number(j, "amplitude", 1.0, where));
    }
    if (type == "hermite") {
        check_keys(j, where, {"type", "order", "center", "scale"});
        const double scale = get_number(j.at("scale"), where + ".scale");
        if (!(scale > 0.0)) fail(where + ".scale", "must be positive");
        return make_hermite(d, vec_d(j.at("order"), d, where + ".order"), dvec_d(j.at("center"), d, where + ".center"),
                            scale);
    }
    fail(where, "unknown factor type");
}

FunctionSpec parse_function(const json& j, int d, const std::string& fallback_name) {
    FunctionSpec f;
    const json* factors = &j;
    f.name = fallback_name;
    if (j.is_object()) {
        check_keys(j, "function", {"name", "factors"});
        if (j.contains("name")) {
            if (!j.at("name").is_string()) fail("function.name", "expected a string");
            f.name = j.at("name").get<std::string>();
        }
        if (!j.contains("factors")) fail("function", "missing 'factors'");
        factors = &j.at("factors");
    }
    if (!factors->is_array() || factors->empty()) fail("function " + f.name, "factors must be a non-empty array");
    if (factors->size() > 8) fail("function " + f.name, "at most 8 factors");
    for (const auto& fj : *factors) f.fn.factors.push_back(parse_factor(fj, d));
    f.spec = {{"name", f.name}, {"factors", *factors}};
    return f;
}

ExperimentConfig parse_config(const json& j0, const std::string& command) {
    static const std::set<std::string> commands{"exact-check", "hydro-sweep", "fluct-sweep", "dual-check"};
    if (!commands.count(command)) throw ConfigError("unknown command '" + command + "'");
    const json j = j0.is_null() ? json::object() : j0;
    check_keys(j, "config",
               {"command", "model", "theta", "profile", "functions", "times", "samples", "seed", "threads", "exact",
                "fluct", "dual"});
    if (j.contains("command") && j.at("command") != command)
        throw ConfigError("config is for '" + j.at("command").get<std::string>() + "', not '" + command + "'");

    ExperimentConfig c;
    c.command = command;
    const bool exact = command == "exact-check";

    // defaults per command
    c.sigmas = {-1, 0, 1};
    c.alphas = exact ? std::vector<int>{1, 2} : std::vector<int>{1};
    if (command == "exact-check") c.Ns = {2, 3, 4};
    if (command == "hydro-sweep") c.Ns = {32, 64, 128};
    if (command == "fluct-sweep") c.Ns = {128};
    if (command == "dual-check") c.Ns = {4, 16};
    if (command == "fluct-sweep") c.sigmas = {0, 1};
    c.times = command == "hydro-sweep" ? std::vector<double>{0.0, 0.02, 0.05}
              : command == "dual-check" ? std::vector<double>{0.05}
                                        : std::vector<double>{0.0};
    c.samples = command == "hydro-sweep" ? 200 : command == "fluct-sweep" ? 1000 : 10000;
    c.identities = {"duality", "balance", "product", "expectation"};
    c.ks = {1, 2};
    c.thetas = {0.3, 0.7};
    c.product_Ns = {2, 4, 6};
    c.expectation_Ns = {4, 8};
    c.tuples = {{0}, {0, 1}, {0, 0}};

    if (j.contains("model")) {
        const json& m = j.at("model");
        check_keys(m, "model", {"sigma", "alpha", "d", "N", "bond_rate"});
        if (m.contains("sigma")) c.sigmas = int_list(m.at("sigma"), "model.sigma");
        if (m.contains("alpha")) c.alphas = int_list(m.at("alpha"), "model.alpha");
        if (m.contains("d")) c.d = get_int(m.at("d"), "model.d");
        if (m.contains("N")) c.Ns = int_list(m.at("N"), "model.N");
        if (m.contains("bond_rate")) c.bond_rate = get_number(m.at("bond_rate"), "model.bond_rate");
    }
    if (c.d < 1 || c.d > 3) fail("model.d", "must be 1, 2 or 3");
    for (int s : c.sigmas)
        for (int a : c.alphas)
            for (int n : c.Ns) {
                ModelParams p{s, a, c.d, n, c.bond_rate};
                try {
                    p.validate();
                } catch (const std::exception& e) {
                    fail("model", e.what());
                }
            }
    if (j.contains("theta")) c.theta = get_number(j.at("theta"), "theta");
    if (j.contains("profile") && !j.at("profile").is_null()) {
        c.profile = j.at("profile");
        parse_factor(c.profile, c.d);
    }
    json fns = j.contains("functions") ? j.at("functions") : default_functions(command);
    if (!fns.is_array()) fail("functions", "expected an array");
    for (std::size_t i = 0; i < fns.size(); ++i) c.functions.push_back(parse_function(fns[i], c.d, "f" + std::to_string(i)));
    if (j.contains("times")) c.times = num_list(j.at("times"), "times");
    for (double t : c.times)
        if (!(t >= 0.0) || !std::isfinite(t)) fail("times", "must be finite and non-negative");
    if (j.contains("samples")) c.samples = get_u64(j.at("samples"), "samples");
    if (j.contains("seed")) c.seed = get_u64(j.at("seed"), "seed");
    if (j.contains("threads")) c.threads = get_int(j.at("threads"), "threads");

    if (j.contains("exact")) {
        const json& e = j.at("exact");
        check_keys(e, "exact",
                   {"identities", "k", "thetas", "max_particles", "product_N", "expectation_N", "configs_per_point",
                    "tolerance", "rate_perturbation"});
        if (e.contains("identities")) {
            c.identities.clear();
            if (!e.at("identities").is_array()) fail("exact.identities", "expected an array");
            for (const auto& s : e.at("identities")) {
                if (!s.is_string()) fail("exact.identities", "expected strings");
                const auto name = s.get<std::string>();
                if (name != "duality" && name != "balance" && name != "product" && name != "expectation")
                    fail("exact.identities", "unknown identity '" + name + "'");
                c.identities.push_back(name);
            }
        }
        if (e.contains("k")) c.ks = int_list(e.at("k"), "exact.k");
        if (e.contains("thetas")) c.thetas = num_list(e.at("thetas"), "exact.thetas");
        if (e.contains("max_particles")) c.max_particles = get_int(e.at("max_particles"), "exact.max_particles");
        if (e.contains("product_N")) c.product_Ns = int_list(e.at("product_N"), "exact.product_N");
        if (e.contains("expectation_N")) c.expectation_Ns = int_list(e.at("expectation_N"), "exact.expectation_N");
        if (e.contains("configs_per_point"))
            c.configs_per_point = get_int(e.at("configs_per_point"), "exact.configs_per_point");
        c.tolerance = opt_number(e, "tolerance", c.tolerance, "exact");
        c.rate_perturbation = opt_number(e, "rate_perturbation", c.rate_perturbation, "exact");
        for (int k : c.ks)
            if (k < 1 || k > 3) fail("exact.k", "must be in 1..3");
        if (c.max_particles < 0) fail("exact.max_particles", "must be non-negative");
        if (!(c.tolerance > 0.0)) fail("exact.tolerance", "must be positive");
    }
    if (j.contains("fluct")) {
        const json& f = j.at("fluct");
        check_keys(f, "fluct", {"batches", "window", "gamma_points"});
        if (f.contains("batches")) c.batches = get_int(f.at("batches"), "fluct.batches");
        c.window = opt_number(f, "window", c.window, "fluct");
        if (f.contains("gamma_points")) c.gamma_points = get_int(f.at("gamma_points"), "fluct.gamma_points");
        if (c.batches < 2) fail("fluct.batches", "need at least 2");
        if (!(c.window > 0.0)) fail("fluct.window", "must be positive");
        if (c.gamma_points < 1) fail("fluct.gamma_points", "must be positive");
    }
    if (j.contains("dual")) {
        const json& dj = j.at("dual");
        check_keys(dj, "dual", {"tuples", "exact_N_max"});
        if (dj.contains("tuples")) {
            c.tuples.clear();
            if (!dj.at("tuples").is_array()) fail("dual.tuples", "expected an array of arrays");
            for (const auto& t : dj.at("tuples")) c.tuples.push_back(int_list(t, "dual.tuples[]"));
        }
        if (dj.contains("exact_N_max")) c.exact_N_max = get_int(dj.at("exact_N_max"), "dual.exact_N_max");
        for (const auto& t : c.tuples)
            if (t.empty() || t.size() > 8) fail("dual.tuples", "tuple length must be in 1..8");
    }

    if (command != "exact-check" && c.samples < 2) fail("samples", "need at least 2");
    if (command == "fluct-sweep" || command == "dual-check" || command == "exact-check") {
        for (int s : c.sigmas)
            for (int a : c.alphas) {
                if (command == "exact-check") {
                    for (double th : c.thetas) {
                        if (!(th >= 0.0) || !std::isfinite(th)) fail("exact.thetas", "must be finite and non-negative");
                    }
                    continue;
                }
                try {
                    validate_theta(s, a, c.theta);
                } catch (const std::exception& e) {
                    fail("theta", e.what());
                }
            }
    }
    if (command == "hydro-sweep" && c.profile.is_null()) {
        for (int s : c.sigmas)
            try {
                validate_theta(s, 1, c.theta);
            } catch (const std::exception& e) {
                fail("theta", e.what());
            }
    }
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::string& command) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path.string() + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(j, command);
}

json ExperimentConfig::resolved() const {
    json fns = json::array();
    for (const auto& f : functions) fns.push_back(f.spec);
    json j = {{"command", command},
              {"model", {{"sigma", sigmas}, {"alpha", alphas}, {"d", d}, {"N", Ns}, {"bond_rate", bond_rate}}},
              {"theta", theta},
              {"profile", profile},
              {"functions", fns},
              {"times", times},
              {"samples", samples},
              {"seed", seed},
              {"threads", threads}};
    if (command == "exact-check")
        j["exact"] = {{"identities", identities},   {"k", ks},
                      {"thetas", thetas},           {"max_particles", max_particles},
                      {"product_N", product_Ns},    {"expectation_N", expectation_Ns},
                      {"configs_per_point", configs_per_point}, {"tolerance", tolerance},
                      {"rate_perturbation", rate_perturbation}};
    if (command == "fluct-sweep")
        j["fluct"] = {{"batches", batches}, {"window", window}, {"gamma_points", gamma_points}};
    if (command == "dual-check") j["dual"] = {{"tuples", tuples}, {"exact_N_max", exact_N_max}};
    return j;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
    return fnv1a64(cfg.resolved().dump());
}

}  // namespace fieldslab
