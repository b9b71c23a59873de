#pragma once

// Experiment configuration: JSON schema, symbol literals, validation that
// reports every problem at once, and stable hashing.
//
// Symbol literal (complex numbers as [re, im] or a plain real number):
//   {"type": "trigpoly", "coefficients": [b_{-M}, ..., b_M]}
//   {"type": "step", "arcs": [{"start": t1, "end": t2, "value": c}, ...]}
//   {"type": "sampled", "samples": [g(0), g(2pi/K), ...]}

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <json.hpp>

#include "asymptotics.hpp"
#include "errors.hpp"
#include "symbols.hpp"

namespace bergspec {

using json = nlohmann::ordered_json;

/// Environment variable overriding the spectrum cache root.
inline constexpr const char* cache_env_var = "BERGSPEC_CACHE_DIR";

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hash_hex(const std::string& bytes)
{
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

/// Canonical text of a JSON value used for hashing (keys in insertion order,
/// numbers printed by the library's shortest round-trip formatter).
inline std::string canonical(const json& j) { return j.dump(); }

// ---- symbol literals -------------------------------------------------------

inline complex complex_from_json(const json& j)
{
    if (j.is_number())
        return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
        return {j[0].get<double>(), j[1].get<double>()};
    throw input_error("expected a number or an [re, im] pair, got " + j.dump());
}

inline json complex_to_json(complex c)
{
    if (c.imag() == 0.0)
        return c.real();
    return json::array({c.real(), c.imag()});
}

inline std::vector<complex> complex_list(const json& j, const char* field)
{
    if (!j.is_array())
        throw input_error(std::string(field) + " must be an array");
    std::vector<complex> out;
    for (const auto& x : j)
        out.push_back(complex_from_json(x));
    return out;
}

inline AngularSymbol symbol_from_json(const json& j)
{
    if (!j.is_object())
        throw input_error("symbol must be an object with a \"type\" field");
    if (!j.contains("type") || !j["type"].is_string())
        throw input_error("symbol.type must be one of \"trigpoly\", \"step\", \"sampled\"");
    const auto type = j["type"].get<std::string>();
    if (type == "trigpoly") {
        if (!j.contains("coefficients"))
            throw input_error("trigpoly symbol needs \"coefficients\" [b_-M, ..., b_M]");
        return TrigPoly(complex_list(j["coefficients"], "coefficients"));
    }
    if (type == "step") {
        if (!j.contains("arcs") || !j["arcs"].is_array())
            throw input_error("step symbol needs an \"arcs\" array");
        std::vector<Arc> arcs;
        for (const auto& a : j["arcs"]) {
            if (!a.is_object() || !a.contains("start") || !a.contains("end") || !a["start"].is_number() ||
                !a["end"].is_number())
                throw input_error("each arc needs numeric \"start\" and \"end\"");
            const complex value = a.contains("value") ? complex_from_json(a["value"]) : complex{1.0};
            const double t1 = a["start"].get<double>(), t2 = a["end"].get<double>();
            if (!(t2 > t1))
                throw input_error("arc " + std::to_string(arcs.size()) + " must satisfy start < end");
            arcs.push_back(StepSymbol::arc(t1, t2, value));
        }
        return StepSymbol(std::move(arcs));
    }
    if (type == "sampled") {
        if (!j.contains("samples"))
            throw input_error("sampled symbol needs \"samples\"");
        return SampledSymbol(complex_list(j["samples"], "samples"));
    }
    throw input_error("unknown symbol type \"" + type + "\"");
}

inline json symbol_to_json(const AngularSymbol& g)
{
    json j;
    if (g.is_trig_poly()) {
        j["type"] = "trigpoly";
        j["coefficients"] = json::array();
        for (const auto& c : g.trig_poly().coefficients())
            j["coefficients"].push_back(complex_to_json(c));
    } else if (g.is_step()) {
        j["type"] = "step";
        j["arcs"] = json::array();
        for (const auto& a : g.step().arcs())
            j["arcs"].push_back({{"start", a.start}, {"end", a.end()}, {"value", complex_to_json(a.value)}});
    } else {
        j["type"] = "sampled";
        j["samples"] = json::array();
        for (const auto& c : std::get<SampledSymbol>(g.variant()).samples())
            j["samples"].push_back(complex_to_json(c));
    }
    return j;
}

// ---- experiment configuration ---------------------------------------------

enum class ExperimentKind { theorem1, theorem2, orthogonality, additivity, spectrum_only, property_suite };

inline const char* to_string(ExperimentKind k)
{
    switch (k) {
    case ExperimentKind::theorem1: return "theorem1";
    case ExperimentKind::theorem2: return "theorem2";
    case ExperimentKind::orthogonality: return "orthogonality";
    case ExperimentKind::additivity: return "additivity";
    case ExperimentKind::spectrum_only: return "spectrum-only";
    case ExperimentKind::property_suite: return "property-suite";
    }
    return "unknown";
}

struct WindowPolicy {
    /// Fractions of the stable bound n_max, or an explicit index window.
    double lo_fraction = 0.25;
    double hi_fraction = 0.5;
    std::optional<FitWindow> explicit_window;
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::theorem1;
    double gamma = 1.0;
    /// Angular symbol (theorem1, spectrum-only) or band symbol (theorem2).
    std::optional<AngularSymbol> symbol;
    std::optional<RadialPerturbation> perturbation;
    /// theorem1: toeplitz (singular values), toeplitz_positive_part, toeplitz_negative_part.
    PredictionVariant variant = PredictionVariant::toeplitz;
    /// spectrum-only: "toeplitz" or "banded"; and "singular" or "eigen".
    std::string operator_kind = "toeplitz";
    std::string quantity = "singular";
    /// orthogonality: the two step symbols.
    std::vector<StepSymbol> pair;
    std::optional<double> min_decay_exponent;
    /// additivity: arc coefficients c_1..c_L and grid.
    std::vector<complex> arc_coefficients;
    double arc_offset = 0.0;
    std::vector<double> s_grid;
    std::size_t grid_points = 12;
    /// property-suite.
    std::uint64_t seed = 0;
    std::size_t pairs_per_size = 10;
    std::size_t inequality_grid_points = 20;

    std::vector<std::size_t> sizes;
    double tolerance = 0.10;
    double stability_tolerance = 0.01;
    WindowPolicy window;
    std::string output_dir = "bergspec-out";
    std::string cache_dir;
    ComputeBudget budget;

    /// Hash of every field that affects numerical results.
    std::string hash() const;
    json to_json() const;
};

class config_error : public input_error {
public:
    explicit config_error(std::vector<std::string> errors)
        : input_error(join(errors)), errors_(std::move(errors))
    {
    }
    const std::vector<std::string>& errors() const { return errors_; }

private:
    static std::string join(const std::vector<std::string>& e)
    {
        std::string s = "invalid configuration:";
        for (const auto& x : e)
            s += "\n  - " + x;
        return s;
    }
    std::vector<std::string> errors_;
};

namespace detail {

/// Line and column (1-based) of a byte offset.
inline std::pair<std::size_t, std::size_t> line_col(const std::string& text, std::size_t offset)
{
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

/// A path is resolvable when it is a directory or its nearest existing ancestor is a writable directory.
inline std::optional<std::string> path_problem(const std::string& p)
{
    namespace fs = std::filesystem;
    if (p.empty())
        return "path is empty";
    std::error_code ec;
    fs::path path = fs::absolute(p, ec);
    if (ec)
        return "cannot resolve path";
    if (fs::exists(path, ec))
        return fs::is_directory(path, ec) ? std::nullopt : std::optional<std::string>("exists and is not a directory");
    fs::path parent = path;
    while (!parent.empty() && !fs::exists(parent, ec))
        parent = parent.parent_path();
    if (parent.empty() || !fs::is_directory(parent, ec))
        return "no existing parent directory";
    if (::access(parent.c_str(), W_OK) != 0)
        return "parent directory " + parent.string() + " is not writable";
    return std::nullopt;
}

inline std::string default_cache_dir()
{
    if (const char* env = std::getenv(cache_env_var); env && *env)
        return env;
    return ".bergspec-cache";
}

}  // namespace detail

inline json ExperimentConfig::to_json() const
{
    json j;
    j["kind"] = to_string(kind);
    j["gamma"] = gamma;
    if (symbol)
        j["symbol"] = symbol_to_json(*symbol);
    if (perturbation)
        j["perturbation"] = {{"epsilon", perturbation->epsilon}, {"inner_radius", perturbation->inner_radius}};
    j["variant"] = variant == PredictionVariant::toeplitz_positive_part   ? "positive_part"
                   : variant == PredictionVariant::toeplitz_negative_part ? "negative_part"
                                                                          : "abs";
    if (kind == ExperimentKind::spectrum_only) {
        j["operator"] = operator_kind;
        j["quantity"] = quantity;
    }
    if (!pair.empty()) {
        j["symbols"] = json::array();
        for (const auto& s : pair)
            j["symbols"].push_back(symbol_to_json(AngularSymbol(s)));
    }
    if (min_decay_exponent)
        j["min_decay_exponent"] = *min_decay_exponent;
    if (kind == ExperimentKind::additivity) {
        j["coefficients"] = json::array();
        for (auto c : arc_coefficients)
            j["coefficients"].push_back(complex_to_json(c));
        j["offset"] = arc_offset;
        j["s_grid"] = s_grid;
        j["grid_points"] = grid_points;
    }
    if (kind == ExperimentKind::property_suite) {
        j["seed"] = seed;
        j["pairs_per_size"] = pairs_per_size;
        j["grid_points"] = inequality_grid_points;
    }
    j["sizes"] = sizes;
    j["tolerance"] = tolerance;
    j["stability_tolerance"] = stability_tolerance;
    if (window.explicit_window)
        j["window"] = {{"policy", "explicit"}, {"n_lo", window.explicit_window->lo}, {"n_hi", window.explicit_window->hi}};
    else
        j["window"] = {{"policy", "fraction"}, {"lo", window.lo_fraction}, {"hi", window.hi_fraction}};
    j["output_dir"] = output_dir;
    j["cache_dir"] = cache_dir;
    j["budget"] = {{"max_dense_n", budget.max_dense_n}, {"max_memory_mb", budget.max_bytes >> 20}};
    return j;
}

inline std::string ExperimentConfig::hash() const
{
    auto j = to_json();
    j.erase("output_dir");
    j.erase("cache_dir");
    j.erase("budget");
    return hash_hex(canonical(j));
}

/// Re-check the cross-field invariants of a config (used after CLI overrides).
inline std::vector<std::string> validation_errors(const ExperimentConfig& c)
{
    std::vector<std::string> e;
    if (!std::isfinite(c.gamma) || c.gamma <= 0.0)
        e.push_back("gamma must be > 0");
    if (!(c.tolerance > 0.0))
        e.push_back("tolerance must be > 0");
    if (!(c.stability_tolerance > 0.0))
        e.push_back("stability_tolerance must be > 0");
    for (std::size_t i = 0; i < c.sizes.size(); ++i) {
        if (c.sizes[i] == 0)
            e.push_back("sizes[" + std::to_string(i) + "] must be positive");
        if (i > 0 && c.sizes[i] <= c.sizes[i - 1])
            e.push_back("sizes must be strictly ascending (sizes[" + std::to_string(i) + "])");
    }
    const bool needs_sizes = c.kind != ExperimentKind::property_suite;
    if (needs_sizes && c.sizes.empty())
        e.push_back("sizes must list at least one truncation size");
    if (c.kind == ExperimentKind::property_suite)
        for (auto n : c.sizes)
            if (n < 2) {
                e.push_back("property-suite sizes must be >= 2");
                break;
            }
    if (c.kind == ExperimentKind::theorem1 || c.kind == ExperimentKind::spectrum_only) {
        if (!c.symbol)
            e.push_back("symbol is required for " + std::string(to_string(c.kind)));
    }
    if (c.kind == ExperimentKind::theorem2) {
        if (!c.symbol)
            e.push_back("symbol (band coefficients) is required for theorem2");
        else if (!c.symbol->is_trig_poly())
            e.push_back("theorem2 symbol must be a trigpoly literal of band coefficients");
    }
    if (c.kind == ExperimentKind::spectrum_only && c.operator_kind == "banded" && c.symbol && !c.symbol->is_trig_poly())
        e.push_back("banded operator needs a trigpoly symbol");
    if (c.variant != PredictionVariant::toeplitz && c.symbol && !c.symbol->is_real())
        e.push_back("positive_part/negative_part variants need a real symbol");
    if (c.kind == ExperimentKind::orthogonality) {
        if (c.pair.size() != 2) {
            e.push_back("orthogonality needs exactly two step symbols in \"symbols\"");
        } else {
            for (std::size_t i = 0; i < c.pair[0].arcs().size(); ++i)
                for (std::size_t j = 0; j < c.pair[1].arcs().size(); ++j)
                    if (StepSymbol::overlap(c.pair[0].arcs()[i], c.pair[1].arcs()[j]) > 1e-12)
                        e.push_back("symbols[0] arc " + std::to_string(i) + " overlaps symbols[1] arc " +
                                    std::to_string(j));
        }
    }
    if (c.kind == ExperimentKind::additivity && c.arc_coefficients.empty())
        e.push_back("additivity needs a non-empty \"coefficients\" list");
    for (double s : c.s_grid)
        if (!(s > 0.0)) {
            e.push_back("s_grid values must be > 0");
            break;
        }
    if (c.window.explicit_window) {
        const auto& w = *c.window.explicit_window;
        if (w.lo < 1 || w.hi <= w.lo)
            e.push_back("window must satisfy 1 <= n_lo < n_hi");
    } else if (!(c.window.lo_fraction > 0.0 && c.window.lo_fraction < c.window.hi_fraction &&
                 c.window.hi_fraction <= 1.0)) {
        e.push_back("window fractions must satisfy 0 < lo < hi <= 1");
    }
    if (c.budget.max_dense_n == 0)
        e.push_back("budget.max_dense_n must be positive");
    if (auto p = detail::path_problem(c.output_dir))
        e.push_back("output_dir \"" + c.output_dir + "\": " + *p);
    if (auto p = detail::path_problem(c.cache_dir))
        e.push_back("cache_dir \"" + c.cache_dir + "\": " + *p);
    return e;
}

/// Parse and validate; throws config_error listing every problem found.
inline ExperimentConfig parse_config(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const nlohmann::json::parse_error& err) {
        const auto [line, col] = detail::line_col(text, err.byte > 0 ? err.byte - 1 : 0);
        throw config_error({"parse error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                            err.what()});
    }
    if (!j.is_object())
        throw config_error({"configuration must be a JSON object"});

    ExperimentConfig c;
    c.cache_dir = detail::default_cache_dir();
    std::vector<std::string> errors;
    auto field = [&](const char* name, auto&& fn) {
        if (!j.contains(name))
            return;
        try {
            fn(j[name]);
        } catch (const std::exception& ex) {
            errors.push_back(std::string(name) + ": " + ex.what());
        }
    };
    auto number = [](const json& v, const char* what) {
        if (!v.is_number())
            throw input_error(std::string(what) + " must be a number");
        return v.get<double>();
    };
    auto count = [](const json& v, const char* what) {
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw input_error(std::string(what) + " must be a non-negative integer");
        return static_cast<std::size_t>(v.get<long long>());
    };

    static const std::vector<std::string> known = {
        "kind", "gamma", "symbol", "perturbation", "variant", "operator", "quantity", "symbols", "min_decay_exponent",
        "coefficients", "offset", "s_grid", "grid_points", "seed", "pairs_per_size", "sizes", "tolerance",
        "stability_tolerance", "window", "output_dir", "cache_dir", "budget", "description"};
    for (auto it = j.begin(); it != j.end(); ++it)
        if (std::find(known.begin(), known.end(), it.key()) == known.end())
            errors.push_back("unknown field \"" + it.key() + "\"");

    if (!j.contains("kind")) {
        errors.push_back("kind is required");
    } else {
        field("kind", [&](const json& v) {
            const auto k = v.is_string() ? v.get<std::string>() : std::string();
            if (k == "theorem1") c.kind = ExperimentKind::theorem1;
            else if (k == "theorem2") c.kind = ExperimentKind::theorem2;
            else if (k == "orthogonality") c.kind = ExperimentKind::orthogonality;
            else if (k == "additivity") c.kind = ExperimentKind::additivity;
            else if (k == "spectrum-only") c.kind = ExperimentKind::spectrum_only;
            else if (k == "property-suite") c.kind = ExperimentKind::property_suite;
            else throw input_error("must be one of theorem1, theorem2, orthogonality, additivity, spectrum-only, property-suite");
        });
    }
    bool gamma_ok = true;
    field("gamma", [&](const json& v) {
        c.gamma = number(v, "gamma");
        if (!(c.gamma > 0.0) || !std::isfinite(c.gamma)) {
            gamma_ok = false;
            throw domain_error("gamma must be > 0");
        }
    });
    field("symbol", [&](const json& v) { c.symbol = symbol_from_json(v); });
    field("perturbation", [&](const json& v) {
        RadialPerturbation p;
        p.epsilon = number(v.at("epsilon"), "epsilon");
        if (v.contains("inner_radius"))
            p.inner_radius = number(v["inner_radius"], "inner_radius");
        BergmanSymbol{1.0, {}, p}.validate();
        c.perturbation = p;
    });
    field("variant", [&](const json& v) {
        const auto s = v.is_string() ? v.get<std::string>() : std::string();
        if (s == "abs") c.variant = PredictionVariant::toeplitz;
        else if (s == "positive_part") c.variant = PredictionVariant::toeplitz_positive_part;
        else if (s == "negative_part") c.variant = PredictionVariant::toeplitz_negative_part;
        else throw input_error("must be abs, positive_part or negative_part");
    });
    field("operator", [&](const json& v) {
        c.operator_kind = v.is_string() ? v.get<std::string>() : std::string();
        if (c.operator_kind != "toeplitz" && c.operator_kind != "banded")
            throw input_error("must be toeplitz or banded");
    });
    field("quantity", [&](const json& v) {
        c.quantity = v.is_string() ? v.get<std::string>() : std::string();
        if (c.quantity != "singular" && c.quantity != "eigen")
            throw input_error("must be singular or eigen");
    });
    field("symbols", [&](const json& v) {
        if (!v.is_array())
            throw input_error("must be an array of step symbols");
        for (std::size_t i = 0; i < v.size(); ++i) {
            try {
                const auto g = symbol_from_json(v[i]);
                if (g.is_trig_poly())
                    throw input_error("must be a step or sampled symbol");
                c.pair.push_back(g.as_step());
            } catch (const std::exception& ex) {
                errors.push_back("symbols[" + std::to_string(i) + "]: " + ex.what());
            }
        }
    });
    field("min_decay_exponent", [&](const json& v) { c.min_decay_exponent = number(v, "min_decay_exponent"); });
    field("coefficients", [&](const json& v) { c.arc_coefficients = complex_list(v, "coefficients"); });
    field("offset", [&](const json& v) { c.arc_offset = number(v, "offset"); });
    field("s_grid", [&](const json& v) {
        if (!v.is_array())
            throw input_error("must be an array");
        for (const auto& x : v)
            c.s_grid.push_back(number(x, "s_grid entries"));
    });
    field("grid_points", [&](const json& v) {
        c.grid_points = count(v, "grid_points");
        c.inequality_grid_points = c.grid_points;
    });
    field("seed", [&](const json& v) {
        if (!v.is_number_unsigned())
            throw input_error("must be a non-negative integer");
        c.seed = v.get<std::uint64_t>();
    });
    field("pairs_per_size", [&](const json& v) { c.pairs_per_size = count(v, "pairs_per_size"); });
    field("sizes", [&](const json& v) {
        if (!v.is_array())
            throw input_error("must be an array of positive integers");
        for (const auto& x : v) {
            if (!x.is_number_integer() || x.get<long long>() <= 0)
                throw input_error("truncation sizes must be positive integers");
            c.sizes.push_back(static_cast<std::size_t>(x.get<long long>()));
        }
    });
    field("tolerance", [&](const json& v) { c.tolerance = number(v, "tolerance"); });
    field("stability_tolerance", [&](const json& v) { c.stability_tolerance = number(v, "stability_tolerance"); });
    field("window", [&](const json& v) {
        if (!v.is_object())
            throw input_error("must be an object");
        const auto policy = v.value("policy", std::string("fraction"));
        if (policy == "fraction") {
            if (v.contains("lo"))
                c.window.lo_fraction = number(v["lo"], "window.lo");
            if (v.contains("hi"))
                c.window.hi_fraction = number(v["hi"], "window.hi");
        } else if (policy == "explicit") {
            c.window.explicit_window = FitWindow{count(v.at("n_lo"), "window.n_lo"), count(v.at("n_hi"), "window.n_hi")};
        } else {
            throw input_error("window.policy must be fraction or explicit");
        }
    });
    field("output_dir", [&](const json& v) { c.output_dir = v.get<std::string>(); });
    field("cache_dir", [&](const json& v) { c.cache_dir = v.get<std::string>(); });
    field("budget", [&](const json& v) {
        if (v.contains("max_dense_n"))
            c.budget.max_dense_n = count(v["max_dense_n"], "budget.max_dense_n");
        if (v.contains("max_memory_mb"))
            c.budget.max_bytes = count(v["max_memory_mb"], "budget.max_memory_mb") << 20;
    });

    for (auto& msg : validation_errors(c)) {
        if (msg == "gamma must be > 0" && !gamma_ok)
            continue;  // already reported while parsing
        if (std::find(errors.begin(), errors.end(), msg) == errors.end())
            errors.push_back(msg);
    }
    if (!errors.empty())
        throw config_error(std::move(errors));
    return c;
}

inline ExperimentConfig load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw config_error({"cannot open config file " + path});
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace bergspec
