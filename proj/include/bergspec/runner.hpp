#pragma once

// Experiment orchestration: spectrum cache, persistence of spectra, reports and
// plot data, and the run manifest.
//
// Output layout under output_dir:
//   manifest.json
//   report.json
//   spectra/<name>.csv (+ .json sidecar)     index,value
//   plot/<name>.dat    (+ .json sidecar)     two whitespace-separated columns
//   counterexamples/                         property-suite failures, if any

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <cblas.h>
#include <lapacke.h>

#include "asymptotics.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "operator.hpp"
#include "properties.hpp"
#include "spectra.hpp"

#ifndef BERGSPEC_VERSION
#define BERGSPEC_VERSION "dev"
#endif

namespace bergspec {

inline constexpr const char* version = BERGSPEC_VERSION;

// ---- file helpers ----------------------------------------------------------

/// Write to a unique temporary file in the same directory, then rename over
/// the target, so concurrent readers never observe a partial file.
inline void atomic_write(const std::filesystem::path& target, const std::string& content)
{
    static std::atomic<unsigned long> counter{0};
    std::filesystem::create_directories(target.parent_path());
    const auto tmp = target.string() + ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out)
            throw input_error("cannot write " + tmp);
        out << content;
        if (!out)
            throw input_error("write failed for " + tmp);
    }
    std::filesystem::rename(tmp, target);
}

inline std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    if (!in)
        throw input_error("cannot read " + p.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string format_double(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV with header "index,value"; values printed with round-trip precision.
inline std::string spectrum_csv(const Spectrum& s)
{
    std::string out = "index,value\n";
    for (std::size_t i = 0; i < s.values.size(); ++i)
        out += std::to_string(i) + "," + format_double(s.values[i]) + "\n";
    return out;
}

inline std::vector<double> parse_spectrum_csv(const std::string& text)
{
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "index,value")
        throw input_error("spectrum CSV: missing header");
    std::vector<double> values;
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || std::stoull(line.substr(0, comma)) != values.size())
            throw input_error("spectrum CSV: malformed row " + std::to_string(values.size()));
        values.push_back(std::stod(line.substr(comma + 1)));
    }
    return values;
}

inline json spectrum_sidecar(const Spectrum& s, const std::string& source_hash)
{
    return {{"N", s.n},
            {"kind", s.kind == SpectrumKind::singular ? "singular" : "eigen"},
            {"source_hash", source_hash},
            {"solver_id", s.solver_id},
            {"source", s.source},
            {"count", s.values.size()},
            {"noise_floor", s.noise_floor()},
            {"version", version}};
}

// ---- spectrum cache --------------------------------------------------------

/// Content-addressed store of spectra keyed by the hash of the full build step
/// (operator, symbol, gamma, N, quantity, solver id, library version).
class SpectrumCache {
public:
    explicit SpectrumCache(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& directory() const { return dir_; }

    std::optional<Spectrum> load(const std::string& hash, const std::string& solver_id) const
    {
        const auto side = dir_ / (hash + ".json");
        const auto csv = dir_ / (hash + ".csv");
        std::error_code ec;
        if (!std::filesystem::exists(side, ec) || !std::filesystem::exists(csv, ec))
            return std::nullopt;
        try {
            const auto meta = json::parse(read_file(side));
            if (meta.at("source_hash") != hash || meta.at("solver_id") != solver_id || meta.at("version") != version)
                return std::nullopt;
            Spectrum s;
            s.values = parse_spectrum_csv(read_file(csv));
            if (s.values.size() != meta.at("count").get<std::size_t>())
                return std::nullopt;
            s.n = meta.at("N").get<std::size_t>();
            s.kind = meta.at("kind") == "eigen" ? SpectrumKind::eigen : SpectrumKind::singular;
            s.source = meta.at("source").get<std::string>();
            s.solver_id = solver_id;
            return s;
        } catch (const std::exception&) {
            return std::nullopt;  // unreadable entries are recomputed
        }
    }

    void store(const std::string& hash, const Spectrum& s) const
    {
        // CSV first: a sidecar is only ever visible next to a complete CSV.
        atomic_write(dir_ / (hash + ".csv"), spectrum_csv(s));
        atomic_write(dir_ / (hash + ".json"), spectrum_sidecar(s, hash).dump(2) + "\n");
    }

private:
    std::filesystem::path dir_;
};

// ---- report serialization --------------------------------------------------

inline json to_json(const TheoremPrediction& p)
{
    return {{"gamma", p.gamma},
            {"kappa_gamma", p.kappa_gamma},
            {"constant", p.constant},
            {"integral", p.integral},
            {"variant", to_string(p.variant)}};
}

inline json to_json(const AsymptoticsReport& r)
{
    json j;
    j["N"] = r.truncation;
    j["gamma"] = r.gamma;
    j["kappa_gamma"] = r.kappa_gamma;
    j["variant"] = r.variant;
    j["predicted_C"] = r.predicted_c;
    j["fitted_C"] = r.fitted_c;
    j["fitted_gamma"] = r.fitted_gamma;
    j["window"] = json::array({r.window.lo, r.window.hi});
    j["n_max_stable"] = r.n_max_stable;
    j["relative_deviation"] = r.relative_deviation;
    j["tolerance"] = r.tolerance;
    j["residual_spread"] = r.residual_spread;
    j["pass"] = r.pass;
    j["failure_reason"] = r.failure_reason;
    j["solver_id"] = r.solver_id;
    j["timings"] = r.timings;
    return j;
}

inline json to_json(const OrthogonalityReport& r)
{
    json j;
    j["N"] = r.truncation;
    j["gamma"] = r.gamma;
    j["zero_product"] = r.zero_product;
    j["n_max_stable"] = r.n_max_stable;
    j["resolved"] = r.resolved;
    j["window"] = json::array({r.window.lo, r.window.hi});
    j["decay_exponent"] = r.decay_exponent;
    j["decay_exponent_display"] = (r.exponent_is_lower_bound ? ">= " : "") + format_double(r.decay_exponent);
    j["exponent_is_lower_bound"] = r.exponent_is_lower_bound;
    j["trend_window"] = json::array({r.trend_window.lo, r.trend_window.hi});
    j["trend"] = r.trend;
    j["trend_decreasing"] = r.trend_decreasing;
    j["solver_id"] = r.spectrum.solver_id;
    return j;
}

inline json to_json(const AdditivityRow& r)
{
    return {{"s", r.s},
            {"n_sum_operator", r.count_sum_operator},
            {"n_direct_sum", r.count_direct_sum},
            {"ratio", r.ratio},
            {"scaled_single_arc", r.scaled_single_arc}};
}

inline json to_json(const AdditivityReport& r)
{
    json j;
    j["N"] = r.truncation;
    j["gamma"] = r.gamma;
    j["arcs"] = r.arcs;
    j["predicted_single_arc"] = r.predicted_single_arc;
    j["smallest_stable_s"] = r.smallest_stable_s;
    j["at_smallest"] = to_json(r.at_smallest);
    j["single_arc_deviation"] = r.single_arc_deviation;
    j["ratio_deviation"] = r.ratio_deviation;
    j["rows"] = json::array();
    for (const auto& row : r.rows)
        j["rows"].push_back(to_json(row));
    return j;
}

// ---- manifest --------------------------------------------------------------

struct RunStep {
    std::string name;
    std::string status;  // "ok", "cache-hit", "failed", "error"
    std::string message;
    double seconds = 0.0;
};

struct RunManifest {
    std::string config_hash;
    std::string kind;
    json versions;
    std::vector<RunStep> steps;
    std::vector<std::string> files;
    std::map<std::string, double> timings;
    /// Empty for kinds without pass/fail (spectrum-only).
    std::optional<bool> pass;
    bool error = false;

    std::size_t cache_hits() const
    {
        return static_cast<std::size_t>(
            std::count_if(steps.begin(), steps.end(), [](const RunStep& s) { return s.status == "cache-hit"; }));
    }

    int exit_status() const { return error || (pass && !*pass) ? 1 : 0; }

    json to_json() const
    {
        json j;
        j["config_hash"] = config_hash;
        j["kind"] = kind;
        j["versions"] = versions;
        j["steps"] = json::array();
        for (const auto& s : steps)
            j["steps"].push_back({{"name", s.name}, {"status", s.status}, {"message", s.message}, {"seconds", s.seconds}});
        j["files"] = files;
        j["cache_hits"] = cache_hits();
        j["timings"] = timings;
        j["pass"] = pass ? json(*pass) : json(nullptr);
        j["exit_status"] = exit_status();
        return j;
    }
};

inline json library_versions()
{
    int major = 0, minor = 0, patch = 0;
    LAPACKE_ilaver(&major, &minor, &patch);
    json solvers = json::array({solver_ids::banded, solver_ids::dense_svd, solver_ids::dense_hermitian_abs,
                                solver_ids::hermitian_dense, solver_ids::hermitian_banded});
    return {{"bergspec", version},
            {"lapack", std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch)},
            {"openblas", openblas_get_config()},
            {"solvers", solvers}};
}

namespace detail {

using steady = std::chrono::steady_clock;

/// Solver the dispatch in singular_values / hermitian_eigenvalues will pick.
inline const char* planned_solver(bool banded, bool hermitian, bool eigen)
{
    if (eigen)
        return banded ? solver_ids::hermitian_banded : solver_ids::hermitian_dense;
    if (banded)
        return solver_ids::banded;
    return hermitian ? solver_ids::dense_hermitian_abs : solver_ids::dense_svd;
}

class Runner {
public:
    explicit Runner(const ExperimentConfig& c)
        : cfg_(c), out_(c.output_dir), cache_(c.cache_dir), hash_(c.hash())
    {
        manifest_.config_hash = hash_;
        manifest_.kind = to_string(c.kind);
        manifest_.versions = library_versions();
    }

    RunManifest run()
    {
        const auto t0 = steady::now();
        std::filesystem::create_directories(out_);
        json report;
        report["experiment"] = to_string(cfg_.kind);
        report["config_hash"] = hash_;
        report["config"] = cfg_.to_json();
        report["config"].erase("output_dir");
        report["config"].erase("cache_dir");
        try {
            switch (cfg_.kind) {
            case ExperimentKind::theorem1:
            case ExperimentKind::theorem2: run_theorem(report); break;
            case ExperimentKind::orthogonality: run_orthogonality(report); break;
            case ExperimentKind::additivity: run_additivity(report); break;
            case ExperimentKind::spectrum_only: run_spectrum_only(report); break;
            case ExperimentKind::property_suite: run_properties(report); break;
            }
        } catch (const std::exception& e) {
            manifest_.error = true;
            manifest_.steps.push_back({"experiment", "error", e.what(), 0.0});
            report["error"] = e.what();
            if (cfg_.kind != ExperimentKind::spectrum_only)
                manifest_.pass = false;
        }
        if (manifest_.pass)
            report["pass"] = *manifest_.pass;
        write_file("report.json", report.dump(2) + "\n", false);
        manifest_.timings["total"] = std::chrono::duration<double>(steady::now() - t0).count();
        manifest_.files.push_back((out_ / "manifest.json").string());
        atomic_write(out_ / "manifest.json", manifest_.to_json().dump(2) + "\n");
        return manifest_;
    }

private:
    const ExperimentConfig& cfg_;
    std::filesystem::path out_;
    SpectrumCache cache_;
    std::string hash_;
    RunManifest manifest_;
    std::map<std::string, Spectrum> memo_;

    void write_file(const std::string& rel, const std::string& content, bool sidecar, json meta = json::object())
    {
        const auto path = out_ / rel;
        atomic_write(path, content);
        manifest_.files.push_back(path.string());
        if (sidecar) {
            meta["config_hash"] = hash_;
            meta["file"] = std::filesystem::path(rel).filename().string();
            const auto side = path.string() + ".json";
            atomic_write(side, meta.dump(2) + "\n");
            manifest_.files.push_back(side);
        }
    }

    BergmanSymbol bergman() const { return BergmanSymbol{cfg_.gamma, *cfg_.symbol, cfg_.perturbation}; }

    bool uses_banded_operator() const
    {
        return cfg_.kind == ExperimentKind::theorem2 ||
               (cfg_.kind == ExperimentKind::spectrum_only && cfg_.operator_kind == "banded");
    }

    /// Full spectrum (singular, or signed eigenvalues) of the configured operator at size n, via the cache.
    Spectrum spectrum(std::size_t n, bool eigen)
    {
        const bool banded_op = uses_banded_operator();
        const bool banded_storage = banded_op || cfg_.symbol->is_trig_poly();
        const bool hermitian = cfg_.symbol->is_real();
        const char* solver = planned_solver(banded_storage, hermitian, eigen);
        json key;
        key["operator"] = banded_op ? "banded" : "toeplitz";
        key["symbol"] = symbol_to_json(*cfg_.symbol);
        key["gamma"] = cfg_.gamma;
        if (cfg_.perturbation && !banded_op)
            key["perturbation"] = {{"epsilon", cfg_.perturbation->epsilon},
                                   {"inner_radius", cfg_.perturbation->inner_radius}};
        key["N"] = n;
        key["quantity"] = eigen ? "eigen" : "singular";
        key["solver"] = solver;
        key["version"] = version;
        const auto source_hash = hash_hex(canonical(key));
        const std::string step = std::string(eigen ? "eigenvalues" : "singular values") + " N=" + std::to_string(n);

        if (auto it = memo_.find(source_hash); it != memo_.end())
            return it->second;
        const auto t0 = steady::now();
        if (auto hit = cache_.load(source_hash, solver)) {
            memo_.emplace(source_hash, *hit);
            manifest_.steps.push_back({step, "cache-hit", source_hash, std::chrono::duration<double>(steady::now() - t0).count()});
            emit_spectrum(*hit, source_hash);
            return *hit;
        }
        if (!banded_storage && n > cfg_.budget.max_dense_n)
            throw capacity_error("dense truncation N=" + std::to_string(n) + " exceeds budget.max_dense_n=" +
                                 std::to_string(cfg_.budget.max_dense_n));
        BuildOptions opts;
        opts.max_bytes = cfg_.budget.max_bytes;
        const auto a = banded_op ? build_banded(cfg_.symbol->trig_poly(), cfg_.gamma, n, {}, opts).matrix
                                 : build_bergman_toeplitz(bergman(), n, opts);
        auto s = eigen ? hermitian_eigenvalues(a) : singular_values(a);
        if (s.solver_id != solver)
            throw solver_error("solver dispatch mismatch: planned " + std::string(solver) + ", used " + s.solver_id);
        cache_.store(source_hash, s);
        memo_.emplace(source_hash, s);
        manifest_.steps.push_back({step, "ok", source_hash, std::chrono::duration<double>(steady::now() - t0).count()});
        emit_spectrum(s, source_hash);
        return s;
    }

    void emit_spectrum(const Spectrum& s, const std::string& source_hash, const std::string& tag = "spectrum")
    {
        const std::string name = tag + "_N" + std::to_string(s.n) + (s.kind == SpectrumKind::eigen ? "_eigen" : "");
        const auto rel = "spectra/" + name + ".csv";
        for (const auto& f : manifest_.files)
            if (f == (out_ / rel).string())
                return;
        write_file(rel, spectrum_csv(s), true, spectrum_sidecar(s, source_hash));
    }

    /// n vs s_n n^gamma and s vs s^{1/gamma} n(s), over the resolved values.
    void emit_plots(const Spectrum& s, const std::string& name)
    {
        const std::size_t resolved = s.resolved_count();
        std::string scaled = "# n s_n*n^gamma\n";
        std::string counting = "# s s^(1/gamma)*n(s)\n";
        for (std::size_t k = 1; k < resolved; ++k)
            scaled += std::to_string(k) + " " + format_double(s.values[k] * std::pow(static_cast<double>(k), cfg_.gamma)) + "\n";
        for (std::size_t k = 0; k < resolved; ++k) {
            const double v = s.values[k];
            counting += format_double(v) + " " +
                        format_double(std::pow(v, 1.0 / cfg_.gamma) * static_cast<double>(counting_function(s, v))) + "\n";
        }
        write_file("plot/" + name + "_scaled.dat", scaled, true, {{"columns", {"n", "s_n*n^gamma"}}});
        write_file("plot/" + name + "_counting.dat", counting, true, {{"columns", {"s", "s^(1/gamma)*n(s)"}}});
    }

    VerificationOptions verification_options() const
    {
        VerificationOptions o;
        o.tolerance = cfg_.tolerance;
        o.stability_tolerance = cfg_.stability_tolerance;
        o.window_lo_fraction = cfg_.window.lo_fraction;
        o.window_hi_fraction = cfg_.window.hi_fraction;
        o.window = cfg_.window.explicit_window;
        o.budget = cfg_.budget;
        return o;
    }

    void run_theorem(json& report)
    {
        TheoremPrediction pred;
        bool eigen = false;
        EigenPart part = EigenPart::positive;
        if (cfg_.kind == ExperimentKind::theorem2) {
            pred = predicted_constant_banded(cfg_.symbol->trig_poly(), cfg_.gamma);
        } else if (cfg_.variant == PredictionVariant::toeplitz) {
            pred = predicted_constant(bergman());
        } else if (cfg_.variant == PredictionVariant::toeplitz_positive_part) {
            pred = predicted_constant(bergman(), PowerMode::positive_part);
            eigen = true;
        } else {
            pred = predicted_constant_negative_part(bergman());
            eigen = true;
            part = EigenPart::negative;
        }
        report["prediction"] = to_json(pred);
        report["results"] = json::array();
        bool all = true;
        std::vector<double> deviations;
        for (std::size_t n : cfg_.sizes) {
            AsymptoticsReport r;
            try {
                r = run_verification([&](std::size_t m) { return eigen ? spectrum(m, true).part(part) : spectrum(m, false); },
                                     pred, n, verification_options());
            } catch (const std::exception& e) {
                manifest_.steps.push_back({"verification N=" + std::to_string(n), "error", e.what(), 0.0});
                manifest_.error = true;
                all = false;
                report["results"].push_back({{"N", n}, {"pass", false}, {"failure_reason", e.what()}});
                continue;
            }
            emit_plots(eigen ? spectrum(n, true).part(part) : spectrum(n, false), "N" + std::to_string(n));
            manifest_.steps.push_back({"verification N=" + std::to_string(n), r.pass ? "ok" : "failed",
                                       r.failure_reason, r.timings["spectra"] + r.timings["fit"]});
            all = all && r.pass;
            deviations.push_back(r.relative_deviation);
            report["results"].push_back(to_json(r));
        }
        // Deviation should not grow with N (consistent with an o(n^-gamma) remainder).
        bool trend = true;
        for (std::size_t i = 1; i < deviations.size(); ++i)
            trend = trend && deviations[i] <= deviations[i - 1];
        report["deviation_nonincreasing"] = trend;
        manifest_.pass = all && trend;
    }

    void run_orthogonality(json& report)
    {
        report["results"] = json::array();
        bool all = true;
        OrthogonalityOptions o;
        o.stability_tolerance = cfg_.stability_tolerance;
        o.budget = cfg_.budget;
        for (std::size_t n : cfg_.sizes) {
            const auto t0 = steady::now();
            const auto r = orthogonality_experiment(cfg_.pair[0], cfg_.pair[1], cfg_.gamma, n, o);
            auto j = to_json(r);
            bool pass = r.zero_product || r.trend_decreasing;
            if (cfg_.min_decay_exponent && !r.zero_product)
                pass = pass && r.decay_exponent >= *cfg_.min_decay_exponent;
            j["pass"] = pass;
            all = all && pass;
            report["results"].push_back(j);
            emit_spectrum(r.spectrum, hash_hex(hash_ + std::to_string(n)), "product");
            std::string trend = "# n s_n*n^(2gamma)\n";
            for (std::size_t k = 1; k < r.spectrum.resolved_count(); ++k)
                trend += std::to_string(k) + " " +
                         format_double(r.spectrum.values[k] * std::pow(static_cast<double>(k), 2.0 * cfg_.gamma)) + "\n";
            write_file("plot/product_N" + std::to_string(n) + "_trend.dat", trend, true,
                       {{"columns", {"n", "s_n*n^(2gamma)"}}});
            manifest_.steps.push_back({"orthogonality N=" + std::to_string(n), pass ? "ok" : "failed", "",
                                       std::chrono::duration<double>(steady::now() - t0).count()});
        }
        manifest_.pass = all;
    }

    void run_additivity(json& report)
    {
        report["results"] = json::array();
        bool all = true;
        AdditivityOptions o;
        o.stability_tolerance = cfg_.stability_tolerance;
        o.s_grid = cfg_.s_grid;
        o.grid_points = cfg_.grid_points;
        o.offset = cfg_.arc_offset;
        o.budget = cfg_.budget;
        for (std::size_t n : cfg_.sizes) {
            const auto t0 = steady::now();
            const auto r = additivity_experiment(cfg_.arc_coefficients, cfg_.gamma, n, o);
            auto j = to_json(r);
            const bool pass = r.single_arc_deviation <= cfg_.tolerance && r.ratio_deviation <= cfg_.tolerance;
            j["pass"] = pass;
            all = all && pass;
            report["results"].push_back(j);
            std::string ratio = "# s n(s;T(g))/sum_l n(s;c_l T(1_l))\n";
            std::string single = "# s s^(1/gamma)*n(s;T(1_delta))\n";
            for (const auto& row : r.rows) {
                ratio += format_double(row.s) + " " + format_double(row.ratio) + "\n";
                single += format_double(row.s) + " " + format_double(row.scaled_single_arc) + "\n";
            }
            write_file("plot/additivity_N" + std::to_string(n) + "_ratio.dat", ratio, true, {{"columns", {"s", "ratio"}}});
            write_file("plot/additivity_N" + std::to_string(n) + "_single.dat", single, true,
                       {{"columns", {"s", "s^(1/gamma)*n(s)"}}});
            manifest_.steps.push_back({"additivity N=" + std::to_string(n), pass ? "ok" : "failed", "",
                                       std::chrono::duration<double>(steady::now() - t0).count()});
        }
        manifest_.pass = all;
    }

    void run_spectrum_only(json& report)
    {
        report["results"] = json::array();
        const bool eigen = cfg_.quantity == "eigen";
        for (std::size_t n : cfg_.sizes) {
            const auto s = spectrum(n, eigen);
            if (eigen) {
                emit_plots(s.part(EigenPart::positive), "N" + std::to_string(n) + "_positive");
                emit_plots(s.part(EigenPart::negative), "N" + std::to_string(n) + "_negative");
            } else {
                emit_plots(s, "N" + std::to_string(n));
            }
            report["results"].push_back({{"N", n},
                                         {"solver_id", s.solver_id},
                                         {"count", s.values.size()},
                                         {"resolved", s.resolved_count()},
                                         {"noise_floor", s.noise_floor()}});
        }
    }

    void run_properties(json& report)
    {
        PropertySuiteOptions o;
        o.pairs_per_size = cfg_.pairs_per_size;
        o.grid_points = cfg_.inequality_grid_points;
        o.counterexample_dir = (out_ / "counterexamples").string();
        const auto t0 = steady::now();
        const auto r = property_suite(cfg_.seed, cfg_.sizes, o);
        report["properties"] = r.to_json();
        manifest_.steps.push_back({"property suite", r.pass() ? "ok" : "failed", "",
                                   std::chrono::duration<double>(steady::now() - t0).count()});
        manifest_.pass = r.pass();
    }
};

}  // namespace detail

/// Execute a validated config; never throws for experiment failures, which are
/// recorded in the manifest (exit_status() != 0).
inline RunManifest run(const ExperimentConfig& config)
{
    if (auto errs = validation_errors(config); !errs.empty())
        throw config_error(std::move(errs));
    return detail::Runner(config).run();
}

}  // namespace bergspec
