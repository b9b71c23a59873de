// Command-line front end: validate, run, predict and property checks.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include <bergspec/config.hpp>
#include <bergspec/runner.hpp>

namespace {

using namespace bergspec;

struct Overrides {
    std::string output;
    std::string cache;
    std::size_t budget = 0;
    std::optional<std::uint64_t> seed;
};

void add_overrides(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--output", o.output, "Override the output directory");
    cmd->add_option("--cache", o.cache, "Override the spectrum cache directory");
    cmd->add_option("--budget", o.budget, "Override the maximum dense truncation size");
    cmd->add_option("--seed", o.seed, "Override the property-suite seed");
}

ExperimentConfig configured(const std::string& path, const Overrides& o)
{
    auto c = load_config(path);
    if (!o.output.empty())
        c.output_dir = o.output;
    if (!o.cache.empty())
        c.cache_dir = o.cache;
    if (o.budget > 0)
        c.budget.max_dense_n = o.budget;
    if (o.seed)
        c.seed = *o.seed;
    if (auto errs = validation_errors(c); !errs.empty())
        throw config_error(std::move(errs));
    return c;
}

int print_prediction(const ExperimentConfig& c)
{
    json out = json::array();
    const auto gamma = c.gamma;
    switch (c.kind) {
    case ExperimentKind::theorem1:
    case ExperimentKind::spectrum_only: {
        const BergmanSymbol s{gamma, *c.symbol, c.perturbation};
        if (c.variant == PredictionVariant::toeplitz_negative_part)
            out.push_back(to_json(predicted_constant_negative_part(s)));
        else
            out.push_back(to_json(predicted_constant(
                s, c.variant == PredictionVariant::toeplitz_positive_part ? PowerMode::positive_part : PowerMode::abs)));
        break;
    }
    case ExperimentKind::theorem2:
        out.push_back(to_json(predicted_constant_banded(c.symbol->trig_poly(), gamma)));
        break;
    case ExperimentKind::additivity:
        out.push_back({{"gamma", gamma},
                       {"kappa_gamma", kappa(gamma)},
                       {"single_arc_limit", kappa(gamma) / static_cast<double>(c.arc_coefficients.size())}});
        break;
    case ExperimentKind::orthogonality:
        for (const auto& s : c.pair)
            out.push_back(to_json(predicted_constant(BergmanSymbol{gamma, s, std::nullopt})));
        break;
    case ExperimentKind::property_suite:
        std::cerr << "property-suite configs carry no prediction\n";
        return 2;
    }
    std::cout << (out.size() == 1 ? out[0] : out).dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Spectral asymptotics of Bergman-space Toeplitz operators and power-decaying band matrices"};
    app.set_version_flag("--version", std::string(bergspec::version));
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    auto* validate = app.add_subcommand("validate", "Check a config file and list every problem found");
    validate->add_option("config", config_path, "Experiment config (JSON)")->required();
    add_overrides(validate, overrides);

    auto* run = app.add_subcommand("run", "Run an experiment; exit status 0 iff every pass flag is true");
    run->add_option("config", config_path, "Experiment config (JSON)")->required();
    add_overrides(run, overrides);

    auto* predict = app.add_subcommand("predict", "Print the predicted constants without building any matrix");
    predict->add_option("config", config_path, "Experiment config (JSON)")->required();

    std::uint64_t seed = 0;
    std::vector<std::size_t> sizes{20, 50};
    std::size_t pairs = 10;
    std::string counterexamples;
    auto* props = app.add_subcommand("props", "Run the seeded property suite");
    props->add_option("--seed", seed, "Random seed")->required();
    props->add_option("--sizes", sizes, "Matrix sizes")->expected(0, -1);
    props->add_option("--pairs", pairs, "Random pairs per size");
    props->add_option("--counterexamples", counterexamples, "Directory for failing inputs");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate) {
            const auto c = configured(config_path, overrides);
            std::cout << "valid: " << to_string(c.kind) << " config, hash " << c.hash() << "\n";
            return 0;
        }
        if (*predict)
            return print_prediction(load_config(config_path));
        if (*run) {
            const auto c = configured(config_path, overrides);
            const auto m = bergspec::run(c);
            for (const auto& s : m.steps)
                std::cout << s.status << "\t" << s.name << (s.message.empty() ? "" : "\t" + s.message) << "\n";
            std::cout << "manifest: " << (std::filesystem::path(c.output_dir) / "manifest.json").string() << "\n";
            if (m.pass)
                std::cout << (*m.pass ? "PASS" : "FAIL") << "\n";
            return m.exit_status();
        }
        if (*props) {
            PropertySuiteOptions o;
            o.pairs_per_size = pairs;
            if (!counterexamples.empty())
                o.counterexample_dir = counterexamples;
            const auto r = property_suite(seed, sizes, o);
            for (const auto& p : r.results)
                std::cout << (p.pass() ? "PASS" : "FAIL") << "\t" << p.name << "\t" << p.trials << " trials, " << p.checks
                          << " checks\n";
            for (const auto& p : r.results)
                for (const auto& c : p.counterexamples)
                    std::cout << "counterexample (" << p.name << "): " << c.dump() << "\n";
            return r.pass() ? 0 : 1;
        }
    } catch (const bergspec::config_error& e) {
        for (const auto& msg : e.errors())
            std::cerr << "error: " << msg << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
