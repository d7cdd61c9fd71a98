#include "dalbench/cli.hpp"

#include <algorithm>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dalbench/config.hpp"
#include "dalbench/report.hpp"

namespace dalbench {

namespace {

/// An input problem that maps to the usage exit code.
struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CommonOptions {
    std::string config;
    std::string out;
    std::string seeds;
    std::vector<std::string> strategies;
    std::optional<int> cycles;
    std::optional<double> fraction;
};

void add_common(CLI::App* cmd, CommonOptions& o) {
    cmd->add_option("--config", o.config, "benchmark config file")->required();
    cmd->add_option("--out", o.out, "output directory (overrides [output] dir)");
    cmd->add_option("--seeds", o.seeds, "comma-separated seed list");
    cmd->add_option("--strategy", o.strategies, "strategy name; repeatable, replaces the config list");
    cmd->add_option("--cycles", o.cycles, "number of cycles");
    cmd->add_option("--fraction", o.fraction, "budget fraction per cycle");
}

Overrides to_overrides(const CommonOptions& o) {
    Overrides ov;
    try {
        if (!o.seeds.empty()) ov.seeds = parse_seed_list(o.seeds);
    } catch (const ConfigError& e) {
        throw UsageFailure(fmt::format("--seeds: {}", e.what()));
    }
    ov.strategies = o.strategies;
    ov.cycles = o.cycles;
    ov.fraction = o.fraction;
    if (!o.out.empty()) ov.out_dir = o.out;
    return ov;
}

struct Prepared {
    BenchmarkPlan plan;
    std::vector<RunConfig> configs;
    TrainTest data;
    nlohmann::json provenance;
};

Prepared prepare(const CommonOptions& opts, RunMode mode) {
    const Overrides ov = to_overrides(opts);
    BenchmarkPlan plan;
    try {
        plan = load_config(opts.config);
        apply_overrides(plan, ov);
    } catch (const ConfigError& e) {
        throw UsageFailure(e.what());
    }
    if (plan.strategies.empty()) {
        throw UsageFailure("no strategies: add a [strategy] section or pass --strategy");
    }
    std::vector<RunConfig> configs;
    for (const StrategyConfig& s : plan.strategies) {
        RunConfig cfg = config_for(plan, s);
        cfg.mode = mode;
        try {
            cfg.validate();
        } catch (const std::exception& e) {
            throw UsageFailure(fmt::format("invalid configuration: {}", e.what()));
        }
        configs.push_back(std::move(cfg));
    }
    std::optional<TrainTest> data;
    try {
        data = resolve_data(plan.base.data);
    } catch (const ParseError& e) {
        throw UsageFailure(e.what());
    } catch (const ValidationError& e) {
        throw UsageFailure(fmt::format("dataset: {}", e.what()));
    }
    nlohmann::json provenance{{"config_file", opts.config}, {"overrides", ov.to_json()}};
    return {std::move(plan), std::move(configs), std::move(*data), std::move(provenance)};
}

int execute(const CommonOptions& opts, RunMode mode, std::ostream& out) {
    Prepared p = prepare(opts, mode);
    std::vector<SuiteResult> suites;
    for (const RunConfig& cfg : p.configs) {
        suites.push_back(run_suite(cfg, p.data));
        const SuiteResult& s = suites.back();
        const Curve curve = s.curve();
        out << fmt::format("{:<15} final {}={:.4f}", to_string(cfg.strategy.name), to_string(cfg.metric),
                           s.mean_curve.back());
        if (curve.points.size() >= 2) out << fmt::format("  aubc={:.4f}", aubc(curve));
        if (s.mean_oracle_metric) out << fmt::format("  oracle={:.4f}", *s.mean_oracle_metric);
        out << '\n';
    }
    const ResultFiles files = write_results(suites, p.plan.out_dir, p.provenance);
    out << "results written to " << p.plan.out_dir.string() << '\n';
    (void)files;
    return kExitOk;
}

int cmd_plot(const std::string& results, const std::string& out_path, std::ostream& out) {
    const std::filesystem::path dir(results);
    CurveTable table;
    try {
        table = read_curves_csv(dir / "curves.csv");
    } catch (const ParseError& e) {
        throw UsageFailure(e.what());
    }
    const std::filesystem::path target = out_path.empty() ? dir / "curves.svg" : std::filesystem::path(out_path);
    render_curves(table.curves, target, table.metric);
    out << "plot written to " << target.string() << '\n';
    return kExitOk;
}

int cmd_gen_dataset(const std::string& config, const std::string& out_path, std::ostream& out) {
    BenchmarkPlan plan;
    try {
        plan = load_config(config);
    } catch (const ConfigError& e) {
        throw UsageFailure(e.what());
    }
    if (!plan.mixture) throw UsageFailure("gen-dataset needs a mixture [dataset] section");
    const auto& gen = std::get<GeneratedSource>(plan.base.data);
    Dataset ds = generate_mixture(*plan.mixture);
    if (gen.noise_rate > 0.0) ds = inject_label_noise(ds, gen.noise_rate, gen.noise_seed);
    save_table(ds, out_path);
    out << fmt::format("wrote {} samples ({} features, {} classes) to {}\n", ds.size(), ds.dims(),
                       ds.class_count(), out_path);
    return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Pool-based active learning query-strategy benchmark", "dalbench"};
    app.require_subcommand(1);

    CommonOptions run_opts, verify_opts;
    auto* run = app.add_subcommand("run", "run every configured strategy and write results");
    add_common(run, run_opts);
    auto* verify = app.add_subcommand("verify", "query with a fully trained oracle model");
    add_common(verify, verify_opts);

    std::string plot_dir, plot_out;
    auto* plot = app.add_subcommand("plot", "render curves.csv from a results directory");
    plot->add_option("results", plot_dir, "results directory")->required();
    plot->add_option("--out", plot_out, "SVG path (default <results>/curves.svg)");

    std::string gen_config, gen_out;
    auto* gen = app.add_subcommand("gen-dataset", "write the configured mixture as a tabular file");
    gen->add_option("--config", gen_config, "config with a mixture [dataset] section")->required();
    gen->add_option("--out", gen_out, "output file")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(std::move(reversed));
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        if (run->parsed()) return execute(run_opts, RunMode::Standard, out);
        if (verify->parsed()) return execute(verify_opts, RunMode::Verification, out);
        if (plot->parsed()) return cmd_plot(plot_dir, plot_out, out);
        if (gen->parsed()) return cmd_gen_dataset(gen_config, gen_out, out);
    } catch (const UsageFailure& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "runtime failure: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitUsage;
}

}  // namespace dalbench
