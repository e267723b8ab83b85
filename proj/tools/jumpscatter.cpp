#include "jumpscatter/pipeline.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using namespace jumpscatter;

namespace {

constexpr const char* kConfigEnv = "JUMPSCATTER_CONFIG";

std::vector<double> parse_list(const std::string& text, const std::string& flag) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ConfigError(flag + ": '" + item + "' is not a number");
        }
    }
    return out;
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& text) {
    const auto colon = text.find(':');
    if (colon == std::string::npos) throw ConfigError("--tail-range expects LO:HI, got '" + text + "'");
    try {
        return {std::stoull(text.substr(0, colon)), std::stoull(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw ConfigError("--tail-range expects LO:HI, got '" + text + "'");
    }
}

// Flag values collected by CLI11, merged over the config file at run time.
struct Overrides {
    std::optional<double> threshold, gumbel_alpha, eps_min, gamma, eps_fixed, noise_sd, spike, t_c, d, jump_size, base_vol;
    std::optional<int> prune_window, scales, spline_order, news_tolerance, binomial_trials;
    std::optional<std::size_t> max_cojump_size, min_quadrant_size, pool_min, n, tickers, days, min_days;
    std::optional<std::uint64_t> seed, max_avalanche_size;
    std::optional<std::string> session, threshold_mode, missing_policy, boundary, pca_features, quantiles_d1, quantiles_d2,
        quantiles_d3, grid_quantiles, tail_range, law, offspring, panel_start;
    bool no_powerlaw{false};
};

Json merged_document(const std::string& config_path, const Overrides& o, const std::string& n_key) {
    Json doc = Json::object();
    if (!config_path.empty()) {
        std::ifstream in(config_path, std::ios::binary);
        if (!in) throw ConfigError("cannot open config " + config_path);
        try {
            doc = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(config_path + ": " + e.what());
        }
        if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    }
    auto put = [&](const char* key, const auto& v) {
        if (v) doc[key] = *v;
    };
    put("threshold", o.threshold);
    put("gumbel_alpha", o.gumbel_alpha);
    put("threshold_mode", o.threshold_mode);
    put("prune_window", o.prune_window);
    put("session", o.session);
    put("min_days", o.min_days);
    put("missing_policy", o.missing_policy);
    put("scales", o.scales);
    put("spline_order", o.spline_order);
    put("boundary", o.boundary);
    put("pca_features", o.pca_features);
    put("news_tolerance", o.news_tolerance);
    put("max_cojump_size", o.max_cojump_size);
    put("min_quadrant_size", o.min_quadrant_size);
    put("pool_min", o.pool_min);
    put("seed", o.seed);
    put("eps_min", o.eps_min);
    put("gamma", o.gamma);
    put("eps_fixed", o.eps_fixed);
    put("branching_law", o.law);
    put("offspring", o.offspring);
    put("binomial_trials", o.binomial_trials);
    put("max_avalanche_size", o.max_avalanche_size);
    put("benchmark_noise_sd", o.noise_sd);
    put("benchmark_spike", o.spike);
    put("benchmark_t_c", o.t_c);
    put("benchmark_d", o.d);
    put("panel_tickers", o.tickers);
    put("panel_days", o.days);
    put("panel_start", o.panel_start);
    put("panel_jump_size", o.jump_size);
    put("panel_base_vol", o.base_vol);
    if (o.n && !n_key.empty()) doc[n_key] = *o.n;
    if (o.quantiles_d1) doc["quantiles_d1"] = parse_list(*o.quantiles_d1, "--quantiles-d1");
    if (o.quantiles_d2) doc["quantiles_d2"] = parse_list(*o.quantiles_d2, "--quantiles-d2");
    if (o.quantiles_d3) doc["quantiles_d3"] = parse_list(*o.quantiles_d3, "--quantiles-d3");
    if (o.grid_quantiles) doc["grid_quantiles"] = parse_list(*o.grid_quantiles, "--grid-quantiles");
    if (o.tail_range) {
        const auto [lo, hi] = parse_range(*o.tail_range);
        doc["tail_min"] = lo;
        doc["tail_max"] = hi;
    }
    if (o.no_powerlaw) doc["fit_power_law"] = false;
    return doc;
}

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Data: return 3;
        case ErrorKind::Numerical: return 4;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Jump detection, scattering embedding and co-jump analysis for minute-bar return panels"};
    app.require_subcommand(1);

    std::string config_path;
    if (const char* env = std::getenv(kConfigEnv)) config_path = env;
    unsigned threads = std::max(1u, std::thread::hardware_concurrency());
    std::string out_dir = "out";
    bool quiet = false;
    Overrides o;

    app.add_option("--config", config_path, std::string("JSON config file (default: $") + kConfigEnv + ")");
    app.add_option("--threads", threads, "Worker thread bound")->check(CLI::PositiveNumber);
    app.add_flag("--quiet", quiet, "Suppress progress messages");

    auto detect_flags = [&](CLI::App* c) {
        c->add_option("--threshold", o.threshold, "Jump threshold on |x|");
        c->add_option("--threshold-mode", o.threshold_mode, "fixed|gumbel");
        c->add_option("--gumbel-alpha", o.gumbel_alpha, "Family-wise level for the gumbel threshold");
        c->add_option("--prune-window", o.prune_window, "Cluster pruning window (minutes)");
        c->add_option("--session", o.session, "Intraday session HH:MM-HH:MM");
        c->add_option("--min-days", o.min_days, "Minimum active days per ticker");
        c->add_option("--missing-policy", o.missing_policy, "zero-fill|skip");
        c->add_option("--max-cojump-size", o.max_cojump_size, "Largest co-jump kept");
    };
    auto wavelet_flags = [&](CLI::App* c) {
        c->add_option("--scales", o.scales, "Number of dyadic scales J");
        c->add_option("--spline-order", o.spline_order, "Battle-Lemarie spline order");
        c->add_option("--boundary", o.boundary, "zero|circular");
    };
    auto score_flags = [&](CLI::App* c) {
        c->add_option("--quantiles-d1", o.quantiles_d1, "Comma-separated D1 class quantiles");
        c->add_option("--quantiles-d2", o.quantiles_d2, "Comma-separated D2 quantiles");
        c->add_option("--quantiles-d3", o.quantiles_d3, "Comma-separated D3 quantiles");
        c->add_option("--grid-quantiles", o.grid_quantiles, "Comma-separated 2D grid quantiles");
        c->add_option("--pca-features", o.pca_features, "imag-second-order|full");
        c->add_option("--news-tolerance", o.news_tolerance, "News matching tolerance (minutes)");
        c->add_flag("--no-powerlaw", o.no_powerlaw, "Skip the power-law profile fit");
    };
    auto cojump_flags = [&](CLI::App* c) {
        c->add_option("--tail-range", o.tail_range, "Tail fit range LO:HI");
        c->add_option("--min-quadrant-size", o.min_quadrant_size, "Smallest co-jump given a quadrant");
        c->add_option("--pool-min", o.pool_min, "Minimum pooled co-jumps for the size scale");
        c->add_option("--max-cojump-size", o.max_cojump_size, "Largest co-jump kept");
    };
    auto add_out = [&](CLI::App* c) { c->add_option("--out", out_dir, "Artifact directory")->capture_default_str(); };

    std::string panel, news, exclusions, jumps, embedded, scored, sizes, output;

    auto* detect = app.add_subcommand("detect", "Detect jumps and extract windows");
    detect->add_option("--panel", panel, "Returns/price CSV")->required()->check(CLI::ExistingFile);
    detect->add_option("--exclusions", exclusions, "Excluded dates file")->check(CLI::ExistingFile);
    detect_flags(detect);
    add_out(detect);

    auto* embed = app.add_subcommand("embed", "Scattering embedding of jump windows");
    embed->add_option("--jumps", jumps, "jumps.jsonl")->required()->check(CLI::ExistingFile);
    wavelet_flags(embed);
    add_out(embed);

    auto* score = app.add_subcommand("score", "Directions, scores and classes");
    score->add_option("--embedded", embedded, "embedded.jsonl")->required()->check(CLI::ExistingFile);
    score->add_option("--news", news, "News CSV")->check(CLI::ExistingFile);
    wavelet_flags(score);
    score_flags(score);
    add_out(score);

    auto* cojump = app.add_subcommand("cojump", "Co-jump grouping, indicators and size distribution");
    auto* cj_scored = cojump->add_option("--scored", scored, "scored.jsonl")->check(CLI::ExistingFile);
    auto* cj_sizes = cojump->add_option("--sizes", sizes, "Avalanche size CSV (tail fit only)")->check(CLI::ExistingFile);
    cj_scored->excludes(cj_sizes);
    cojump_flags(cojump);
    add_out(cojump);

    auto* synth = app.add_subcommand("synth", "Synthetic data");
    synth->require_subcommand(1);
    auto* bench = synth->add_subcommand("benchmark", "Asymmetry-sweep benchmark windows");
    bench->add_option("--n", o.n, "Number of series");
    bench->add_option("--seed", o.seed, "Seed");
    bench->add_option("--t-c", o.t_c, "Profile time offset");
    bench->add_option("--d", o.d, "Profile regularizer");
    bench->add_option("--noise-sd", o.noise_sd, "Noise standard deviation");
    bench->add_option("--spike", o.spike, "Jump size at t = 0");
    bench->add_option("--output", output, "Output jumps file")->required();
    auto* branch = synth->add_subcommand("branching", "Branching-process avalanche sizes");
    branch->add_option("--law", o.law, "uniform|power|fixed");
    branch->add_option("--eps-min", o.eps_min, "Lower bound of epsilon");
    branch->add_option("--gamma", o.gamma, "Density exponent of the power law");
    branch->add_option("--eps-fixed", o.eps_fixed, "Epsilon of the fixed law");
    branch->add_option("--offspring", o.offspring, "poisson|binomial");
    branch->add_option("--binomial-trials", o.binomial_trials, "Trials per individual (binomial)");
    branch->add_option("--max-size", o.max_avalanche_size, "Avalanche size cap");
    branch->add_option("--n", o.n, "Number of avalanches");
    branch->add_option("--seed", o.seed, "Seed");
    branch->add_option("--tail-range", o.tail_range, "Tail fit range LO:HI");
    branch->add_option("--output", output, "Output size CSV")->required();
    auto* spanel = synth->add_subcommand("panel", "Synthetic return panel with planted jumps and co-jumps");
    spanel->add_option("--tickers", o.tickers, "Tickers");
    spanel->add_option("--days", o.days, "Trading days");
    spanel->add_option("--start", o.panel_start, "First date YYYY-MM-DD");
    spanel->add_option("--jump-size", o.jump_size, "Planted jump size in local volatilities");
    spanel->add_option("--base-vol", o.base_vol, "Base per-minute volatility");
    spanel->add_option("--seed", o.seed, "Seed");
    spanel->add_option("--output", output, "Output panel CSV")->required();

    auto* report = app.add_subcommand("report", "Summarize an artifact directory");
    add_out(report);

    auto* run = app.add_subcommand("run", "All stages, resuming from persisted intermediates");
    bool synthetic = false, benchmark = false;
    auto* run_panel = run->add_option("--panel", panel, "Returns/price CSV")->check(CLI::ExistingFile);
    auto* run_synth = run->add_flag("--synthetic", synthetic, "Use a generated synthetic panel");
    auto* run_bench = run->add_flag("--benchmark", benchmark, "Use the benchmark windows (no detection)");
    run_panel->excludes(run_synth)->excludes(run_bench);
    run_synth->excludes(run_bench);
    run->add_option("--news", news, "News CSV")->check(CLI::ExistingFile);
    run->add_option("--exclusions", exclusions, "Excluded dates file")->check(CLI::ExistingFile);
    run->add_option("--seed", o.seed, "Seed");
    detect_flags(run);
    wavelet_flags(run);
    score_flags(run);
    run->add_option("--tail-range", o.tail_range, "Tail fit range LO:HI");
    run->add_option("--min-quadrant-size", o.min_quadrant_size, "Smallest co-jump given a quadrant");
    run->add_option("--pool-min", o.pool_min, "Minimum pooled co-jumps for the size scale");
    add_out(run);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        std::string n_key;
        if (bench->parsed()) n_key = "benchmark_n";
        if (branch->parsed()) n_key = "n_avalanches";
        const auto cfg = config_from_json(merged_document(config_path, o, n_key));
        std::ostream* log = quiet ? nullptr : &std::cerr;
        auto opt = [](const std::string& s) { return s.empty() ? std::optional<fs::path>{} : std::optional<fs::path>{s}; };

        if (synth->parsed()) {
            const fs::path target(output);
            if (target.has_parent_path()) fs::create_directories(target.parent_path());
            const auto ctx = make_context(target.has_parent_path() ? target.parent_path() : fs::path("."), cfg, threads, log);
            if (bench->parsed()) write_benchmark(ctx, target);
            if (spanel->parsed()) write_synthetic_panel(ctx, target);
            if (branch->parsed()) {
                const auto fit = write_branching(ctx, target);
                if (fit)
                    std::cout << to_json(*fit).dump() << '\n';
                else
                    std::cout << "{\"tau\":null}\n";
            }
            return 0;
        }
        const auto ctx = make_context(out_dir, cfg, threads, log);
        if (detect->parsed()) stage_detect(ctx, panel, opt(exclusions));
        if (embed->parsed()) stage_embed(ctx, jumps);
        if (score->parsed()) stage_score(ctx, embedded, opt(news));
        if (cojump->parsed()) {
            if (scored.empty() == sizes.empty()) throw ConfigError("cojump needs exactly one of --scored or --sizes");
            if (!sizes.empty()) {
                const auto s = read_sizes(sizes);
                Json tail{{"config_hash", ctx.hash}, {"source", sizes}, {"observations", s.size()}};
                tail["fit"] = to_json(fit_tail_exponent(s, cfg.tail_min, cfg.tail_max));
                std::ofstream(fs::path(out_dir) / "tail_fit.json", std::ios::binary) << tail.dump(2) << '\n';
                std::cout << tail["fit"].dump() << '\n';
            } else {
                stage_cojump(ctx, scored);
            }
        }
        if (report->parsed()) stage_report(ctx);
        if (run->parsed()) {
            PipelineInputs in;
            in.source = benchmark ? PipelineSource::Benchmark
                        : synthetic ? PipelineSource::SyntheticPanel
                                    : PipelineSource::Panel;
            in.panel = opt(panel);
            in.news = opt(news);
            in.exclusions = opt(exclusions);
            const auto ran = run_pipeline(ctx, in);
            if (log) {
                *log << "stages run:";
                for (const auto& s : ran) *log << ' ' << s;
                *log << (ran.empty() ? " none (all up to date)\n" : "\n");
            }
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
