#include "jumpscatter/pipeline.hpp"

#include "jumpscatter/plot.hpp"
#include "jumpscatter/stats.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace jumpscatter {

namespace fs = std::filesystem;

namespace {

std::string threshold_mode_name(ThresholdMode m) { return m == ThresholdMode::Gumbel ? "gumbel" : "fixed"; }
std::string missing_policy_name(MissingPolicy m) { return m == MissingPolicy::Skip ? "skip" : "zero-fill"; }

ThresholdMode parse_threshold_mode(const std::string& s) {
    if (s == "fixed") return ThresholdMode::Fixed;
    if (s == "gumbel") return ThresholdMode::Gumbel;
    throw ConfigError("threshold_mode must be fixed|gumbel, got '" + s + "'");
}

MissingPolicy parse_missing_policy(const std::string& s) {
    if (s == "zero-fill") return MissingPolicy::ZeroFill;
    if (s == "skip") return MissingPolicy::Skip;
    throw ConfigError("missing_policy must be zero-fill|skip, got '" + s + "'");
}

bool same_kind(const Json& a, const Json& b) {
    if (a.is_number_integer() || a.is_number_unsigned()) return b.is_number_integer() || b.is_number_unsigned();
    if (a.is_number_float()) return b.is_number();
    return a.type() == b.type();
}

void log_line(const StageContext& ctx, const std::string& msg) {
    if (ctx.log) *ctx.log << msg << '\n';
}

std::string percent(std::size_t k, std::size_t n) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f%%", n == 0 ? 0.0 : 100.0 * static_cast<double>(k) / static_cast<double>(n));
    return buf;
}

std::string cell(const std::optional<double>& v) { return v && std::isfinite(*v) ? format_double(*v) : ""; }

std::ofstream open_table(const fs::path& path, const std::string& hash) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# config_hash=" << hash << '\n';
    return out;
}

void write_json_file(const fs::path& path, const Json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

Json read_json_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    try {
        return Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(path.string() + ": " + e.what());
    }
}

std::string file_digest(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return fnv1a_hex(ss.str());
}

void write_profile_table(const fs::path& path, const std::string& hash, const std::vector<ProfileBin>& bins,
                         const std::vector<std::string>& bin_names) {
    auto out = open_table(path, hash);
    out << "bin,label,count,t,mean_abs,mean_aligned\n";
    for (const auto& b : bins) {
        const auto& name = bin_names.at(static_cast<std::size_t>(b.bin));
        if (!b.mean_abs) {
            out << b.bin << ',' << name << ",0,,,\n";
            continue;
        }
        const auto& a = *b.mean_abs;
        const auto& s = *b.mean_aligned;
        const int half = static_cast<int>(a.size() - 1) / 2;
        for (std::size_t i = 0; i < a.size(); ++i)
            out << b.bin << ',' << name << ',' << b.count << ',' << static_cast<int>(i) - half << ',' << format_double(a[i])
                << ',' << format_double(s[i]) << '\n';
    }
}

std::vector<std::string> numbered(const std::string& prefix, int n) {
    std::vector<std::string> out;
    for (int k = 0; k < n; ++k) out.push_back(prefix + std::to_string(k));
    return out;
}

std::map<Minute, std::size_t> minute_counts(const std::vector<JumpEvent>& events) {
    std::map<Minute, std::size_t> counts;
    for (const auto& ev : events) ++counts[ev.timestamp];
    return counts;
}

Json boundaries_json(const ClassBoundaries& b) {
    return {{"d1", b.d1}, {"d2", b.d2}, {"d3", b.d3}, {"grid_d1", b.grid_d1}, {"grid_d2", b.grid_d2}, {"grid_d3", b.grid_d3}};
}

}  // namespace

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

Json to_json(const PipelineConfig& c) {
    Json j;
    j["session"] = format_session(c.session);
    j["min_days"] = c.deseasonalize.min_days;
    j["halflife_days"] = c.deseasonalize.halflife_days;
    j["clip_k"] = c.deseasonalize.clip_k;
    j["threshold_mode"] = threshold_mode_name(c.threshold.mode);
    j["threshold"] = c.threshold.theta;
    j["gumbel_alpha"] = c.threshold.alpha;
    j["prune_window"] = c.prune_window;
    j["missing_policy"] = missing_policy_name(c.window.missing);
    j["scales"] = c.bank.scales;
    j["spline_order"] = c.bank.spline_order;
    j["boundary"] = to_string(c.bank.boundary);
    j["handcrafted_support"] = c.bank.handcrafted_support;
    j["pca_features"] = to_string(c.direction.features);
    j["min_fit_samples"] = c.direction.min_samples;
    j["quantiles_d1"] = c.quantiles.d1;
    j["quantiles_d2"] = c.quantiles.d2;
    j["quantiles_d3"] = c.quantiles.d3;
    j["grid_quantiles"] = c.quantiles.grid;
    j["fit_power_law"] = c.fit_power_law;
    j["powerlaw_acceptable"] = c.powerlaw.acceptable_relative_residual;
    j["news_tolerance"] = c.news_tolerance;
    j["max_cojump_size"] = c.max_cojump_size;
    j["min_quadrant_size"] = c.indicators.min_quadrant_size;
    j["pool_min"] = c.indicators.pool_min;
    j["tail_min"] = c.tail_min;
    j["tail_max"] = c.tail_max;
    j["seed"] = c.seed;
    j["benchmark_n"] = c.benchmark.n_series;
    j["benchmark_t_c"] = c.benchmark.t_c;
    j["benchmark_d"] = c.benchmark.d;
    j["benchmark_noise_sd"] = c.benchmark.noise_sd;
    j["benchmark_spike"] = c.benchmark.spike;
    j["panel_tickers"] = c.panel.tickers;
    j["panel_days"] = c.panel.days;
    j["panel_start"] = c.panel.start_date;
    j["panel_base_vol"] = c.panel.base_vol;
    j["panel_jump_rate"] = c.panel.jump_rate;
    j["panel_cojump_rate"] = c.panel.cojump_rate;
    j["panel_jump_size"] = c.panel.jump_size;
    j["branching_law"] = to_string(c.branching.law);
    j["eps_min"] = c.branching.eps_min;
    j["gamma"] = c.branching.gamma;
    j["eps_fixed"] = c.branching.eps_fixed;
    j["offspring"] = to_string(c.branching.offspring);
    j["binomial_trials"] = c.branching.binomial_trials;
    j["n_avalanches"] = c.branching.n_avalanches;
    j["max_avalanche_size"] = c.branching.max_size;
    return j;
}

PipelineConfig config_from_json(const Json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    Json merged = to_json(PipelineConfig{});
    for (const auto& [key, value] : doc.items()) {
        const auto it = merged.find(key);
        if (it == merged.end()) throw ConfigError("unknown config key '" + key + "'");
        if (!same_kind(*it, value)) throw ConfigError("config key '" + key + "' has the wrong type");
        *it = value;
    }
    PipelineConfig c;
    try {
        const auto& m = merged;
        c.session = parse_session(m.at("session").get<std::string>());
        c.deseasonalize.min_days = m.at("min_days").get<std::size_t>();
        c.deseasonalize.halflife_days = m.at("halflife_days").get<double>();
        c.deseasonalize.clip_k = m.at("clip_k").get<double>();
        c.threshold.mode = parse_threshold_mode(m.at("threshold_mode").get<std::string>());
        c.threshold.theta = m.at("threshold").get<double>();
        c.threshold.alpha = m.at("gumbel_alpha").get<double>();
        c.prune_window = m.at("prune_window").get<int>();
        c.window.missing = parse_missing_policy(m.at("missing_policy").get<std::string>());
        c.bank.scales = m.at("scales").get<int>();
        c.bank.spline_order = m.at("spline_order").get<int>();
        c.bank.boundary = parse_boundary(m.at("boundary").get<std::string>());
        c.bank.handcrafted_support = m.at("handcrafted_support").get<int>();
        c.direction.features = parse_pca_features(m.at("pca_features").get<std::string>());
        c.direction.min_samples = m.at("min_fit_samples").get<std::size_t>();
        c.quantiles.d1 = m.at("quantiles_d1").get<std::vector<double>>();
        c.quantiles.d2 = m.at("quantiles_d2").get<std::vector<double>>();
        c.quantiles.d3 = m.at("quantiles_d3").get<std::vector<double>>();
        c.quantiles.grid = m.at("grid_quantiles").get<std::vector<double>>();
        c.fit_power_law = m.at("fit_power_law").get<bool>();
        c.powerlaw.acceptable_relative_residual = m.at("powerlaw_acceptable").get<double>();
        c.news_tolerance = m.at("news_tolerance").get<int>();
        c.max_cojump_size = m.at("max_cojump_size").get<std::size_t>();
        c.indicators.min_quadrant_size = m.at("min_quadrant_size").get<std::size_t>();
        c.indicators.pool_min = m.at("pool_min").get<std::size_t>();
        c.tail_min = m.at("tail_min").get<std::uint64_t>();
        c.tail_max = m.at("tail_max").get<std::uint64_t>();
        c.seed = m.at("seed").get<std::uint64_t>();
        c.benchmark.n_series = m.at("benchmark_n").get<std::size_t>();
        c.benchmark.t_c = m.at("benchmark_t_c").get<double>();
        c.benchmark.d = m.at("benchmark_d").get<double>();
        c.benchmark.noise_sd = m.at("benchmark_noise_sd").get<double>();
        c.benchmark.spike = m.at("benchmark_spike").get<double>();
        c.panel.tickers = m.at("panel_tickers").get<std::size_t>();
        c.panel.days = m.at("panel_days").get<std::size_t>();
        c.panel.start_date = m.at("panel_start").get<std::string>();
        c.panel.base_vol = m.at("panel_base_vol").get<double>();
        c.panel.jump_rate = m.at("panel_jump_rate").get<double>();
        c.panel.cojump_rate = m.at("panel_cojump_rate").get<double>();
        c.panel.jump_size = m.at("panel_jump_size").get<double>();
        c.branching.law = parse_epsilon_law(m.at("branching_law").get<std::string>());
        c.branching.eps_min = m.at("eps_min").get<double>();
        c.branching.gamma = m.at("gamma").get<double>();
        c.branching.eps_fixed = m.at("eps_fixed").get<double>();
        c.branching.offspring = parse_offspring_law(m.at("offspring").get<std::string>());
        c.branching.binomial_trials = m.at("binomial_trials").get<int>();
        c.branching.n_avalanches = m.at("n_avalanches").get<std::size_t>();
        c.branching.max_size = m.at("max_avalanche_size").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("invalid config value: ") + e.what());
    }
    c.benchmark.seed = c.seed;
    c.panel.seed = c.seed;
    c.branching.seed = c.seed;
    if (c.prune_window < 0) throw ConfigError("prune_window must be non-negative");
    if (!(c.threshold.theta > 0.0)) throw ConfigError("threshold must be positive");
    if (c.news_tolerance < 0) throw ConfigError("news_tolerance must be non-negative");
    if (c.tail_min < 1 || c.tail_max < c.tail_min) throw ConfigError("tail range must satisfy 1 <= tail_min <= tail_max");
    try {
        parse_date(c.panel.start_date);
    } catch (const std::invalid_argument&) {
        throw ConfigError("panel_start is not a YYYY-MM-DD date");
    }
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config " + path.string());
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

std::string config_hash(const PipelineConfig& cfg) { return fnv1a_hex(to_json(cfg).dump()); }

StageContext make_context(fs::path out_dir, PipelineConfig cfg, unsigned threads, std::ostream* log) {
    StageContext ctx;
    ctx.out_dir = std::move(out_dir);
    ctx.hash = config_hash(cfg);
    ctx.config = std::move(cfg);
    ctx.threads = threads;
    ctx.log = log;
    fs::create_directories(ctx.out_dir);
    return ctx;
}

void stage_detect(const StageContext& ctx, const fs::path& panel_path, const std::optional<fs::path>& exclusions) {
    const auto& cfg = ctx.config;
    auto panel = load_panel(panel_path, {}, cfg.session);
    std::vector<std::string> warnings;
    if (exclusions) {
        const auto cal = load_exclusions(*exclusions, static_cast<int>(cfg.max_cojump_size));
        panel = apply_exclusions(panel, cal, &warnings);
    }
    std::vector<JumpCandidate> raw, pruned;
    ExtractionResult extracted;
    if (panel.grid.active_day_count() == 0) {
        // Every day excluded: nothing to normalize, nothing to detect.
        warnings.push_back("no active days after exclusions");
    } else {
        auto dcfg = cfg.deseasonalize;
        dcfg.threads = ctx.threads;
        const auto scores = deseasonalize(panel, dcfg);
        warnings.insert(warnings.end(), scores.warnings.begin(), scores.warnings.end());
        raw = detect_jumps(scores, cfg.threshold);
        pruned = prune_clusters(scores, raw, cfg.prune_window);
        extracted = extract_windows(scores, pruned, cfg.window);
    }

    double theta = cfg.threshold.theta;
    if (cfg.threshold.mode == ThresholdMode::Gumbel) {
        std::size_t n = 0;
        for (std::size_t s = 0; s < panel.grid.slots.size(); ++s) n += panel.grid.in_session(s) ? 1 : 0;
        theta = gumbel_threshold(n, cfg.threshold.alpha);
    }
    write_events(ctx.out_dir / "jumps.jsonl", extracted.events, ctx.hash, {{"stage", "detect"}});
    Json summary{{"config_hash", ctx.hash},
                 {"tickers", panel.grid.tickers.size()},
                 {"days", panel.grid.days.size()},
                 {"active_days", panel.grid.active_day_count()},
                 {"slots", panel.grid.slots.size()},
                 {"missing_cells", panel.missing_count()},
                 {"threshold", theta},
                 {"detected", raw.size()},
                 {"retained_after_pruning", pruned.size()},
                 {"extracted", extracted.events.size()},
                 {"skipped_truncated", extracted.truncated},
                 {"skipped_missing", extracted.missing},
                 {"warnings", warnings}};
    write_json_file(ctx.out_dir / "detect_summary.json", summary);
    for (const auto& w : warnings) log_line(ctx, "warning: " + w);
    log_line(ctx, "detect: " + std::to_string(raw.size()) + " exceedances, " + std::to_string(pruned.size()) +
                      " initial jumps, " + std::to_string(extracted.events.size()) + " windows");
}

void stage_embed(const StageContext& ctx, const fs::path& jumps) {
    auto events = read_events(jumps);
    const auto bank = build_filter_bank(ctx.config.bank);
    const auto degenerate = embed_all(events, bank, ctx.threads);
    write_events(ctx.out_dir / "embedded.jsonl", events, ctx.hash,
                 {{"stage", "embed"}, {"bank", bank_metadata(ctx.config.bank)}, {"degenerate", degenerate}});
    if (degenerate > 0) log_line(ctx, "warning: " + std::to_string(degenerate) + " degenerate window(s) left unembedded");
    log_line(ctx, "embed: " + std::to_string(events.size() - degenerate) + " embeddings");
}

void stage_score(const StageContext& ctx, const fs::path& embedded, const std::optional<fs::path>& news) {
    const auto& cfg = ctx.config;
    auto events = read_events(embedded);
    const auto bank = build_filter_bank(cfg.bank);
    ScoreConfig scfg;
    scfg.fit_power_law = cfg.fit_power_law;
    scfg.powerlaw = cfg.powerlaw;
    scfg.threads = ctx.threads;
    score_events(events, bank, scfg);
    if (news) match_news(events, load_news(*news), cfg.news_tolerance);
    for (auto& ev : events) ev.d1.reset();
    const auto model = fit_directions(events, cfg.bank.scales, cfg.direction);
    for (const auto& w : model.warnings) log_line(ctx, "warning: " + w);
    const auto bounds = classify(events, model, cfg.quantiles);

    const Json meta{{"stage", "score"}, {"bank", bank_metadata(cfg.bank)}, {"boundaries", boundaries_json(bounds)}};
    write_events(ctx.out_dir / "scored.jsonl", events, ctx.hash, meta);
    write_json_file(ctx.out_dir / "model.json", {{"config_hash", ctx.hash},
                                                 {"bank", bank_metadata(cfg.bank)},
                                                 {"model", to_json(model)},
                                                 {"boundaries", boundaries_json(bounds)}});

    const int d1_bins = static_cast<int>(cfg.quantiles.d1.size()) + 1;
    const int d2_bins = static_cast<int>(cfg.quantiles.d2.size()) + 1;
    const int d3_bins = static_cast<int>(cfg.quantiles.d3.size()) + 1;
    const int grid_bins = static_cast<int>(cfg.quantiles.grid.size()) + 1;
    std::vector<std::string> d1_names;
    for (int k = 0; k < d1_bins; ++k) d1_names.push_back(to_string(reflexivity_from_bin(k)));
    write_profile_table(ctx.out_dir / "profiles_d1.csv", ctx.hash,
                        average_profiles(events, [](const JumpEvent& e) { return e.labels.d1_bin; }, d1_bins), d1_names);
    write_profile_table(ctx.out_dir / "profiles_d2.csv", ctx.hash,
                        average_profiles(events, [](const JumpEvent& e) { return e.labels.d2_bin; }, d2_bins),
                        numbered("d2_q", d2_bins));
    write_profile_table(ctx.out_dir / "profiles_d3.csv", ctx.hash,
                        average_profiles(events, [](const JumpEvent& e) { return e.labels.d3_bin; }, d3_bins),
                        numbered("d3_q", d3_bins));
    std::vector<std::string> grid_names;
    for (int a = 0; a < grid_bins; ++a)
        for (int b = 0; b < grid_bins; ++b) grid_names.push_back("g" + std::to_string(a) + "_" + std::to_string(b));
    for (const auto& [name, second] : {std::pair{"profiles_grid_d1_d2.csv", 2}, std::pair{"profiles_grid_d1_d3.csv", 3}}) {
        const int which = second;
        write_profile_table(ctx.out_dir / name, ctx.hash,
                            average_profiles(
                                events,
                                [&](const JumpEvent& e) {
                                    const int g2 = which == 2 ? e.labels.grid_d2 : e.labels.grid_d3;
                                    return e.labels.grid_d1 < 0 || g2 < 0 ? -1 : e.labels.grid_d1 * grid_bins + g2;
                                },
                                grid_bins * grid_bins),
                            grid_names);
    }

    const auto counts = minute_counts(events);
    {
        auto out = open_table(ctx.out_dir / "projections.csv", ctx.hash);
        out << "ticker,timestamp,sign,d1,d2,d3,a_jump,news_related,minute_group_size,reflexivity,mean_reversion,trend\n";
        for (const auto& ev : events)
            out << ev.ticker << ',' << format_minute(ev.timestamp) << ',' << ev.sign << ',' << cell(ev.d1) << ','
                << cell(ev.d2) << ',' << cell(ev.d3) << ',' << cell(ev.a_jump) << ',' << (ev.news_related ? 1 : 0) << ','
                << counts.at(ev.timestamp) << ',' << (ev.labels.reflexivity ? to_string(*ev.labels.reflexivity) : "")
                << ',' << to_string(ev.labels.mean_reversion) << ',' << to_string(ev.labels.trend) << '\n';
    }
    for (int second : {2, 3}) {
        ScatterPlot plot;
        plot.title = second == 2 ? "Reflexivity vs mean reversion" : "Reflexivity vs trend";
        plot.x_label = "D1";
        plot.y_label = second == 2 ? "D2" : "D3";
        plot.x_lines = bounds.grid_d1;
        plot.y_lines = second == 2 ? bounds.grid_d2 : bounds.grid_d3;
        for (const auto& ev : events) {
            if (!ev.d1) continue;
            const auto style = ev.news_related ? PointStyle::News
                               : counts.at(ev.timestamp) > 1 ? PointStyle::CoJump
                                                             : PointStyle::Plain;
            plot.points.push_back({*ev.d1, second == 2 ? *ev.d2 : *ev.d3, style});
        }
        std::ofstream svg(ctx.out_dir / (second == 2 ? "projection_d1_d2.svg" : "projection_d1_d3.svg"), std::ios::binary);
        if (!svg) throw DataError("cannot write projection plot");
        write_scatter_svg(svg, plot, ctx.hash);
    }
    log_line(ctx, "score: " + std::to_string(events.size()) + " events scored, explained variance " +
                      format_double(model.explained_variance));
}

void stage_cojump(const StageContext& ctx, const fs::path& scored) {
    const auto& cfg = ctx.config;
    auto events = read_events(scored);
    auto grouped = group(events, cfg.max_cojump_size);
    compute_indicators(grouped.cojumps, events, cfg.indicators);

    std::vector<Json> records;
    for (const auto& cj : grouped.cojumps) records.push_back(to_json(cj));
    write_jsonl(ctx.out_dir / "cojumps.jsonl", "cojumps", ctx.hash, records,
                {{"stage", "cojump"}, {"dropped_groups", grouped.dropped_groups}, {"dropped_jumps", grouped.dropped_jumps}});

    auto write_distribution = [&](const fs::path& path, const SizeDistribution& dist) {
        auto out = open_table(path, ctx.hash);
        out << "size,count,ccdf\n";
        for (const auto& [s, p] : dist.ccdf) out << s << ',' << dist.histogram.at(s) << ',' << format_double(p) << '\n';
    };
    write_distribution(ctx.out_dir / "size_distribution.csv", size_distribution(grouped.cojumps, SizeFilter::All, 2));
    write_distribution(ctx.out_dir / "size_distribution_endogenous.csv",
                       size_distribution(grouped.cojumps, SizeFilter::EndogenousMinimum, cfg.indicators.min_quadrant_size));
    {
        auto out = open_table(ctx.out_dir / "quadrants.csv", ctx.hash);
        out << "id,minute,size,mean_d1,min_d1,max_d1,sigma_size,normalized_mean,normalized_min,quadrant,news_related,rho\n";
        for (const auto& cj : grouped.cojumps) {
            if (cj.size() < cfg.indicators.min_quadrant_size || !cj.mean_d1) continue;
            out << cj.id << ',' << format_minute(cj.minute) << ',' << cj.size() << ',' << cell(cj.mean_d1) << ','
                << cell(cj.min_d1) << ',' << cell(cj.max_d1) << ',' << cell(cj.sigma_size) << ','
                << cell(cj.normalized_mean) << ',' << cell(cj.normalized_min) << ','
                << (cj.quadrant ? to_string(*cj.quadrant) : "") << ',' << (cj.news_related ? 1 : 0) << ',' << cell(cj.rho)
                << '\n';
        }
    }
    {
        auto out = open_table(ctx.out_dir / "calendar.csv", ctx.hash);
        out << "date,time,size,news_related\n";
        for (const auto& cj : grouped.cojumps) {
            if (cj.size() < 2) continue;
            out << format_date(date_of(cj.minute)) << ',' << format_time_of_day(time_of_day(cj.minute)) << ',' << cj.size()
                << ',' << (cj.news_related ? 1 : 0) << '\n';
        }
    }
    {
        std::vector<CoJump> proper;
        for (const auto& cj : grouped.cojumps)
            if (cj.size() >= 2) proper.push_back(cj);
        const auto align = sign_alignment(proper);
        const auto dist = size_distribution(proper, SizeFilter::All, 2);
        auto out = open_table(ctx.out_dir / "sign_alignment.csv", ctx.hash);
        out << "size,count,mean_abs_sign\n";
        for (const auto& [s, v] : align) out << s << ',' << dist.histogram.at(s) << ',' << format_double(v) << '\n';
    }
    {
        auto out = open_table(ctx.out_dir / "cojump_profiles.csv", ctx.hash);
        out << "id,size,rho,t,profile\n";
        for (const auto& cj : grouped.cojumps) {
            if (cj.size() < 2) continue;
            const auto prof = average_normalized_profile(cj, events);
            if (!prof.profile) continue;
            const int half = static_cast<int>(prof.profile->size() - 1) / 2;
            for (std::size_t i = 0; i < prof.profile->size(); ++i)
                out << cj.id << ',' << cj.size() << ',' << cell(cj.rho) << ',' << static_cast<int>(i) - half << ','
                    << format_double((*prof.profile)[i]) << '\n';
        }
    }
    std::vector<std::uint64_t> sizes;
    for (const auto& cj : grouped.cojumps)
        if (cj.size() >= 2) sizes.push_back(cj.size());
    Json tail{{"config_hash", ctx.hash}, {"source", "cojump sizes (S >= 2)"}, {"observations", sizes.size()}};
    try {
        tail["fit"] = to_json(fit_tail_exponent(sizes, cfg.tail_min, cfg.tail_max));
    } catch (const DataError& e) {
        tail["fit"] = nullptr;
        tail["error"] = e.what();
    } catch (const NumericalError& e) {
        tail["fit"] = nullptr;
        tail["error"] = e.what();
    }
    write_json_file(ctx.out_dir / "tail_fit.json", tail);
    log_line(ctx, "cojump: " + std::to_string(sizes.size()) + " co-jumps (S >= 2), " +
                      std::to_string(grouped.dropped_groups) + " oversized group(s) dropped");
}

void stage_report(const StageContext& ctx) {
    const auto dir = ctx.out_dir;
    std::ostringstream md;
    md << "<!-- config_hash=" << ctx.hash << " -->\n";
    md << "# Jump analysis report\n\n";
    if (fs::exists(dir / "detect_summary.json")) {
        const auto s = read_json_file(dir / "detect_summary.json");
        md << "## Detection\n\n";
        md << "| quantity | value |\n|---|---|\n";
        for (const char* k : {"tickers", "days", "active_days", "threshold", "detected", "retained_after_pruning", "extracted",
                              "skipped_truncated", "skipped_missing"})
            md << "| " << k << " | " << s.at(k).dump() << " |\n";
        md << '\n';
    }
    if (fs::exists(dir / "scored.jsonl")) {
        const auto events = read_events(dir / "scored.jsonl");
        std::size_t news = 0, positive_d2 = 0;
        std::map<std::string, std::size_t> classes, mr, trend;
        for (const auto& ev : events) {
            news += ev.news_related ? 1 : 0;
            positive_d2 += ev.d2 && *ev.d2 > 0.0 ? 1 : 0;
            ++classes[ev.labels.reflexivity ? to_string(*ev.labels.reflexivity) : "unscored"];
            ++mr[to_string(ev.labels.mean_reversion)];
            ++trend[to_string(ev.labels.trend)];
        }
        md << "## Jumps\n\n";
        md << "- events: " << events.size() << "\n";
        md << "- news-related: " << news << " (" << percent(news, events.size()) << ")\n";
        md << "- positive D2: " << positive_d2 << " (" << percent(positive_d2, events.size()) << ")\n\n";
        md << "| reflexivity class | count |\n|---|---|\n";
        for (const auto& [k, v] : classes) md << "| " << k << " | " << v << " |\n";
        md << "\n| mean reversion | count |\n|---|---|\n";
        for (const auto& [k, v] : mr) md << "| " << k << " | " << v << " |\n";
        md << "\n| trend | count |\n|---|---|\n";
        for (const auto& [k, v] : trend) md << "| " << k << " | " << v << " |\n";
        md << '\n';
    }
    if (fs::exists(dir / "cojumps.jsonl")) {
        const auto f = read_jsonl(dir / "cojumps.jsonl", "cojumps");
        std::size_t proper = 0;
        std::map<std::string, std::size_t> quadrants;
        for (const auto& r : f.records) {
            const auto cj = cojump_from_json(r);
            if (cj.size() >= 2) ++proper;
            if (cj.quadrant) ++quadrants[to_string(*cj.quadrant)];
        }
        md << "## Co-jumps\n\n";
        md << "- co-jumps (S >= 2): " << proper << "\n";
        md << "- dropped oversized groups: " << f.header.value("dropped_groups", 0) << "\n\n";
        if (!quadrants.empty()) {
            md << "| quadrant | count |\n|---|---|\n";
            for (const auto& [k, v] : quadrants) md << "| " << k << " | " << v << " |\n";
            md << '\n';
        }
    }
    if (fs::exists(dir / "tail_fit.json")) {
        const auto t = read_json_file(dir / "tail_fit.json");
        md << "## Size tail\n\n";
        if (t.contains("fit") && !t["fit"].is_null())
            md << "- tau (CCDF least squares): " << t["fit"]["tau"].dump() << " +- " << t["fit"]["stderr"].dump()
               << "\n- tau (maximum likelihood): " << t["fit"]["tau_ml"].dump() << "\n";
        else
            md << "- no fit: " << t.value("error", std::string("n/a")) << "\n";
        md << '\n';
    }
    std::ofstream out(dir / "report.md", std::ios::binary);
    if (!out) throw DataError("cannot write report.md");
    out << md.str();
}

void write_benchmark(const StageContext& ctx, const fs::path& path) {
    auto series = generate_benchmark(ctx.config.benchmark);
    std::vector<JumpEvent> events;
    for (auto& s : series) events.push_back(std::move(s.event));
    write_events(path, events, ctx.hash, {{"stage", "synth-benchmark"}});
}

void write_synthetic_panel(const StageContext& ctx, const fs::path& path) {
    const auto panel = generate_panel(ctx.config.panel);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << "# config_hash=" << ctx.hash << '\n';
    write_panel(out, panel);
}

std::optional<TailFit> write_branching(const StageContext& ctx, const fs::path& path) {
    auto spec = ctx.config.branching;
    spec.threads = ctx.threads;
    const auto sample = simulate_branching(spec);
    {
        auto out = open_table(path, ctx.hash);
        out << "size\n";
        for (auto s : sample.sizes) out << s << '\n';
    }
    if (sample.cap_hits > 0) log_line(ctx, "warning: " + std::to_string(sample.cap_hits) + " avalanche(s) hit the size cap");
    try {
        return fit_tail_exponent(sample.sizes, ctx.config.tail_min, ctx.config.tail_max);
    } catch (const DataError&) {
        return std::nullopt;
    }
}

std::vector<std::uint64_t> read_sizes(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::vector<std::uint64_t> sizes;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#' || line == "size") continue;
        std::uint64_t v = 0;
        const auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), v);
        if (ec != std::errc{} || ptr != line.data() + line.size() || v == 0)
            throw ParseError(lineno, "invalid size '" + line + "'");
        sizes.push_back(v);
    }
    return sizes;
}

std::vector<std::string> run_pipeline(const StageContext& ctx, const PipelineInputs& inputs) {
    struct Stage {
        std::string name;
        std::vector<fs::path> inputs;
        std::vector<fs::path> outputs;
        std::function<void()> run;
    };
    const auto& out = ctx.out_dir;
    std::vector<Stage> stages;
    fs::path jumps = out / "jumps.jsonl";
    switch (inputs.source) {
        case PipelineSource::Panel: {
            if (!inputs.panel) throw ConfigError("run needs --panel (or --synthetic)");
            std::vector<fs::path> in{*inputs.panel};
            if (inputs.exclusions) in.push_back(*inputs.exclusions);
            stages.push_back({"detect", in, {jumps, out / "detect_summary.json"},
                              [&, p = *inputs.panel] { stage_detect(ctx, p, inputs.exclusions); }});
            break;
        }
        case PipelineSource::SyntheticPanel: {
            const fs::path panel = out / "input" / "panel.csv";
            stages.push_back({"synth", {}, {panel}, [&, panel] {
                                  fs::create_directories(panel.parent_path());
                                  write_synthetic_panel(ctx, panel);
                              }});
            std::vector<fs::path> in{panel};
            if (inputs.exclusions) in.push_back(*inputs.exclusions);
            stages.push_back({"detect", in, {jumps, out / "detect_summary.json"},
                              [&, panel] { stage_detect(ctx, panel, inputs.exclusions); }});
            break;
        }
        case PipelineSource::Benchmark: {
            jumps = out / "input" / "benchmark.jsonl";
            stages.push_back({"synth", {}, {jumps}, [&, jumps] {
                                  fs::create_directories(jumps.parent_path());
                                  write_benchmark(ctx, jumps);
                              }});
            break;
        }
    }
    stages.push_back({"embed", {jumps}, {out / "embedded.jsonl"}, [&, jumps] { stage_embed(ctx, jumps); }});
    std::vector<fs::path> score_in{out / "embedded.jsonl"};
    if (inputs.news) score_in.push_back(*inputs.news);
    stages.push_back({"score",
                      score_in,
                      {out / "scored.jsonl", out / "model.json", out / "profiles_d1.csv", out / "profiles_d2.csv",
                       out / "profiles_d3.csv", out / "profiles_grid_d1_d2.csv", out / "profiles_grid_d1_d3.csv",
                       out / "projections.csv", out / "projection_d1_d2.svg", out / "projection_d1_d3.svg"},
                      [&] { stage_score(ctx, out / "embedded.jsonl", inputs.news); }});
    stages.push_back({"cojump",
                      {out / "scored.jsonl"},
                      {out / "cojumps.jsonl", out / "size_distribution.csv", out / "size_distribution_endogenous.csv",
                       out / "quadrants.csv", out / "calendar.csv", out / "sign_alignment.csv", out / "cojump_profiles.csv",
                       out / "tail_fit.json"},
                      [&] { stage_cojump(ctx, out / "scored.jsonl"); }});
    std::vector<fs::path> report_in{out / "scored.jsonl", out / "cojumps.jsonl", out / "tail_fit.json"};
    if (inputs.source != PipelineSource::Benchmark) report_in.push_back(out / "detect_summary.json");
    stages.push_back({"report", report_in, {out / "report.md"}, [&] { stage_report(ctx); }});

    fs::create_directories(out / ".stages");
    std::vector<std::string> ran;
    for (const auto& st : stages) {
        Json manifest{{"stage", st.name}, {"config_hash", ctx.hash}};
        Json digests = Json::object();
        for (const auto& in : st.inputs) {
            const auto key = in.lexically_relative(out).empty() || in.lexically_relative(out).string().starts_with("..")
                                 ? in.string()
                                 : in.lexically_relative(out).string();
            digests[key] = file_digest(in);
        }
        manifest["inputs"] = digests;
        const auto manifest_path = out / ".stages" / (st.name + ".json");
        bool fresh = fs::exists(manifest_path);
        for (const auto& o : st.outputs) fresh = fresh && fs::exists(o);
        if (fresh) fresh = read_json_file(manifest_path) == manifest;
        if (fresh) {
            log_line(ctx, "stage " + st.name + ": up to date");
            continue;
        }
        fs::remove(manifest_path);
        try {
            st.run();
        } catch (const Error& e) {
            throw Error(e.kind(), "stage " + st.name + " failed: " + e.what());
        }
        write_json_file(manifest_path, manifest);
        ran.push_back(st.name);
    }
    return ran;
}

}  // namespace jumpscatter
