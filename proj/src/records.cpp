#include "jumpscatter/records.hpp"

#include <charconv>
#include <fstream>
#include <limits>

namespace jumpscatter {

namespace {

template <class T>
Json optional_json(const std::optional<T>& v) {
    return v ? Json(*v) : Json(nullptr);
}

template <class T>
std::optional<T> optional_from(const Json& j, const char* key) {
    const auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->template get<T>();
}

Reflexivity parse_reflexivity(const std::string& s) {
    for (auto r : {Reflexivity::Anticipatory, Reflexivity::TransitionLow, Reflexivity::Endogenous, Reflexivity::TransitionHigh,
                   Reflexivity::Exogenous})
        if (to_string(r) == s) return r;
    throw DataError("unknown reflexivity class '" + s + "'");
}

MeanReversionLabel parse_mean_reversion(const std::string& s) {
    for (auto r : {MeanReversionLabel::None, MeanReversionLabel::MeanRevertingOnTrend, MeanReversionLabel::PostJumpMeanReverting})
        if (to_string(r) == s) return r;
    throw DataError("unknown mean-reversion label '" + s + "'");
}

TrendLabel parse_trend(const std::string& s) {
    for (auto r : {TrendLabel::None, TrendLabel::TrendAntiAligned, TrendLabel::TrendAligned})
        if (to_string(r) == s) return r;
    throw DataError("unknown trend label '" + s + "'");
}

Quadrant parse_quadrant(const std::string& s) {
    for (auto q : {Quadrant::LL, Quadrant::LR, Quadrant::UR, Quadrant::Gray})
        if (to_string(q) == s) return q;
    throw DataError("unknown quadrant '" + s + "'");
}

// Wraps json library exceptions so malformed records surface as data errors.
template <class F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed ") + what + " record: " + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("malformed ") + what + " record: " + e.what());
    }
}

}  // namespace

Minute parse_minute(std::string_view text) {
    const auto space = text.find(' ');
    if (space == std::string_view::npos) throw std::invalid_argument("timestamp '" + std::string(text) + "' is not 'YYYY-MM-DD HH:MM'");
    return make_minute(parse_date(text.substr(0, space)), parse_time_of_day(text.substr(space + 1)));
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

Json to_json(const JumpEvent& ev) {
    Json j;
    j["ticker"] = ev.ticker;
    j["timestamp"] = format_minute(ev.timestamp);
    j["sign"] = ev.sign;
    j["window"] = ev.window;
    if (ev.embedding) j["embedding"] = *ev.embedding;
    j["d1"] = optional_json(ev.d1);
    j["d2"] = optional_json(ev.d2);
    j["d3"] = optional_json(ev.d3);
    j["a_jump"] = optional_json(ev.a_jump);
    if (ev.powerlaw) {
        Json pl;
        if (ev.powerlaw->params) {
            const auto& p = *ev.powerlaw->params;
            pl["params"] = {{"n_pre", p.n_pre}, {"n_post", p.n_post}, {"p_pre", p.p_pre},
                            {"p_post", p.p_post}, {"t_c", p.t_c},       {"d", p.d}};
        } else {
            pl["params"] = nullptr;
        }
        pl["residual_norm"] = ev.powerlaw->residual_norm;
        pl["relative_residual"] = ev.powerlaw->relative_residual;
        pl["acceptable"] = ev.powerlaw->acceptable;
        j["powerlaw"] = pl;
    }
    j["news_related"] = ev.news_related;
    const auto& l = ev.labels;
    j["labels"] = {{"d1_bin", l.d1_bin},
                   {"d2_bin", l.d2_bin},
                   {"d3_bin", l.d3_bin},
                   {"grid_d1", l.grid_d1},
                   {"grid_d2", l.grid_d2},
                   {"grid_d3", l.grid_d3},
                   {"reflexivity", l.reflexivity ? Json(to_string(*l.reflexivity)) : Json(nullptr)},
                   {"mean_reversion", to_string(l.mean_reversion)},
                   {"trend", to_string(l.trend)}};
    j["cojump_id"] = optional_json(ev.cojump_id);
    if (ev.planted_asymmetry) j["planted_asymmetry"] = *ev.planted_asymmetry;
    return j;
}

JumpEvent event_from_json(const Json& j) {
    return guarded("jump", [&] {
        auto ev = make_event(j.at("ticker").get<std::string>(), parse_minute(j.at("timestamp").get<std::string>()),
                             j.at("window").get<std::vector<double>>());
        ev.embedding = optional_from<std::vector<double>>(j, "embedding");
        ev.d1 = optional_from<double>(j, "d1");
        ev.d2 = optional_from<double>(j, "d2");
        ev.d3 = optional_from<double>(j, "d3");
        ev.a_jump = optional_from<double>(j, "a_jump");
        if (const auto it = j.find("powerlaw"); it != j.end() && !it->is_null()) {
            PowerLawFit fit;
            if (const auto& p = it->at("params"); !p.is_null())
                fit.params = PowerLawParams{p.at("n_pre").get<double>(), p.at("n_post").get<double>(),
                                            p.at("p_pre").get<double>(), p.at("p_post").get<double>(),
                                            p.at("t_c").get<double>(),   p.at("d").get<double>()};
            // Non-finite residuals of a failed fit are serialized as null.
            constexpr double inf = std::numeric_limits<double>::infinity();
            fit.residual_norm = optional_from<double>(*it, "residual_norm").value_or(inf);
            fit.relative_residual = optional_from<double>(*it, "relative_residual").value_or(inf);
            fit.acceptable = it->at("acceptable").get<bool>();
            ev.powerlaw = fit;
        }
        ev.news_related = j.value("news_related", false);
        if (const auto it = j.find("labels"); it != j.end()) {
            auto& l = ev.labels;
            l.d1_bin = it->value("d1_bin", -1);
            l.d2_bin = it->value("d2_bin", -1);
            l.d3_bin = it->value("d3_bin", -1);
            l.grid_d1 = it->value("grid_d1", -1);
            l.grid_d2 = it->value("grid_d2", -1);
            l.grid_d3 = it->value("grid_d3", -1);
            if (const auto r = optional_from<std::string>(*it, "reflexivity")) l.reflexivity = parse_reflexivity(*r);
            l.mean_reversion = parse_mean_reversion(it->value("mean_reversion", std::string("none")));
            l.trend = parse_trend(it->value("trend", std::string("none")));
        }
        ev.cojump_id = optional_from<std::size_t>(j, "cojump_id");
        ev.planted_asymmetry = optional_from<double>(j, "planted_asymmetry");
        return ev;
    });
}

Json to_json(const CoJump& cj) {
    Json j;
    j["id"] = cj.id;
    j["minute"] = format_minute(cj.minute);
    j["size"] = cj.size();
    j["members"] = cj.members;
    j["mean_d1"] = optional_json(cj.mean_d1);
    j["min_d1"] = optional_json(cj.min_d1);
    j["max_d1"] = optional_json(cj.max_d1);
    j["sigma_size"] = optional_json(cj.sigma_size);
    j["normalized_mean"] = optional_json(cj.normalized_mean);
    j["normalized_min"] = optional_json(cj.normalized_min);
    j["normalization_skipped"] = cj.normalization_skipped;
    j["quadrant"] = cj.quadrant ? Json(to_string(*cj.quadrant)) : Json(nullptr);
    j["sign_mean"] = cj.sign_mean;
    j["rho"] = optional_json(cj.rho);
    j["news_related"] = cj.news_related;
    return j;
}

CoJump cojump_from_json(const Json& j) {
    return guarded("co-jump", [&] {
        CoJump cj;
        cj.id = j.at("id").get<std::size_t>();
        cj.minute = parse_minute(j.at("minute").get<std::string>());
        cj.members = j.at("members").get<std::vector<std::size_t>>();
        cj.mean_d1 = optional_from<double>(j, "mean_d1");
        cj.min_d1 = optional_from<double>(j, "min_d1");
        cj.max_d1 = optional_from<double>(j, "max_d1");
        cj.sigma_size = optional_from<double>(j, "sigma_size");
        cj.normalized_mean = optional_from<double>(j, "normalized_mean");
        cj.normalized_min = optional_from<double>(j, "normalized_min");
        cj.normalization_skipped = j.value("normalization_skipped", false);
        if (const auto q = optional_from<std::string>(j, "quadrant")) cj.quadrant = parse_quadrant(*q);
        cj.sign_mean = j.at("sign_mean").get<double>();
        cj.rho = optional_from<double>(j, "rho");
        cj.news_related = j.value("news_related", false);
        return cj;
    });
}

Json to_json(const DirectionModel& m) {
    Json j;
    j["scales"] = m.scales;
    j["features"] = to_string(m.features);
    j["feature_indices"] = m.feature_indices;
    j["mean"] = m.mean;
    j["scale"] = m.scale;
    j["weights"] = m.weights;
    j["orientation"] = m.orientation;
    j["explained_variance"] = m.explained_variance;
    j["rank"] = m.rank;
    j["fit_count"] = m.fit_count;
    j["warnings"] = m.warnings;
    return j;
}

DirectionModel model_from_json(const Json& j) {
    return guarded("direction model", [&] {
        DirectionModel m;
        m.scales = j.at("scales").get<int>();
        m.features = parse_pca_features(j.at("features").get<std::string>());
        m.feature_indices = j.at("feature_indices").get<std::vector<std::size_t>>();
        m.mean = j.at("mean").get<std::vector<double>>();
        m.scale = j.at("scale").get<std::vector<double>>();
        m.weights = j.at("weights").get<std::vector<double>>();
        m.orientation = j.at("orientation").get<int>();
        m.explained_variance = j.at("explained_variance").get<double>();
        m.rank = j.at("rank").get<std::size_t>();
        m.fit_count = j.at("fit_count").get<std::size_t>();
        m.warnings = j.value("warnings", std::vector<std::string>{});
        const auto p = m.feature_indices.size();
        if (m.mean.size() != p || m.scale.size() != p || m.weights.size() != p)
            throw DataError("direction model: inconsistent vector lengths");
        for (auto k : m.feature_indices)
            if (k >= embedding_size(m.scales)) throw DataError("direction model: feature index out of range");
        return m;
    });
}

Json to_json(const TailFit& f) {
    return {{"method", f.method},       {"tau", f.tau},           {"stderr", f.stderr_tau},
            {"tau_ml", f.tau_ml},       {"stderr_ml", f.stderr_ml}, {"range", {f.range_min, f.range_max}},
            {"in_range", f.in_range},   {"low_count", f.low_count}};
}

Json bank_metadata(const FilterBankConfig& cfg) {
    return {{"family", "battle-lemarie-analytic"}, {"order", cfg.spline_order}, {"scales", cfg.scales},
            {"length", cfg.length},                {"boundary", to_string(cfg.boundary)},
            {"handcrafted_support", cfg.handcrafted_support}};
}

void write_jsonl(const std::filesystem::path& path, const std::string& kind, const std::string& config_hash,
                 const std::vector<Json>& records, const Json& extra) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    Json header{{"kind", kind}, {"config_hash", config_hash}, {"count", records.size()}};
    for (const auto& [k, v] : extra.items()) header[k] = v;
    out << header.dump() << '\n';
    for (const auto& r : records) out << r.dump() << '\n';
    if (!out) throw DataError("write failed for " + path.string());
}

JsonlFile read_jsonl(const std::filesystem::path& path, const std::string& expected_kind) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    JsonlFile f;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j;
        try {
            j = Json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lineno, path.string() + ": " + e.what());
        }
        if (f.header.is_null()) {
            if (!j.is_object() || j.value("kind", std::string{}) != expected_kind)
                throw DataError(path.string() + ": expected a '" + expected_kind + "' header on line 1");
            f.header = std::move(j);
        } else {
            f.records.push_back(std::move(j));
        }
    }
    if (f.header.is_null()) throw DataError(path.string() + ": empty file, expected a '" + expected_kind + "' header");
    return f;
}

std::vector<JumpEvent> read_events(const std::filesystem::path& path, Json* header) {
    auto f = read_jsonl(path, "jumps");
    std::vector<JumpEvent> events;
    events.reserve(f.records.size());
    for (const auto& r : f.records) events.push_back(event_from_json(r));
    if (header) *header = std::move(f.header);
    return events;
}

void write_events(const std::filesystem::path& path, const std::vector<JumpEvent>& events, const std::string& config_hash,
                  const Json& extra) {
    std::vector<Json> records;
    records.reserve(events.size());
    for (const auto& ev : events) records.push_back(to_json(ev));
    write_jsonl(path, "jumps", config_hash, records, extra);
}

}  // namespace jumpscatter
