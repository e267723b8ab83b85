#include "jumpscatter/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>
#include <unordered_map>

namespace jumpscatter {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(trim(line.substr(start)));
            break;
        }
        fields.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return fields;
}

// Blank lines and '#' comments (e.g. the config-hash stamp) carry no data.
bool is_blank(std::string_view line) {
    const auto t = trim(line);
    return t.empty() || t.front() == '#';
}

bool is_na(std::string_view v) { return v.empty() || v == "NA" || v == "NaN" || v == "nan" || v == "null"; }

double parse_double(std::string_view v, std::size_t line, std::string_view column) {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc{} || ptr != end)
        throw ParseError(line, "non-numeric " + std::string(column) + " value '" + std::string(v) + "'");
    return out;
}

std::ifstream open_or_throw(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    return in;
}

std::size_t find_column(const std::vector<std::string_view>& header, std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    return header.size();
}

struct RawRow {
    Date date;
    std::chrono::minutes tod;
    std::string ticker;
    double value;
    std::size_t line;
};

}  // namespace

SessionWindow parse_session(std::string_view text) {
    const auto dash = text.find('-');
    if (dash == std::string_view::npos) throw ConfigError("session must be HH:MM-HH:MM, got '" + std::string(text) + "'");
    SessionWindow s;
    try {
        s.start = parse_time_of_day(text.substr(0, dash));
        s.end = parse_time_of_day(text.substr(dash + 1));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("session: ") + e.what());
    }
    if (s.end < s.start) throw ConfigError("session end precedes start: '" + std::string(text) + "'");
    return s;
}

std::string format_session(const SessionWindow& s) { return format_time_of_day(s.start) + "-" + format_time_of_day(s.end); }

std::size_t PanelGrid::active_day_count() const {
    return static_cast<std::size_t>(std::count(day_excluded.begin(), day_excluded.end(), false));
}

std::optional<std::size_t> PanelGrid::ticker_index(std::string_view ticker) const {
    const auto it = std::lower_bound(tickers.begin(), tickers.end(), ticker);
    if (it == tickers.end() || *it != ticker) return std::nullopt;
    return static_cast<std::size_t>(it - tickers.begin());
}

std::size_t ReturnPanel::missing_count() const {
    return static_cast<std::size_t>(std::count_if(returns.begin(), returns.end(), [](double v) { return is_missing(v); }));
}

ReturnPanel read_panel(std::istream& in, const ColumnSchema& schema, const SessionWindow& session) {
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string_view> header;
    std::string header_line;
    while (std::getline(in, header_line)) {
        ++line_no;
        if (!is_blank(header_line)) break;
    }
    if (is_blank(header_line)) throw ParseError(line_no == 0 ? 1 : line_no, "missing header row");
    header = split_csv(header_line);

    const std::size_t c_date = find_column(header, schema.date);
    const std::size_t c_time = find_column(header, schema.time);
    const std::size_t c_ticker = find_column(header, schema.ticker);
    ValueKind kind = schema.kind;
    std::size_t c_value = header.size();
    if (!schema.value.empty()) {
        c_value = find_column(header, schema.value);
    } else {
        c_value = find_column(header, "return");
        if (c_value != header.size() && kind == ValueKind::Auto) kind = ValueKind::Return;
        if (c_value == header.size()) {
            c_value = find_column(header, "price");
            if (c_value != header.size() && kind == ValueKind::Auto) kind = ValueKind::Price;
        }
    }
    if (c_date == header.size() || c_time == header.size() || c_ticker == header.size() || c_value == header.size())
        throw ParseError(line_no, "header must name date, time, ticker and return|price columns");
    if (kind == ValueKind::Auto) kind = ValueKind::Return;
    const std::size_t min_fields = std::max({c_date, c_time, c_ticker, c_value}) + 1;

    std::vector<RawRow> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        const auto fields = split_csv(line);
        if (fields.size() < min_fields) throw ParseError(line_no, "expected at least " + std::to_string(min_fields) + " fields");
        RawRow row;
        row.line = line_no;
        try {
            row.date = parse_date(fields[c_date]);
            row.tod = parse_time_of_day(fields[c_time]);
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
        if (fields[c_ticker].empty()) throw ParseError(line_no, "empty ticker");
        row.ticker = std::string(fields[c_ticker]);
        const auto v = fields[c_value];
        row.value = is_na(v) ? kMissing : parse_double(v, line_no, kind == ValueKind::Price ? "price" : "return");
        if (!is_missing(row.value) && !std::isfinite(row.value)) throw ParseError(line_no, "non-finite value");
        if (kind == ValueKind::Price && !is_missing(row.value) && row.value <= 0.0)
            throw ParseError(line_no, "price must be positive");
        rows.push_back(std::move(row));
    }

    ReturnPanel panel;
    auto& grid = panel.grid;
    grid.session = session;
    for (const auto& r : rows) {
        grid.tickers.push_back(r.ticker);
        grid.days.push_back(r.date);
        grid.slots.push_back(r.tod);
    }
    auto uniq = [](auto& v) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
    };
    uniq(grid.tickers);
    uniq(grid.days);
    uniq(grid.slots);
    grid.day_excluded.assign(grid.days.size(), false);

    std::vector<double> values(grid.cell_count(), kMissing);
    std::vector<std::size_t> seen_line(grid.cell_count(), 0);
    for (const auto& r : rows) {
        const auto t = *grid.ticker_index(r.ticker);
        const auto d = static_cast<std::size_t>(std::lower_bound(grid.days.begin(), grid.days.end(), r.date) - grid.days.begin());
        const auto s = static_cast<std::size_t>(std::lower_bound(grid.slots.begin(), grid.slots.end(), r.tod) - grid.slots.begin());
        const auto idx = grid.index(t, d, s);
        if (seen_line[idx] != 0)
            throw AlignmentError("line " + std::to_string(r.line) + ": duplicate row for " + r.ticker + " at " +
                                 format_minute(make_minute(r.date, r.tod)) + " (first seen on line " +
                                 std::to_string(seen_line[idx]) + ")");
        seen_line[idx] = r.line;
        values[idx] = r.value;
    }

    if (kind == ValueKind::Price) {
        panel.returns.assign(values.size(), kMissing);
        for (std::size_t t = 0; t < grid.tickers.size(); ++t)
            for (std::size_t d = 0; d < grid.days.size(); ++d)
                for (std::size_t s = 1; s < grid.slots.size(); ++s) {
                    if (grid.slots[s] - grid.slots[s - 1] != std::chrono::minutes{1}) continue;
                    const double p0 = values[grid.index(t, d, s - 1)];
                    const double p1 = values[grid.index(t, d, s)];
                    if (is_missing(p0) || is_missing(p1)) continue;
                    panel.returns[grid.index(t, d, s)] = std::log(p1 / p0);
                }
    } else {
        panel.returns = std::move(values);
    }
    return panel;
}

ReturnPanel load_panel(const std::filesystem::path& path, const ColumnSchema& schema, const SessionWindow& session) {
    auto in = open_or_throw(path);
    return read_panel(in, schema, session);
}

void write_panel(std::ostream& out, const ReturnPanel& panel) {
    const auto& g = panel.grid;
    out << "date,time,ticker,return\n";
    char buf[64];
    for (std::size_t d = 0; d < g.days.size(); ++d) {
        const auto date = format_date(g.days[d]);
        for (std::size_t s = 0; s < g.slots.size(); ++s) {
            const auto tod = format_time_of_day(g.slots[s]);
            for (std::size_t t = 0; t < g.tickers.size(); ++t) {
                const double v = panel.at(t, d, s);
                if (is_missing(v)) continue;
                // Shortest round-trip representation keeps reloads bit-exact.
                auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
                out << date << ',' << tod << ',' << g.tickers[t] << ',' << std::string_view(buf, static_cast<std::size_t>(ptr - buf))
                    << '\n';
            }
        }
    }
}

NewsFeed read_news(std::istream& in) {
    NewsFeed feed;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    std::size_t c_date = 0, c_time = 1, c_ticker = 2;
    bool has_ticker = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank(line)) continue;
        const auto fields = split_csv(line);
        if (!header_seen) {
            header_seen = true;
            c_date = find_column(fields, "date");
            c_time = find_column(fields, "time");
            c_ticker = find_column(fields, "ticker");
            if (c_date == fields.size() || c_time == fields.size())
                throw ParseError(line_no, "news header must name date and time columns");
            has_ticker = c_ticker != fields.size();
            continue;
        }
        if (fields.size() <= std::max(c_date, c_time)) throw ParseError(line_no, "too few fields");
        NewsEvent ev;
        try {
            ev.time = make_minute(parse_date(fields[c_date]), parse_time_of_day(fields[c_time]));
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, std::string("unparseable timestamp: ") + e.what());
        }
        if (has_ticker && c_ticker < fields.size() && !fields[c_ticker].empty()) ev.ticker = std::string(fields[c_ticker]);
        feed.events.push_back(std::move(ev));
    }
    std::sort(feed.events.begin(), feed.events.end());
    feed.events.erase(std::unique(feed.events.begin(), feed.events.end()), feed.events.end());
    return feed;
}

NewsFeed load_news(const std::filesystem::path& path) {
    auto in = open_or_throw(path);
    return read_news(in);
}

ExclusionCalendar read_exclusions(std::istream& in, int max_cojump_size) {
    ExclusionCalendar cal;
    cal.max_cojump_size = max_cojump_size;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto v = trim(line);
        if (v.empty() || v.front() == '#') continue;
        if (v == "date") continue;
        try {
            cal.excluded_dates.insert(parse_date(v));
        } catch (const std::invalid_argument& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return cal;
}

ExclusionCalendar load_exclusions(const std::filesystem::path& path, int max_cojump_size) {
    auto in = open_or_throw(path);
    return read_exclusions(in, max_cojump_size);
}

ReturnPanel apply_exclusions(const ReturnPanel& panel, const ExclusionCalendar& calendar, std::vector<std::string>* warnings) {
    ReturnPanel out = panel;
    for (const auto& date : calendar.excluded_dates) {
        const auto it = std::lower_bound(out.grid.days.begin(), out.grid.days.end(), date);
        if (it == out.grid.days.end() || *it != date) {
            if (warnings) warnings->push_back("excluded date " + format_date(date) + " is not in the panel");
            continue;
        }
        out.grid.day_excluded[static_cast<std::size_t>(it - out.grid.days.begin())] = true;
    }
    return out;
}

ReturnPanel clear_exclusions(const ReturnPanel& panel) {
    ReturnPanel out = panel;
    std::fill(out.grid.day_excluded.begin(), out.grid.day_excluded.end(), false);
    return out;
}

}  // namespace jumpscatter
