#pragma once

#include "jumpscatter/common.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace jumpscatter {

/// Intraday analysis bounds, inclusive at both ends.
struct SessionWindow {
    std::chrono::minutes start{std::chrono::hours{10} + std::chrono::minutes{30}};
    std::chrono::minutes end{std::chrono::hours{15}};

    [[nodiscard]] bool contains(std::chrono::minutes tod) const { return tod >= start && tod <= end; }
};

/// Parses "HH:MM-HH:MM".
SessionWindow parse_session(std::string_view text);
std::string format_session(const SessionWindow& s);

/// Shared (ticker x day x minute-slot) layout. Every ticker uses the same grid.
struct PanelGrid {
    std::vector<std::string> tickers;
    std::vector<Date> days;                   // strictly increasing
    std::vector<std::chrono::minutes> slots;  // minute-of-day, strictly increasing
    std::vector<bool> day_excluded;           // non-destructive mask, one per day
    SessionWindow session;

    [[nodiscard]] std::size_t cell_count() const { return tickers.size() * days.size() * slots.size(); }
    [[nodiscard]] std::size_t index(std::size_t ticker, std::size_t day, std::size_t slot) const {
        return (ticker * days.size() + day) * slots.size() + slot;
    }
    [[nodiscard]] bool in_session(std::size_t slot) const { return session.contains(slots[slot]); }
    [[nodiscard]] bool day_active(std::size_t day) const { return !day_excluded[day]; }
    [[nodiscard]] std::size_t active_day_count() const;
    [[nodiscard]] Minute timestamp(std::size_t day, std::size_t slot) const { return make_minute(days[day], slots[slot]); }
    [[nodiscard]] std::optional<std::size_t> ticker_index(std::string_view ticker) const;
};

/// Missing cells hold a quiet NaN; nothing is imputed at load time.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();
inline bool is_missing(double v) { return std::isnan(v); }

/// One-minute log-returns r(t) for every (ticker, day, slot) cell.
struct ReturnPanel {
    PanelGrid grid;
    std::vector<double> returns;

    [[nodiscard]] double at(std::size_t ticker, std::size_t day, std::size_t slot) const {
        return returns[grid.index(ticker, day, slot)];
    }
    [[nodiscard]] std::size_t missing_count() const;
};

enum class ValueKind { Auto, Return, Price };

struct ColumnSchema {
    std::string date{"date"};
    std::string time{"time"};
    std::string ticker{"ticker"};
    /// Column holding the value; when empty, "return" or "price" is looked up.
    std::string value{};
    ValueKind kind{ValueKind::Auto};
};

/// Loads a comma-separated panel with a header row. Price input is converted
/// to log-returns within each day (the first minute of a day has no return).
ReturnPanel load_panel(const std::filesystem::path& path, const ColumnSchema& schema = {},
                       const SessionWindow& session = {});
ReturnPanel read_panel(std::istream& in, const ColumnSchema& schema = {}, const SessionWindow& session = {});
/// Writes `date,time,ticker,return` rows; missing cells are omitted.
void write_panel(std::ostream& out, const ReturnPanel& panel);

struct NewsEvent {
    Minute time;
    std::optional<std::string> ticker;  // nullopt: market-wide announcement

    friend auto operator<=>(const NewsEvent&, const NewsEvent&) = default;
};

struct NewsFeed {
    std::vector<NewsEvent> events;  // sorted, unique
};

NewsFeed load_news(const std::filesystem::path& path);
NewsFeed read_news(std::istream& in);

struct ExclusionCalendar {
    std::set<Date> excluded_dates;
    int max_cojump_size{250};
};

ExclusionCalendar load_exclusions(const std::filesystem::path& path, int max_cojump_size = 250);
ExclusionCalendar read_exclusions(std::istream& in, int max_cojump_size = 250);

/// Masks calendar dates. Dates absent from the panel produce warnings only.
ReturnPanel apply_exclusions(const ReturnPanel& panel, const ExclusionCalendar& calendar,
                             std::vector<std::string>* warnings = nullptr);
ReturnPanel clear_exclusions(const ReturnPanel& panel);

}  // namespace jumpscatter
