#pragma once

#include "jumpscatter/cojump.hpp"
#include "jumpscatter/detect.hpp"
#include "jumpscatter/records.hpp"
#include "jumpscatter/score.hpp"
#include "jumpscatter/synth.hpp"
#include "jumpscatter/wavelet.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace jumpscatter {

/// Every tunable of the pipeline. Serialized as one flat JSON object; the
/// hash of its canonical form is stamped on every output.
struct PipelineConfig {
    // ingest / detect
    SessionWindow session;
    DeseasonalizeConfig deseasonalize;
    ThresholdConfig threshold;
    int prune_window{60};
    WindowConfig window;
    // wavelet
    FilterBankConfig bank;
    // score
    DirectionConfig direction;
    QuantileConfig quantiles;
    bool fit_power_law{true};
    PowerLawFitConfig powerlaw;
    int news_tolerance{3};
    // cojump
    std::size_t max_cojump_size{250};
    IndicatorConfig indicators;
    std::uint64_t tail_min{10};
    std::uint64_t tail_max{100};
    // synth
    std::uint64_t seed{7};
    BenchmarkSpec benchmark;
    PanelSpec panel;
    BranchingSpec branching;
};

/// Canonical flat document with every key.
Json to_json(const PipelineConfig& cfg);
/// Overlays `doc` on the defaults. Unknown keys and ill-typed values raise ConfigError.
PipelineConfig config_from_json(const Json& doc);
PipelineConfig load_config(const std::filesystem::path& path);
/// 16 hex digits: FNV-1a 64 of the canonical document.
std::string config_hash(const PipelineConfig& cfg);

/// FNV-1a 64 of a byte string, as 16 hex digits.
std::string fnv1a_hex(std::string_view bytes);

struct StageContext {
    std::filesystem::path out_dir;
    PipelineConfig config;
    std::string hash;
    unsigned threads{1};
    std::ostream* log{nullptr};
};

StageContext make_context(std::filesystem::path out_dir, PipelineConfig cfg, unsigned threads, std::ostream* log);

// Individual stages. Each reads its inputs from files and writes its outputs
// into ctx.out_dir; file names are listed in the format reference.

/// Panel CSV -> jumps.jsonl (windows only) and detect_summary.json.
void stage_detect(const StageContext& ctx, const std::filesystem::path& panel,
                  const std::optional<std::filesystem::path>& exclusions);
/// jumps.jsonl -> embedded.jsonl.
void stage_embed(const StageContext& ctx, const std::filesystem::path& jumps);
/// embedded.jsonl (+ news) -> scored.jsonl, model.json, profile tables, projections.
void stage_score(const StageContext& ctx, const std::filesystem::path& embedded,
                 const std::optional<std::filesystem::path>& news);
/// scored.jsonl -> cojumps.jsonl, distribution tables, tail_fit.json.
void stage_cojump(const StageContext& ctx, const std::filesystem::path& scored);
/// Summary of the artifact directory -> report.md.
void stage_report(const StageContext& ctx);

/// Writes benchmark windows as a jumps file.
void write_benchmark(const StageContext& ctx, const std::filesystem::path& path);
/// Writes a synthetic panel as CSV.
void write_synthetic_panel(const StageContext& ctx, const std::filesystem::path& path);
/// Simulates avalanche sizes into a CSV and returns the tail fit (if any observation is in range).
std::optional<TailFit> write_branching(const StageContext& ctx, const std::filesystem::path& path);

std::vector<std::uint64_t> read_sizes(const std::filesystem::path& path);

enum class PipelineSource { Panel, SyntheticPanel, Benchmark };

struct PipelineInputs {
    PipelineSource source{PipelineSource::Panel};
    std::optional<std::filesystem::path> panel;
    std::optional<std::filesystem::path> news;
    std::optional<std::filesystem::path> exclusions;
};

/// Runs every stage, skipping those whose manifest under .stages/ matches the
/// current config hash and input digests and whose outputs still exist.
/// Returns the names of the stages that actually ran.
std::vector<std::string> run_pipeline(const StageContext& ctx, const PipelineInputs& inputs);

}  // namespace jumpscatter
