#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "toktrack/analytics.hpp"
#include "toktrack/types.hpp"

namespace toktrack {

struct RunConfig {
  std::filesystem::path dump_path;
  std::filesystem::path output_dir;
  std::uint64_t batch_size = 10000;  // kept pages per batch
  unsigned worker_count = 1;
  std::string dump_date;  // "YYYYMMDD"; empty → derived from the dump file name
  bool compress = false;
};

struct RunReport {
  std::string dump_date;
  std::uint64_t batch_size = 0;
  bool compress = false;
  std::uint64_t batches = 0;
  std::uint64_t pages_seen = 0;
  std::uint64_t pages_processed = 0;
  std::map<std::string, std::uint64_t> pages_skipped;
  std::uint64_t revisions_seen = 0;
  std::uint64_t revisions_processed = 0;
  std::uint64_t revisions_skipped_missing_text = 0;
  std::uint64_t sha1_mismatches = 0;
  std::uint64_t tokens_created = 0;
  double wall_seconds = 0.0;
};

// Streams the dump once, fans kept pages out to worker_count article
// processors, and writes per-batch dataset files plus completion markers.
// Batches whose marker already exists are skipped, so an interrupted run can
// resume. The machine-readable run report lands in output_dir as
// run_report.json once everything completed; its absence marks the outputs
// as unusable. Output bytes are independent of worker_count.
RunReport cmd_process(const RunConfig& config);

struct ValidateOptions {
  double sample_fraction = 1.0;       // of (article, revision) pairs
  std::size_t max_reported_pairs = 20;
  std::size_t max_reported_tokens = 10;  // per mismatching revision
};

struct ValidateOutcome {
  std::uint64_t articles_checked = 0;
  std::uint64_t revisions_checked = 0;
  std::uint64_t mismatching_revisions = 0;
  std::string report;  // human-readable diff summary, empty when clean

  bool ok() const { return mismatching_revisions == 0; }
};

// Re-reads the dump and checks, for a deterministic sample of (article,
// revision) pairs, that token provenance reproduces the revision's token
// multiset exactly. Requires a completed processing run.
ValidateOutcome cmd_validate(const RunConfig& config, const ValidateOptions& options);

enum class AnalysisKind { survival, conflict, reverts };

struct AnalyzeOptions {
  AnalysisKind kind = AnalysisKind::survival;
  ConflictScope scope = ConflictScope::article;
  ConflictMetric metric = ConflictMetric::cb;
  std::uint64_t min_n = 1;
  bool include_deleted = false;
  std::int64_t horizon_seconds = 48 * 3600;
  std::optional<UtcSeconds> end_instant;  // unset → no cutoff check
  std::filesystem::path bot_list_path;    // optional newline-delimited user ids
};

// Streams the processed batches through the requested analysis and writes
// result tables (analysis_*.csv, plus a text summary for reverts) into
// output_dir. Requires a completed processing run.
void cmd_analyze(const RunConfig& config, const AnalyzeOptions& options);

// Parses run_report.json from a completed run. Throws std::runtime_error
// when the report is missing (run incomplete or never happened).
RunReport load_run_report(const std::filesystem::path& output_dir);

// Token multiset of one revision recomputed from provenance rows alone.
std::unordered_map<std::string, std::uint32_t> reconstruct_tokens(const ArticleHistory& article,
                                                                  RevId rev_id);

// Newline-delimited numeric user ids; '#' starts a comment line.
std::unordered_set<std::uint64_t> load_bot_list(const std::filesystem::path& path);

}  // namespace toktrack
