#include <cstdio>
#include <exception>
#include <string>

#include "CLI11.hpp"
#include "toktrack/analytics.hpp"
#include "toktrack/dataset.hpp"
#include "toktrack/dump.hpp"
#include "toktrack/pipeline.hpp"
#include "toktrack/time.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitValidation = 3;

void print_report(const toktrack::RunReport& report) {
  std::printf("pages seen:          %llu\n", static_cast<unsigned long long>(report.pages_seen));
  std::printf("pages processed:     %llu\n",
              static_cast<unsigned long long>(report.pages_processed));
  for (const auto& [reason, count] : report.pages_skipped)
    std::printf("pages skipped (%s): %llu\n", reason.c_str(),
                static_cast<unsigned long long>(count));
  std::printf("revisions seen:      %llu\n",
              static_cast<unsigned long long>(report.revisions_seen));
  std::printf("revisions processed: %llu\n",
              static_cast<unsigned long long>(report.revisions_processed));
  std::printf("revisions skipped (missing text): %llu\n",
              static_cast<unsigned long long>(report.revisions_skipped_missing_text));
  std::printf("digest mismatches:   %llu\n",
              static_cast<unsigned long long>(report.sha1_mismatches));
  std::printf("tokens created:      %llu\n",
              static_cast<unsigned long long>(report.tokens_created));
  std::printf("batches:             %llu\n", static_cast<unsigned long long>(report.batches));
  std::printf("wall seconds:        %.1f\n", report.wall_seconds);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"token provenance for revisioned wiki histories"};
  app.set_version_flag("--version", "0.1.0");
  app.set_config("--config", "", "read options from an INI file (flags win)");
  app.require_subcommand(1);

  toktrack::RunConfig config;

  auto* process = app.add_subcommand("process", "stream a dump into per-batch dataset files");
  process->add_option("--dump", config.dump_path, "XML dump (.xml, .xml.gz or .xml.bz2)")
      ->required();
  process->add_option("--out", config.output_dir, "output directory")->required();
  process->add_option("--batch-size", config.batch_size, "kept pages per batch")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  process->add_option("--workers", config.worker_count, "parallel article processors")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  process->add_option("--date", config.dump_date,
                      "dump date YYYYMMDD (default: derived from the dump file name)");
  process->add_flag("--compress", config.compress, "gzip the batch files");

  toktrack::ValidateOptions validate_options;
  auto* validate = app.add_subcommand(
      "validate", "recheck token provenance against the dump for a sample of revisions");
  validate->add_option("--dump", config.dump_path, "XML dump the dataset was built from")
      ->required();
  validate->add_option("--out", config.output_dir, "directory holding the dataset")->required();
  validate->add_option("--sample", validate_options.sample_fraction,
                       "fraction of (article, revision) pairs to check")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  validate->add_option("--max-reported", validate_options.max_reported_pairs,
                       "cap on mismatches listed in the report")
      ->capture_default_str();

  toktrack::AnalyzeOptions analyze_options;
  std::string kind;
  std::string scope = "article";
  std::string end_str;
  auto* analyze = app.add_subcommand("analyze", "run an analysis over the dataset files");
  analyze->add_option("kind", kind, "one of: survival, conflict, reverts")
      ->required()
      ->check(CLI::IsMember({"survival", "conflict", "reverts"}));
  analyze->add_option("--out", config.output_dir, "directory holding the dataset")->required();
  analyze->add_option("--scope", scope, "conflict aggregation scope")
      ->check(CLI::IsMember({"article", "string", "string-in-article"}))
      ->capture_default_str();
  std::string metric = "cb";
  analyze->add_option("--metric", metric, "conflict ranking metric")
      ->check(CLI::IsMember({"cb", "ct"}))
      ->capture_default_str();
  analyze->add_option("--min-n", analyze_options.min_n,
                      "drop strings with fewer occurrences (string scopes)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_flag("--all-tokens", analyze_options.include_deleted,
                    "include tokens absent from the final revision");
  analyze->add_option("--horizon", analyze_options.horizon_seconds,
                      "survival horizon in seconds")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_option("--end", end_str,
                      "dataset window end, ISO 8601 UTC (default: no cutoff)");
  analyze->add_option("--bot-list", analyze_options.bot_list_path,
                      "newline-delimited registered user ids treated as bots");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (process->parsed()) {
      toktrack::RunReport report = toktrack::cmd_process(config);
      print_report(report);
      return kExitOk;
    }
    if (validate->parsed()) {
      toktrack::ValidateOutcome outcome = toktrack::cmd_validate(config, validate_options);
      if (!outcome.ok()) {
        std::fputs(outcome.report.c_str(), stdout);
        std::printf("validation FAILED: %llu of %llu sampled revisions mismatched "
                    "(%llu articles)\n",
                    static_cast<unsigned long long>(outcome.mismatching_revisions),
                    static_cast<unsigned long long>(outcome.revisions_checked),
                    static_cast<unsigned long long>(outcome.articles_checked));
        return kExitValidation;
      }
      std::printf("validation OK: %llu revisions checked across %llu articles\n",
                  static_cast<unsigned long long>(outcome.revisions_checked),
                  static_cast<unsigned long long>(outcome.articles_checked));
      return kExitOk;
    }
    if (analyze->parsed()) {
      analyze_options.kind = kind == "survival"   ? toktrack::AnalysisKind::survival
                             : kind == "conflict" ? toktrack::AnalysisKind::conflict
                                                  : toktrack::AnalysisKind::reverts;
      analyze_options.scope = scope == "article" ? toktrack::ConflictScope::article
                              : scope == "string"
                                  ? toktrack::ConflictScope::string_global
                                  : toktrack::ConflictScope::string_in_article;
      analyze_options.metric =
          metric == "cb" ? toktrack::ConflictMetric::cb : toktrack::ConflictMetric::ct;
      if (!end_str.empty())
        analyze_options.end_instant = toktrack::parse_timestamp(end_str);
      toktrack::cmd_analyze(config, analyze_options);
      std::printf("analysis written to %s\n", config.output_dir.string().c_str());
      return kExitOk;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
  return kExitUsage;
}
