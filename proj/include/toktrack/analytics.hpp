#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "toktrack/dataset.hpp"
#include "toktrack/editor.hpp"
#include "toktrack/time.hpp"
#include "toktrack/tracker.hpp"
#include "toktrack/types.hpp"

namespace toktrack {

class IntegrityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RevisionMeta {
  RevId rev_id = 0;
  UtcSeconds timestamp = 0;
  EditorId editor;
};

// One article's analysis input: revision metadata in article order plus the
// finalized token histories.
struct ArticleHistory {
  PageId page_id = 0;
  std::vector<RevisionMeta> revisions;
  std::vector<TokenHistory> tokens;
};

// Rebuilds an ArticleHistory from dataset rows of one page.
ArticleHistory assemble_article(PageId page_id, std::vector<RevisionRow> revision_rows,
                                const std::vector<ContentRow>& current_rows,
                                const std::vector<ContentRow>& deleted_rows);

// A deletion undoes the action that most recently made the token present
// (the origin add or the latest reintroduction); a reintroduction undoes the
// token's most recent deletion. dt is the time since the previous event of
// any kind on the token.
struct UndoAction {
  enum class Kind { del, re };
  Kind kind = Kind::del;
  TokenId token_id = 0;
  RevId acting_rev_id = 0;
  RevId target_rev_id = 0;
  EditorId acting_editor;
  EditorId target_editor;
  std::int64_t dt_seconds = 0;
  bool self = false;  // acting editor equals the targeted action's editor
};

// All undo actions of an article, tokens in id order, events chronological
// within each token. Throws IntegrityError on rev ids without metadata or
// non-monotonic event times.
std::vector<UndoAction> extract_undo_actions(const ArticleHistory& article);

struct ConflictScore {
  std::uint64_t cb = 0;
  double ct = 0.0;
};

// Counts every out/in action on the token except its first deletion and
// self-undos; ct weighs each counted action with 1/log_3600(dt), dt floored
// at 2 seconds.
ConflictScore token_conflict(const TokenHistory& token, const ArticleHistory& article);

struct TokenConflict {
  TokenId token_id = 0;
  ConflictScore score;
};

std::vector<TokenConflict> article_token_conflicts(const ArticleHistory& article);

enum class ConflictScope { article, string_global, string_in_article };
enum class ConflictMetric { cb, ct };

struct ConflictAggregateOptions {
  ConflictScope scope = ConflictScope::article;
  ConflictMetric metric = ConflictMetric::cb;
  std::uint64_t min_n = 1;       // string scopes drop keys with fewer tokens
  bool include_deleted = false;  // default population: tokens present at dataset end
};

struct ConflictAggregateRow {
  PageId page_id = 0;  // set for article and string_in_article scopes
  std::string str;     // set for string scopes
  std::uint64_t n = 0;
  std::uint64_t cb_sum = 0;
  double ct_sum = 0.0;
  double cb_norm = 0.0;
  double ct_norm = 0.0;
};

// Merges per-token conflict scores across articles and produces the ranked
// aggregation for the configured scope: article ranks by the metric sum,
// string scopes by the frequency-normalized metric.
class ConflictAggregator {
 public:
  explicit ConflictAggregator(ConflictAggregateOptions options);  // min_n < 1 → invalid_argument

  void add_article(const ArticleHistory& article);
  std::vector<ConflictAggregateRow> finish();

 private:
  struct Accum {
    std::uint64_t n = 0;
    std::uint64_t cb = 0;
    double ct = 0.0;
  };
  ConflictAggregateOptions options_;
  std::vector<ConflictAggregateRow> rows_;          // article / string_in_article scopes
  std::map<std::string, Accum> by_string_;          // string_global scope
};

enum class EditorClass { registered, unregistered, bot };

EditorClass classify_editor(const EditorId& editor,
                            const std::unordered_set<std::uint64_t>& bot_ids);

struct SurvivalBucket {
  std::uint64_t added = 0;
  std::uint64_t died_within_horizon = 0;
  std::uint64_t survived_horizon_not_to_end = 0;
  std::uint64_t survived_to_end = 0;
  // horizon survivors split by the origin revision's editor class
  std::uint64_t survivors_registered = 0;
  std::uint64_t survivors_unregistered = 0;
  std::uint64_t survivors_bot = 0;
};

// Buckets tokens by the UTC calendar month of their origin revision. A token
// died within the horizon iff its first deletion happened strictly less than
// `horizon_seconds` after the origin timestamp; the remaining tokens split
// by whether they are present at the end of the dataset window.
class SurvivalAccumulator {
 public:
  SurvivalAccumulator(UtcSeconds end_instant, std::int64_t horizon_seconds,
                      std::unordered_set<std::uint64_t> bot_ids);

  void add_article(const ArticleHistory& article);  // origin after end → IntegrityError
  const std::map<YearMonth, SurvivalBucket>& buckets() const { return buckets_; }

 private:
  UtcSeconds end_instant_;
  std::int64_t horizon_seconds_;
  std::unordered_set<std::uint64_t> bot_ids_;
  std::map<YearMonth, SurvivalBucket> buckets_;
};

struct RevisionActionCounts {
  std::uint64_t adds = 0;
  std::uint64_t dels = 0;
  std::uint64_t res = 0;

  std::uint64_t total() const { return adds + dels + res; }
};

// Original action counts per revision, recovered from token histories.
std::unordered_map<RevId, RevisionActionCounts> revision_action_counts(
    const ArticleHistory& article);

struct RevertClassification {
  PageId page_id = 0;
  RevId reverting_rev_id = 0;
  RevId reverted_rev_id = 0;
  std::uint64_t undone_actions = 0;
  std::uint64_t target_original_actions = 0;
  double ratio = 0.0;  // undone / target_original, in (0, 1]
  bool full = false;   // ratio == 1
  bool self = false;   // reverting and reverted revisions share an editor
};

// Groups an article's undo actions by (acting, target) revision pair.
// Throws IntegrityError when a target has zero recorded original actions.
std::vector<RevertClassification> classify_reverts(
    PageId page_id, const std::vector<UndoAction>& undo_actions,
    const std::unordered_map<RevId, RevisionActionCounts>& action_counts);

struct IdentityRevert {
  RevId reverting_rev_id = 0;
  RevId reverted_rev_id = 0;
};

// Hash-identity reverts: a revision whose content hash equals an earlier
// revision's (most recent match wins) fully reverts every revision strictly
// between the two.
std::vector<IdentityRevert> identity_reverts(
    const std::vector<std::pair<RevId, std::string>>& hashes_in_order);

struct RevertMethodComparison {
  std::uint64_t identity_pairs = 0;
  std::uint64_t identity_found_full = 0;     // also a token-based full revert
  std::uint64_t identity_found_partial = 0;  // token-based partial revert
  std::uint64_t identity_not_found = 0;
  std::uint64_t token_full_pairs = 0;
  std::uint64_t token_full_found_by_identity = 0;
};

struct RevertSummary {
  std::uint64_t revisions = 0;
  std::uint64_t purely_adding = 0;    // >= 1 add, zero undo actions
  std::uint64_t self_correcting = 0;  // >= 1 undo action on the editor's own action
  std::uint64_t pairs = 0;
  // [self][full] cells of unique reverting / reverted revisions
  std::uint64_t acting_cells[2][2] = {};
  std::uint64_t target_cells[2][2] = {};
  std::vector<std::uint64_t> ratio_histogram = std::vector<std::uint64_t>(100, 0);
  std::vector<std::uint64_t> undone_histogram;  // bin k counts undone in [2^k, 2^(k+1))
  RevertMethodComparison comparison;
};

struct ArticleRevertResult {
  std::vector<RevertClassification> classifications;
  std::vector<IdentityRevert> identity_pairs;
};

// Streams articles through the token-based and hash-identity revert
// detectors and accumulates the cross-article summary.
class RevertAnalyzer {
 public:
  ArticleRevertResult add_article(const ArticleHistory& article,
                                  const std::vector<std::pair<RevId, std::string>>& hashes);
  const RevertSummary& summary() const { return summary_; }

 private:
  RevertSummary summary_;
};

}  // namespace toktrack
