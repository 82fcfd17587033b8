#include "toktrack/analytics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <set>

namespace toktrack {

namespace {

class RevisionIndex {
 public:
  explicit RevisionIndex(const ArticleHistory& article) : page_(article.page_id) {
    map_.reserve(article.revisions.size());
    for (const auto& r : article.revisions) map_.emplace(r.rev_id, &r);
  }

  const RevisionMeta& at(RevId rev) const {
    auto it = map_.find(rev);
    if (it == map_.end()) {
      throw IntegrityError("revision " + std::to_string(rev) + " referenced on page " +
                           std::to_string(page_) + " has no metadata");
    }
    return *it->second;
  }

 private:
  PageId page_;
  std::unordered_map<RevId, const RevisionMeta*> map_;
};

// Walks one token's event chain in order, yielding each undo action and
// whether it is the token's first deletion.
template <typename Fn>
void walk_token(const TokenHistory& token, const RevisionIndex& index, PageId page, Fn&& fn) {
  const RevisionMeta& origin = index.at(token.origin_rev_id);
  const RevisionMeta* made_present_by = &origin;
  UtcSeconds prev_time = origin.timestamp;
  for (std::size_t k = 0; k < token.out.size(); ++k) {
    const RevisionMeta& out_meta = index.at(token.out[k]);
    UndoAction del;
    del.kind = UndoAction::Kind::del;
    del.token_id = token.token_id;
    del.acting_rev_id = out_meta.rev_id;
    del.acting_editor = out_meta.editor;
    del.target_rev_id = made_present_by->rev_id;
    del.target_editor = made_present_by->editor;
    del.dt_seconds = out_meta.timestamp - prev_time;
    del.self = del.acting_editor == del.target_editor;
    if (del.dt_seconds < 0) {
      throw IntegrityError("token " + std::to_string(token.token_id) + " on page " +
                           std::to_string(page) + " has events out of time order");
    }
    fn(del, k == 0);
    prev_time = out_meta.timestamp;
    if (k < token.in.size()) {
      const RevisionMeta& in_meta = index.at(token.in[k]);
      UndoAction re;
      re.kind = UndoAction::Kind::re;
      re.token_id = token.token_id;
      re.acting_rev_id = in_meta.rev_id;
      re.acting_editor = in_meta.editor;
      re.target_rev_id = out_meta.rev_id;
      re.target_editor = out_meta.editor;
      re.dt_seconds = in_meta.timestamp - prev_time;
      re.self = re.acting_editor == re.target_editor;
      if (re.dt_seconds < 0) {
        throw IntegrityError("token " + std::to_string(token.token_id) + " on page " +
                             std::to_string(page) + " has events out of time order");
      }
      fn(re, false);
      prev_time = in_meta.timestamp;
      made_present_by = &in_meta;
    }
  }
}

double action_weight(std::int64_t dt_seconds) {
  const double dt = static_cast<double>(std::max<std::int64_t>(dt_seconds, 2));
  return std::log(3600.0) / std::log(dt);
}

void score_token(const TokenHistory& token, const RevisionIndex& index, PageId page,
                 ConflictScore& score) {
  walk_token(token, index, page, [&](const UndoAction& action, bool first_out) {
    if (first_out || action.self) return;
    score.cb += 1;
    score.ct += action_weight(action.dt_seconds);
  });
}

}  // namespace

ArticleHistory assemble_article(PageId page_id, std::vector<RevisionRow> revision_rows,
                                const std::vector<ContentRow>& current_rows,
                                const std::vector<ContentRow>& deleted_rows) {
  ArticleHistory article;
  article.page_id = page_id;
  std::sort(revision_rows.begin(), revision_rows.end(),
            [](const RevisionRow& a, const RevisionRow& b) {
              if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
              return a.rev_id < b.rev_id;
            });
  article.revisions.reserve(revision_rows.size());
  for (auto& row : revision_rows) {
    article.revisions.push_back(RevisionMeta{row.rev_id, row.timestamp, std::move(row.editor)});
  }
  article.tokens.reserve(current_rows.size() + deleted_rows.size());
  auto add_rows = [&](const std::vector<ContentRow>& rows) {
    for (const auto& row : rows) {
      TokenHistory t;
      t.token_id = row.token_id;
      t.str = row.str;
      t.origin_rev_id = row.origin_rev_id;
      t.last_rev_id = row.last_rev_id;
      t.out = row.out;
      t.in = row.in;
      article.tokens.push_back(std::move(t));
    }
  };
  add_rows(current_rows);
  add_rows(deleted_rows);
  std::sort(article.tokens.begin(), article.tokens.end(),
            [](const TokenHistory& a, const TokenHistory& b) { return a.token_id < b.token_id; });
  for (std::size_t i = 1; i < article.tokens.size(); ++i) {
    if (article.tokens[i].token_id == article.tokens[i - 1].token_id) {
      throw IntegrityError("duplicate token id " + std::to_string(article.tokens[i].token_id) +
                           " on page " + std::to_string(page_id));
    }
  }
  return article;
}

std::vector<UndoAction> extract_undo_actions(const ArticleHistory& article) {
  RevisionIndex index(article);
  std::vector<UndoAction> actions;
  for (const auto& token : article.tokens) {
    walk_token(token, index, article.page_id,
               [&](const UndoAction& action, bool) { actions.push_back(action); });
  }
  return actions;
}

ConflictScore token_conflict(const TokenHistory& token, const ArticleHistory& article) {
  RevisionIndex index(article);
  ConflictScore score;
  score_token(token, index, article.page_id, score);
  return score;
}

std::vector<TokenConflict> article_token_conflicts(const ArticleHistory& article) {
  RevisionIndex index(article);
  std::vector<TokenConflict> scores;
  scores.reserve(article.tokens.size());
  for (const auto& token : article.tokens) {
    TokenConflict tc;
    tc.token_id = token.token_id;
    score_token(token, index, article.page_id, tc.score);
    scores.push_back(tc);
  }
  return scores;
}

ConflictAggregator::ConflictAggregator(ConflictAggregateOptions options)
    : options_(options) {
  if (options_.min_n < 1) throw std::invalid_argument("min_n must be at least 1");
}

void ConflictAggregator::add_article(const ArticleHistory& article) {
  RevisionIndex index(article);
  Accum article_sum;
  std::map<std::string, Accum> in_article;
  for (const auto& token : article.tokens) {
    if (!options_.include_deleted && !token.present()) continue;
    ConflictScore score;
    score_token(token, index, article.page_id, score);
    switch (options_.scope) {
      case ConflictScope::article:
        article_sum.n += 1;
        article_sum.cb += score.cb;
        article_sum.ct += score.ct;
        break;
      case ConflictScope::string_global: {
        auto& acc = by_string_[token.str];
        acc.n += 1;
        acc.cb += score.cb;
        acc.ct += score.ct;
        break;
      }
      case ConflictScope::string_in_article: {
        auto& acc = in_article[token.str];
        acc.n += 1;
        acc.cb += score.cb;
        acc.ct += score.ct;
        break;
      }
    }
  }
  if (options_.scope == ConflictScope::article) {
    ConflictAggregateRow row;
    row.page_id = article.page_id;
    row.n = article_sum.n;
    row.cb_sum = article_sum.cb;
    row.ct_sum = article_sum.ct;
    rows_.push_back(std::move(row));
  } else if (options_.scope == ConflictScope::string_in_article) {
    for (auto& [str, acc] : in_article) {
      ConflictAggregateRow row;
      row.page_id = article.page_id;
      row.str = str;
      row.n = acc.n;
      row.cb_sum = acc.cb;
      row.ct_sum = acc.ct;
      rows_.push_back(std::move(row));
    }
  }
}

std::vector<ConflictAggregateRow> ConflictAggregator::finish() {
  if (options_.scope == ConflictScope::string_global) {
    for (auto& [str, acc] : by_string_) {
      ConflictAggregateRow row;
      row.str = str;
      row.n = acc.n;
      row.cb_sum = acc.cb;
      row.ct_sum = acc.ct;
      rows_.push_back(std::move(row));
    }
    by_string_.clear();
  }
  std::vector<ConflictAggregateRow> rows = std::move(rows_);
  rows_.clear();
  if (options_.scope != ConflictScope::article) {
    std::erase_if(rows, [&](const ConflictAggregateRow& r) { return r.n < options_.min_n; });
  }
  for (auto& row : rows) {
    if (row.n > 0) {
      row.cb_norm = static_cast<double>(row.cb_sum) / static_cast<double>(row.n);
      row.ct_norm = row.ct_sum / static_cast<double>(row.n);
    }
  }
  const bool by_sum = options_.scope == ConflictScope::article;
  const bool use_cb = options_.metric == ConflictMetric::cb;
  auto value = [&](const ConflictAggregateRow& r) {
    if (by_sum) return use_cb ? static_cast<double>(r.cb_sum) : r.ct_sum;
    return use_cb ? r.cb_norm : r.ct_norm;
  };
  std::sort(rows.begin(), rows.end(), [&](const ConflictAggregateRow& a, const ConflictAggregateRow& b) {
    const double va = value(a), vb = value(b);
    if (va != vb) return va > vb;
    if (a.page_id != b.page_id) return a.page_id < b.page_id;
    return a.str < b.str;
  });
  return rows;
}

EditorClass classify_editor(const EditorId& editor,
                            const std::unordered_set<std::uint64_t>& bot_ids) {
  if (!editor.is_registered()) return EditorClass::unregistered;
  return bot_ids.contains(editor.user_id()) ? EditorClass::bot : EditorClass::registered;
}

SurvivalAccumulator::SurvivalAccumulator(UtcSeconds end_instant, std::int64_t horizon_seconds,
                                         std::unordered_set<std::uint64_t> bot_ids)
    : end_instant_(end_instant),
      horizon_seconds_(horizon_seconds),
      bot_ids_(std::move(bot_ids)) {}

void SurvivalAccumulator::add_article(const ArticleHistory& article) {
  RevisionIndex index(article);
  for (const auto& token : article.tokens) {
    const RevisionMeta& origin = index.at(token.origin_rev_id);
    if (origin.timestamp > end_instant_) {
      throw IntegrityError("token " + std::to_string(token.token_id) + " on page " +
                           std::to_string(article.page_id) + " originates after the dataset end");
    }
    SurvivalBucket& bucket = buckets_[year_month_of(origin.timestamp)];
    bucket.added += 1;
    bool died_within_horizon = false;
    if (!token.out.empty()) {
      const RevisionMeta& first_out = index.at(token.out.front());
      died_within_horizon = first_out.timestamp - origin.timestamp < horizon_seconds_;
    }
    if (died_within_horizon) {
      bucket.died_within_horizon += 1;
      continue;
    }
    if (token.present()) {
      bucket.survived_to_end += 1;
    } else {
      bucket.survived_horizon_not_to_end += 1;
    }
    switch (classify_editor(origin.editor, bot_ids_)) {
      case EditorClass::registered: bucket.survivors_registered += 1; break;
      case EditorClass::unregistered: bucket.survivors_unregistered += 1; break;
      case EditorClass::bot: bucket.survivors_bot += 1; break;
    }
  }
}

std::unordered_map<RevId, RevisionActionCounts> revision_action_counts(
    const ArticleHistory& article) {
  std::unordered_map<RevId, RevisionActionCounts> counts;
  counts.reserve(article.revisions.size());
  for (const auto& rev : article.revisions) counts[rev.rev_id];
  auto at = [&](RevId rev) -> RevisionActionCounts& {
    auto it = counts.find(rev);
    if (it == counts.end()) {
      throw IntegrityError("revision " + std::to_string(rev) + " referenced on page " +
                           std::to_string(article.page_id) + " has no metadata");
    }
    return it->second;
  };
  for (const auto& token : article.tokens) {
    at(token.origin_rev_id).adds += 1;
    for (RevId rev : token.out) at(rev).dels += 1;
    for (RevId rev : token.in) at(rev).res += 1;
  }
  return counts;
}

std::vector<RevertClassification> classify_reverts(
    PageId page_id, const std::vector<UndoAction>& undo_actions,
    const std::unordered_map<RevId, RevisionActionCounts>& action_counts) {
  struct Group {
    std::uint64_t undone = 0;
    bool self = false;
  };
  std::map<std::pair<RevId, RevId>, Group> groups;
  for (const auto& action : undo_actions) {
    auto& group = groups[{action.acting_rev_id, action.target_rev_id}];
    group.undone += 1;
    group.self = action.self;
  }
  std::vector<RevertClassification> result;
  result.reserve(groups.size());
  for (const auto& [key, group] : groups) {
    auto it = action_counts.find(key.second);
    if (it == action_counts.end() || it->second.total() == 0) {
      throw IntegrityError("revision " + std::to_string(key.second) + " on page " +
                           std::to_string(page_id) +
                           " is targeted by undo actions but has no recorded actions");
    }
    RevertClassification rc;
    rc.page_id = page_id;
    rc.reverting_rev_id = key.first;
    rc.reverted_rev_id = key.second;
    rc.undone_actions = group.undone;
    rc.target_original_actions = it->second.total();
    rc.ratio = static_cast<double>(group.undone) / static_cast<double>(rc.target_original_actions);
    rc.full = group.undone == rc.target_original_actions;
    rc.self = group.self;
    result.push_back(rc);
  }
  return result;
}

std::vector<IdentityRevert> identity_reverts(
    const std::vector<std::pair<RevId, std::string>>& hashes_in_order) {
  std::unordered_map<std::string_view, std::size_t> last_seen;
  last_seen.reserve(hashes_in_order.size());
  std::vector<IdentityRevert> pairs;
  for (std::size_t i = 0; i < hashes_in_order.size(); ++i) {
    const auto& [rev, hash] = hashes_in_order[i];
    auto it = last_seen.find(hash);
    if (it != last_seen.end()) {
      for (std::size_t k = it->second + 1; k < i; ++k) {
        pairs.push_back(IdentityRevert{rev, hashes_in_order[k].first});
      }
    }
    last_seen[hash] = i;
  }
  return pairs;
}

ArticleRevertResult RevertAnalyzer::add_article(
    const ArticleHistory& article, const std::vector<std::pair<RevId, std::string>>& hashes) {
  ArticleRevertResult result;
  auto undo_actions = extract_undo_actions(article);
  auto counts = revision_action_counts(article);
  result.classifications = classify_reverts(article.page_id, undo_actions, counts);
  result.identity_pairs = identity_reverts(hashes);

  summary_.revisions += article.revisions.size();
  for (const auto& rev : article.revisions) {
    const auto& c = counts.at(rev.rev_id);
    if (c.adds >= 1 && c.dels + c.res == 0) summary_.purely_adding += 1;
  }
  std::set<RevId> self_correcting;
  for (const auto& action : undo_actions) {
    if (action.self) self_correcting.insert(action.acting_rev_id);
  }
  summary_.self_correcting += self_correcting.size();

  summary_.pairs += result.classifications.size();
  std::set<RevId> acting_sets[2][2];
  std::set<RevId> target_sets[2][2];
  for (const auto& rc : result.classifications) {
    acting_sets[rc.self][rc.full].insert(rc.reverting_rev_id);
    target_sets[rc.self][rc.full].insert(rc.reverted_rev_id);
    const auto bin = std::min<std::size_t>(
        99, static_cast<std::size_t>(std::ceil(rc.ratio * 100.0)) - 1);
    summary_.ratio_histogram[bin] += 1;
    const auto log_bin = static_cast<std::size_t>(std::bit_width(rc.undone_actions) - 1);
    if (summary_.undone_histogram.size() <= log_bin) {
      summary_.undone_histogram.resize(log_bin + 1, 0);
    }
    summary_.undone_histogram[log_bin] += 1;
  }
  for (int self = 0; self < 2; ++self) {
    for (int full = 0; full < 2; ++full) {
      summary_.acting_cells[self][full] += acting_sets[self][full].size();
      summary_.target_cells[self][full] += target_sets[self][full].size();
    }
  }

  std::map<std::pair<RevId, RevId>, bool> token_pairs;
  for (const auto& rc : result.classifications) {
    token_pairs[{rc.reverting_rev_id, rc.reverted_rev_id}] = rc.full;
  }
  std::set<std::pair<RevId, RevId>> identity_set;
  summary_.comparison.identity_pairs += result.identity_pairs.size();
  for (const auto& pair : result.identity_pairs) {
    identity_set.insert({pair.reverting_rev_id, pair.reverted_rev_id});
    auto it = token_pairs.find({pair.reverting_rev_id, pair.reverted_rev_id});
    if (it == token_pairs.end()) {
      summary_.comparison.identity_not_found += 1;
    } else if (it->second) {
      summary_.comparison.identity_found_full += 1;
    } else {
      summary_.comparison.identity_found_partial += 1;
    }
  }
  for (const auto& [pair, full] : token_pairs) {
    if (!full) continue;
    summary_.comparison.token_full_pairs += 1;
    if (identity_set.contains(pair)) summary_.comparison.token_full_found_by_identity += 1;
  }
  return result;
}

}  // namespace toktrack
