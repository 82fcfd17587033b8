#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "toktrack/analytics.hpp"
#include "toktrack/hash.hpp"

using namespace toktrack;
using namespace testsupport;

namespace {

// Runs the tracker over revisions and assembles the analysis input,
// optionally overriding editors.
ArticleHistory fig1_article(std::vector<std::uint64_t> editors = {}) {
  std::vector<SynthRevision> revisions;
  for (int i = 0; i < 4; ++i) {
    std::uint64_t editor = editors.empty() ? fig1::kEditor[i] : editors[i];
    revisions.push_back({fig1::kRev[i], fig1::kTime[i], fig1::kText[i],
                         EditorId::registered_user(editor)});
  }
  auto tracker = run_tracker(fig1::kPageId, revisions);
  return make_article_history(tracker, revisions);
}

const TokenHistory& token_by_id(const ArticleHistory& article, TokenId id) {
  return article.tokens[id - 1];
}

ArticleHistory simple_article(std::vector<SynthRevision> revisions) {
  auto tracker = run_tracker(1, revisions);
  return make_article_history(tracker, revisions);
}

}  // namespace

TEST_CASE("assemble_article round-trips tracker output") {
  auto article = fig1_article();
  std::vector<RevisionRow> revision_rows;
  std::vector<ContentRow> current_rows, deleted_rows;
  for (const auto& rev : article.revisions)
    revision_rows.push_back({fig1::kPageId, rev.rev_id, rev.timestamp, rev.editor});
  for (const auto& t : article.tokens) {
    ContentRow row{fig1::kPageId, t.last_rev_id, t.token_id, t.str, t.origin_rev_id, t.out, t.in};
    (t.present() ? current_rows : deleted_rows).push_back(row);
  }
  auto rebuilt = assemble_article(fig1::kPageId, revision_rows, current_rows, deleted_rows);
  CHECK(rebuilt.page_id == article.page_id);
  REQUIRE(rebuilt.tokens.size() == article.tokens.size());
  for (std::size_t i = 0; i < article.tokens.size(); ++i) {
    CHECK(rebuilt.tokens[i].token_id == article.tokens[i].token_id);
    CHECK(rebuilt.tokens[i].str == article.tokens[i].str);
    CHECK(rebuilt.tokens[i].out == article.tokens[i].out);
    CHECK(rebuilt.tokens[i].in == article.tokens[i].in);
  }

  current_rows.push_back(current_rows.front());
  CHECK_THROWS_AS(assemble_article(fig1::kPageId, revision_rows, current_rows, deleted_rows),
                  IntegrityError);
}

TEST_CASE("undo actions of the four-revision article") {
  auto article = fig1_article();
  auto actions = extract_undo_actions(article);

  std::vector<UndoAction> at_r4;
  for (const auto& a : actions)
    if (a.acting_rev_id == 1004) at_r4.push_back(a);
  CHECK(at_r4.size() == 8);

  std::size_t targeting_r1 = 0, targeting_r3 = 0;
  for (const auto& a : at_r4) {
    if (a.target_rev_id == 1001) ++targeting_r1;
    if (a.target_rev_id == 1003) ++targeting_r3;
  }
  CHECK(targeting_r1 == 4);  // the four stable intro words, deleted at their origin
  CHECK(targeting_r3 == 4);  // star + storm deletions, they/were reintroductions

  for (const auto& a : actions) CHECK_FALSE(a.self);  // distinct editors everywhere

  // the reintroduction of "they" undoes its deletion in R3ch
  bool found = false;
  for (const auto& a : at_r4) {
    if (a.kind == UndoAction::Kind::re && token_by_id(article, a.token_id).str == "they") {
      found = true;
      CHECK(a.target_rev_id == 1003);
      CHECK(a.dt_seconds == fig1::kTime[3] - fig1::kTime[2]);
      CHECK(a.acting_editor == EditorId::registered_user(104));
      CHECK(a.target_editor == EditorId::registered_user(103));
    }
  }
  CHECK(found);

  // deleting "star" at R4 undoes the reintroduction, not the origin add
  for (const auto& a : at_r4)
    if (a.kind == UndoAction::Kind::del && token_by_id(article, a.token_id).str == "star")
      CHECK(a.target_rev_id == 1003);
}

TEST_CASE("self flag compares editors, unregistered by full identity") {
  std::vector<SynthRevision> revisions = {
      {1, 100, "alpha beta", EditorId::unregistered("1.2.3.4")},
      {2, 200, "alpha", EditorId::unregistered("1.2.3.4")},   // self-delete
      {3, 300, "alpha beta", EditorId::unregistered("1.2.3.5")},
  };
  auto article = simple_article(revisions);
  auto actions = extract_undo_actions(article);
  REQUIRE(actions.size() == 2);
  CHECK(actions[0].kind == UndoAction::Kind::del);
  CHECK(actions[0].self);        // same ip deleted its own addition
  CHECK(actions[1].kind == UndoAction::Kind::re);
  CHECK_FALSE(actions[1].self);  // different ip restored it
}

TEST_CASE("cb counts distinct counted actions, first deletion excluded") {
  auto article = fig1_article();
  auto score = token_conflict(token_by_id(article, 5), article);  // "star"
  CHECK(score.cb == 2);
  // out at R2 is the first deletion and never counts
  auto t9 = token_conflict(token_by_id(article, 9), article);  // "they"
  CHECK(t9.cb == 1);
}

TEST_CASE("cb drops to 1 when the same editor reverts and re-reverts") {
  auto article = fig1_article({101, 102, 103, 103});  // R4 by R3's editor
  auto score = token_conflict(token_by_id(article, 5), article);
  CHECK(score.cb == 1);
  CHECK(score.ct == doctest::Approx(2.7334515).epsilon(1e-6));
}

TEST_CASE("ct weighs counted actions by inverse log-3600 of the gap") {
  auto article = fig1_article();
  auto star = token_conflict(token_by_id(article, 5), article);
  // reintroduction after 20 s plus deletion after one day
  double expected = std::log(3600.0) / std::log(20.0) + std::log(3600.0) / std::log(86400.0);
  CHECK(star.ct == doctest::Approx(expected).epsilon(1e-9));
  CHECK(star.ct == doctest::Approx(3.4538593).epsilon(1e-6));

  auto t9 = token_conflict(token_by_id(article, 9), article);
  CHECK(t9.ct == doctest::Approx(0.7204077).epsilon(1e-6));
}

TEST_CASE("ct weight is exactly 1 at dt = 3600 and floors dt at 2") {
  auto make = [](UtcSeconds gap) {
    std::vector<SynthRevision> revisions = {
        {1, 1000, "alpha beta", EditorId::registered_user(1)},
        {2, 2000, "alpha", EditorId::registered_user(2)},
        {3, 2000 + gap, "alpha beta", EditorId::registered_user(3)},
    };
    auto tracker = run_tracker(1, revisions);
    return make_article_history(tracker, revisions);
  };
  // only the reintroduction counts: first deletion excluded
  auto at_3600 = make(3600);
  CHECK(token_conflict(token_by_id(at_3600, 2), at_3600).ct == 1.0);
  auto at_1 = make(1);
  CHECK(token_conflict(token_by_id(at_1, 2), at_1).ct ==
        doctest::Approx(std::log(3600.0) / std::log(2.0)).epsilon(1e-9));
  auto at_0 = make(0);
  CHECK(token_conflict(token_by_id(at_0, 2), at_0).ct ==
        doctest::Approx(std::log(3600.0) / std::log(2.0)).epsilon(1e-9));
}

TEST_CASE("article_token_conflicts covers every token") {
  auto article = fig1_article();
  auto scores = article_token_conflicts(article);
  REQUIRE(scores.size() == article.tokens.size());
  std::uint64_t cb_total = 0;
  for (const auto& s : scores) cb_total += s.score.cb;
  CHECK(cb_total == 4);  // star 2, they 1, were 1
}

TEST_CASE("conflict aggregation by article ranks by summed score") {
  ConflictAggregator agg({ConflictScope::article, ConflictMetric::cb, 1, true});
  agg.add_article(fig1_article());

  std::vector<SynthRevision> quiet = {{1, 100, "calm words", EditorId::registered_user(1)}};
  auto quiet_article = simple_article(quiet);
  quiet_article.page_id = 2;
  agg.add_article(quiet_article);

  auto rows = agg.finish();
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].page_id == fig1::kPageId);
  CHECK(rows[0].cb_sum == 4);
  CHECK(rows[0].n == 13);
  CHECK(rows[1].page_id == 2);
  CHECK(rows[1].cb_sum == 0);
}

TEST_CASE("current-token population excludes deleted tokens unless asked") {
  ConflictAggregator current_only({ConflictScope::article, ConflictMetric::cb, 1, false});
  current_only.add_article(fig1_article());
  auto rows = current_only.finish();
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].n == 4);       // they, were, here, today
  CHECK(rows[0].cb_sum == 2);  // star's conflict is gone with it
}

TEST_CASE("string scope merges across articles and filters by min_n") {
  ConflictAggregator agg({ConflictScope::string_global, ConflictMetric::ct, 2, true});
  agg.add_article(fig1_article());
  std::vector<SynthRevision> other = {{1, 100, "star star", EditorId::registered_user(1)}};
  auto other_article = simple_article(other);
  other_article.page_id = 2;
  agg.add_article(other_article);

  auto rows = agg.finish();
  // only strings occurring at least twice across the corpus survive
  for (const auto& row : rows) CHECK(row.n >= 2);
  bool found_star = false;
  for (const auto& row : rows) {
    if (row.str == "star") {
      found_star = true;
      CHECK(row.n == 3);
      CHECK(row.cb_sum == 2);
      CHECK(row.ct_norm == doctest::Approx(3.4538593 / 3).epsilon(1e-6));
    }
  }
  CHECK(found_star);
  CHECK_THROWS_AS(ConflictAggregator({ConflictScope::string_global, ConflictMetric::ct, 0, true}),
                  std::invalid_argument);
}

TEST_CASE("string-in-article scope keys by page and string") {
  ConflictAggregator agg({ConflictScope::string_in_article, ConflictMetric::ct, 1, true});
  agg.add_article(fig1_article());
  auto rows = agg.finish();
  REQUIRE_FALSE(rows.empty());
  CHECK(rows[0].str == "star");
  CHECK(rows[0].page_id == fig1::kPageId);
  CHECK(rows[0].n == 1);
  CHECK(rows[0].ct_norm == doctest::Approx(3.4538593).epsilon(1e-6));
}

TEST_CASE("editor classification consults the bot list") {
  std::unordered_set<std::uint64_t> bots = {900};
  CHECK(classify_editor(EditorId::registered_user(900), bots) == EditorClass::bot);
  CHECK(classify_editor(EditorId::registered_user(7), bots) == EditorClass::registered);
  CHECK(classify_editor(EditorId::unregistered("900"), bots) == EditorClass::unregistered);
}

TEST_CASE("survival buckets for the four-revision article") {
  SurvivalAccumulator acc(fig1::kTime[3], 48 * 3600, {});
  acc.add_article(fig1_article());
  const auto& buckets = acc.buckets();
  REQUIRE(buckets.size() == 1);
  const SurvivalBucket& b = buckets.at(YearMonth{2016, 3});
  CHECK(b.added == 13);
  CHECK(b.died_within_horizon == 7);
  CHECK(b.survived_horizon_not_to_end == 4);
  CHECK(b.survived_to_end == 2);
  CHECK(b.survivors_registered == 6);
  CHECK(b.survivors_unregistered == 0);
  CHECK(b.survivors_bot == 0);
}

TEST_CASE("survival horizon boundary is strict") {
  auto make = [](UtcSeconds death_gap) {
    std::vector<SynthRevision> revisions = {
        {1, 1000000, "alpha beta", EditorId::registered_user(1)},
        {2, 1000000 + death_gap, "alpha", EditorId::registered_user(2)},
    };
    return simple_article(revisions);
  };
  SurvivalAccumulator at_horizon(2000000, 3600, {});
  at_horizon.add_article(make(3600));
  CHECK(at_horizon.buckets().begin()->second.died_within_horizon == 0);
  CHECK(at_horizon.buckets().begin()->second.survived_horizon_not_to_end == 1);

  SurvivalAccumulator just_under(2000000, 3600, {});
  just_under.add_article(make(3599));
  CHECK(just_under.buckets().begin()->second.died_within_horizon == 1);
}

TEST_CASE("horizon survivors split by origin editor class") {
  std::vector<SynthRevision> revisions = {
      {1, 1000, "alpha", EditorId::registered_user(900)},
      {2, 2000, "alpha beta", EditorId::unregistered("8.8.8.8")},
      {3, 3000, "alpha beta gamma", EditorId::registered_user(5)},
  };
  SurvivalAccumulator acc(10000000, 3600, {900});
  acc.add_article(simple_article(revisions));
  const SurvivalBucket& b = acc.buckets().begin()->second;
  CHECK(b.added == 3);
  CHECK(b.survivors_bot == 1);
  CHECK(b.survivors_unregistered == 1);
  CHECK(b.survivors_registered == 1);
}

TEST_CASE("tokens born after the dataset end are an integrity error") {
  std::vector<SynthRevision> revisions = {
      {1, 5000, "alpha", EditorId::registered_user(1)},
  };
  SurvivalAccumulator acc(4000, 3600, {});
  CHECK_THROWS_AS(acc.add_article(simple_article(revisions)), IntegrityError);
}

TEST_CASE("original action counts per revision") {
  auto article = fig1_article();
  auto counts = revision_action_counts(article);
  REQUIRE(counts.size() == 4);
  CHECK(counts.at(1001).adds == 6);
  CHECK(counts.at(1001).total() == 6);
  CHECK(counts.at(1002).adds == 6);
  CHECK(counts.at(1002).dels == 2);
  CHECK(counts.at(1003).adds == 1);
  CHECK(counts.at(1003).dels == 4);
  CHECK(counts.at(1003).res == 1);
  CHECK(counts.at(1003).total() == 6);
  CHECK(counts.at(1004).dels == 6);
  CHECK(counts.at(1004).res == 2);
  CHECK(counts.at(1004).total() == 8);
}

TEST_CASE("revert classification of the four-revision article") {
  auto article = fig1_article();
  auto pairs = classify_reverts(article.page_id, extract_undo_actions(article),
                                revision_action_counts(article));
  REQUIRE(pairs.size() == 4);
  auto find = [&](RevId acting, RevId target) -> const RevertClassification& {
    for (const auto& p : pairs)
      if (p.reverting_rev_id == acting && p.reverted_rev_id == target) return p;
    throw std::runtime_error("pair not found");
  };
  auto& p21 = find(1002, 1001);
  CHECK(p21.undone_actions == 2);
  CHECK(p21.target_original_actions == 6);
  CHECK_FALSE(p21.full);
  auto& p32 = find(1003, 1002);
  CHECK(p32.undone_actions == 5);
  CHECK(p32.target_original_actions == 8);
  auto& p41 = find(1004, 1001);
  CHECK(p41.undone_actions == 4);
  CHECK(p41.target_original_actions == 6);
  CHECK(p41.ratio == doctest::Approx(2.0 / 3.0));
  CHECK_FALSE(p41.full);
  CHECK_FALSE(p41.self);
  auto& p43 = find(1004, 1003);
  CHECK(p43.undone_actions == 4);
  CHECK(p43.target_original_actions == 6);
}

TEST_CASE("full reverts require every original action undone, by integer count") {
  std::vector<SynthRevision> revisions = {
      {1, 100, "alpha", EditorId::registered_user(1)},
      {2, 200, "alpha junk words", EditorId::registered_user(2)},
      {3, 300, "alpha", EditorId::registered_user(1)},
  };
  auto article = simple_article(revisions);
  auto pairs = classify_reverts(article.page_id, extract_undo_actions(article),
                                revision_action_counts(article));
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].reverting_rev_id == 3);
  CHECK(pairs[0].reverted_rev_id == 2);
  CHECK(pairs[0].undone_actions == 2);
  CHECK(pairs[0].target_original_actions == 2);
  CHECK(pairs[0].full);
  CHECK(pairs[0].ratio == 1.0);
  CHECK_FALSE(pairs[0].self);
}

TEST_CASE("self reverts carry the flag") {
  std::vector<SynthRevision> revisions = {
      {1, 100, "alpha", EditorId::registered_user(1)},
      {2, 200, "alpha oops", EditorId::registered_user(2)},
      {3, 300, "alpha", EditorId::registered_user(2)},  // editor removes their own addition
  };
  auto article = simple_article(revisions);
  auto pairs = classify_reverts(article.page_id, extract_undo_actions(article),
                                revision_action_counts(article));
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0].self);
  CHECK(pairs[0].full);
}

TEST_CASE("classify_reverts rejects targets without recorded actions") {
  UndoAction action;
  action.acting_rev_id = 9;
  action.target_rev_id = 7;
  CHECK_THROWS_AS(classify_reverts(1, {action}, {}), IntegrityError);
}

TEST_CASE("identity reverts pick the most recent matching revision") {
  std::string a = sha1_hex("state a");
  std::string b = sha1_hex("state b");
  std::string c = sha1_hex("state c");

  CHECK(identity_reverts({{1, a}, {2, b}, {3, c}}).empty());

  auto simple = identity_reverts({{1, a}, {2, b}, {3, a}});
  REQUIRE(simple.size() == 1);
  CHECK(simple[0].reverting_rev_id == 3);
  CHECK(simple[0].reverted_rev_id == 2);

  // a-b-a-b-a: every revert matches the nearest earlier occurrence
  auto seesaw = identity_reverts({{1, a}, {2, b}, {3, a}, {4, b}, {5, a}});
  REQUIRE(seesaw.size() == 3);
  CHECK(seesaw[0].reverting_rev_id == 3);
  CHECK(seesaw[0].reverted_rev_id == 2);
  CHECK(seesaw[1].reverting_rev_id == 4);
  CHECK(seesaw[1].reverted_rev_id == 3);
  CHECK(seesaw[2].reverting_rev_id == 5);
  CHECK(seesaw[2].reverted_rev_id == 4);

  // one revert spanning two revisions yields two pairs
  auto wide = identity_reverts({{1, a}, {2, b}, {3, c}, {4, a}});
  REQUIRE(wide.size() == 2);
  CHECK(wide[0].reverted_rev_id == 2);
  CHECK(wide[1].reverted_rev_id == 3);
  CHECK(wide[0].reverting_rev_id == 4);
}

TEST_CASE("revert analyzer summarizes the four-revision article") {
  auto article = fig1_article();
  std::vector<std::pair<RevId, std::string>> hashes;
  for (int i = 0; i < 4; ++i) hashes.emplace_back(fig1::kRev[i], sha1_hex(fig1::kText[i]));

  RevertAnalyzer analyzer;
  auto result = analyzer.add_article(article, hashes);
  CHECK(result.classifications.size() == 4);
  CHECK(result.identity_pairs.empty());

  const RevertSummary& s = analyzer.summary();
  CHECK(s.revisions == 4);
  CHECK(s.purely_adding == 1);    // only R1 adds without undoing anything
  CHECK(s.self_correcting == 0);
  CHECK(s.pairs == 4);
  CHECK(s.acting_cells[0][0] == 3);  // R2, R3, R4 all partial, none self
  CHECK(s.acting_cells[0][1] == 0);
  CHECK(s.acting_cells[1][0] == 0);
  CHECK(s.acting_cells[1][1] == 0);
  CHECK(s.target_cells[0][0] == 3);  // R1, R2, R3 each partially reverted

  // ratios 2/6, 5/8, 4/6, 4/6 land in the (0.33,0.34], (0.62,0.63], (0.66,0.67] bins
  CHECK(s.ratio_histogram[33] == 1);
  CHECK(s.ratio_histogram[62] == 1);
  CHECK(s.ratio_histogram[66] == 2);
  std::uint64_t ratio_total = 0;
  for (auto count : s.ratio_histogram) ratio_total += count;
  CHECK(ratio_total == 4);

  // undone counts 2, 5, 4, 4 fall in the [2,4) and [4,8) bins
  REQUIRE(s.undone_histogram.size() >= 3);
  CHECK(s.undone_histogram[1] == 1);
  CHECK(s.undone_histogram[2] == 3);

  CHECK(s.comparison.identity_pairs == 0);
  CHECK(s.comparison.token_full_pairs == 0);
}

TEST_CASE("revert analyzer cross-checks hash identity against token reverts") {
  std::vector<SynthRevision> revisions = {
      {1, 100, "alpha beta", EditorId::registered_user(1)},
      {2, 200, "alpha beta junk", EditorId::registered_user(2)},
      {3, 300, "alpha beta", EditorId::registered_user(1)},
  };
  auto article = simple_article(revisions);
  std::vector<std::pair<RevId, std::string>> hashes;
  for (const auto& rev : revisions) hashes.emplace_back(rev.rev_id, sha1_hex(rev.text));

  RevertAnalyzer analyzer;
  auto result = analyzer.add_article(article, hashes);
  REQUIRE(result.identity_pairs.size() == 1);
  CHECK(result.identity_pairs[0].reverting_rev_id == 3);
  CHECK(result.identity_pairs[0].reverted_rev_id == 2);

  const RevertSummary& s = analyzer.summary();
  CHECK(s.comparison.identity_pairs == 1);
  CHECK(s.comparison.identity_found_full == 1);
  CHECK(s.comparison.identity_found_partial == 0);
  CHECK(s.comparison.identity_not_found == 0);
  CHECK(s.comparison.token_full_pairs == 1);
  CHECK(s.comparison.token_full_found_by_identity == 1);
}

TEST_CASE("a restore with an extra addition is only caught by the token method") {
  std::vector<SynthRevision> revisions = {
      {1, 100, "alpha beta", EditorId::registered_user(1)},
      {2, 200, "alpha junk", EditorId::registered_user(2)},  // deletes beta, adds junk
      // restores the original paragraph and appends a new one
      {3, 300, "alpha beta\n\nextra", EditorId::registered_user(1)},
  };
  auto article = simple_article(revisions);
  std::vector<std::pair<RevId, std::string>> hashes;
  for (const auto& rev : revisions) hashes.emplace_back(rev.rev_id, sha1_hex(rev.text));

  RevertAnalyzer analyzer;
  auto result = analyzer.add_article(article, hashes);
  CHECK(result.identity_pairs.empty());
  // (2,1) partial from deleting beta, (3,2) full from the exact undo
  REQUIRE(result.classifications.size() == 2);
  const auto* restore = &result.classifications[0];
  for (const auto& p : result.classifications)
    if (p.reverting_rev_id == 3) restore = &p;
  CHECK(restore->reverting_rev_id == 3);
  CHECK(restore->reverted_rev_id == 2);
  CHECK(restore->full);

  const RevertSummary& s = analyzer.summary();
  CHECK(s.comparison.token_full_pairs == 1);
  CHECK(s.comparison.token_full_found_by_identity == 0);
  CHECK(s.comparison.identity_pairs == 0);
}

TEST_CASE("undo actions demand monotonic event times") {
  auto article = fig1_article();
  article.revisions[3].timestamp = article.revisions[0].timestamp - 10;
  CHECK_THROWS_AS(extract_undo_actions(article), IntegrityError);
}

TEST_CASE("undo actions demand known revisions") {
  auto article = fig1_article();
  article.tokens[0].out.push_back(424242);
  article.tokens[0].in.push_back(424243);
  CHECK_THROWS_AS(extract_undo_actions(article), IntegrityError);
}
