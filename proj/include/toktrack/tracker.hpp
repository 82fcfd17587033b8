#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "toktrack/types.hpp"

namespace toktrack {

// Full provenance of one token within one article.
//
// `out` holds the revisions that removed the token, `in` the revisions that
// reintroduced it afterwards; events strictly interleave starting with the
// origin, so |out| - |in| is 0 (token currently present) or 1 (deleted).
struct TokenHistory {
  TokenId token_id = 0;
  std::string str;
  RevId origin_rev_id = 0;
  RevId last_rev_id = 0;  // filled in by ArticleTracker::finalize
  std::vector<RevId> out;
  std::vector<RevId> in;

  bool present() const { return out.size() == in.size(); }
};

// Token events produced by one revision, in document order for adds and
// reintroductions and previous-revision order for deletions. Tokens that
// merely moved produce no event.
struct RevisionEvents {
  RevId rev_id = 0;
  std::vector<TokenId> adds;
  std::vector<TokenId> dels;
  std::vector<TokenId> res;

  std::size_t total() const { return adds.size() + dels.size() + res.size(); }
};

class OrderingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tracks token identity across the revision history of a single article.
//
// Each revision is matched against the article state at three granularities:
// whole paragraphs, then sentences of unmatched paragraphs, then a
// longest-common-subsequence alignment of the remaining tokens. Paragraph
// and sentence matches consult the previous revision first and then an index
// of every structure version the article has ever contained, which is what
// lets a reintroduced block revive the original token identities.
class ArticleTracker {
 public:
  explicit ArticleTracker(PageId page_id) : page_id_(page_id) {}

  // Feeds the next revision in article order (ascending timestamp, ties by
  // rev id). Throws OrderingError when the order is violated or a rev id
  // repeats.
  RevisionEvents process_revision(RevId rev_id, UtcSeconds timestamp, std::string_view text);

  PageId page_id() const { return page_id_; }
  const std::vector<TokenHistory>& tokens() const { return tokens_; }
  const std::vector<RevId>& revision_ids() const { return rev_order_; }

  struct Partition {
    std::vector<TokenId> current;
    std::vector<TokenId> deleted;
  };

  // Sets last_rev_id on every token (final revision for surviving tokens,
  // the revision just before the final removal otherwise) and partitions
  // token ids by final presence.
  Partition finalize();

  // Token multiset of the article text as of the given revision, rebuilt
  // from provenance alone. Throws std::out_of_range for unknown rev ids.
  std::unordered_map<std::string, std::uint32_t> reconstruct_revision(RevId rev_id) const;

  struct StorageStats {
    std::size_t sentence_instances = 0;
    std::size_t paragraph_instances = 0;
    std::size_t stored_token_slots = 0;  // token refs held by sentence instances
  };
  StorageStats storage_stats() const;

 private:
  struct SentenceInstance {
    std::uint64_t hash = 0;
    std::vector<TokenId> token_ids;
    RevId last_seen = 0;
    std::uint64_t used_epoch = 0;
  };

  struct ParagraphInstance {
    std::uint64_t hash = 0;
    std::vector<std::uint32_t> sentence_ids;
    std::uint32_t token_count = 0;
    RevId last_seen = 0;
    std::uint64_t used_epoch = 0;
  };

  bool sentence_equals(const SentenceInstance& inst, const std::string* slots, std::size_t count) const;
  bool paragraph_equals(const ParagraphInstance& inst, const std::string* slots, std::size_t count) const;
  std::uint32_t upsert_sentence(std::uint64_t hash, const TokenId* ids, std::size_t count, RevId rev);
  std::uint32_t upsert_paragraph(std::uint64_t hash, std::vector<std::uint32_t> sentence_ids,
                                 std::uint32_t token_count, RevId rev);

  PageId page_id_ = 0;
  std::vector<TokenHistory> tokens_;
  std::vector<SentenceInstance> sentences_;
  std::vector<ParagraphInstance> paragraphs_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> sentence_index_;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> paragraph_index_;
  std::vector<std::uint32_t> prev_paragraphs_;
  std::vector<TokenId> prev_tokens_;
  std::vector<RevId> rev_order_;
  std::vector<UtcSeconds> rev_times_;
  std::unordered_map<RevId, std::uint32_t> rev_index_;
  std::unordered_map<std::string, std::uint32_t> symbol_ids_;
  std::vector<std::uint64_t> bound_epoch_;  // indexed by token id
  std::vector<std::uint64_t> in_prev_epoch_;
  std::uint64_t epoch_ = 0;
};

}  // namespace toktrack
