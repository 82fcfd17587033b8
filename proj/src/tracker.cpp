#include "toktrack/tracker.hpp"

#include <algorithm>
#include <limits>

#include "toktrack/hash.hpp"
#include "toktrack/lcs.hpp"
#include "toktrack/tokenizer.hpp"

namespace toktrack {

namespace {

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

// Hash of a token run; token lengths make the run unambiguous.
std::uint64_t hash_token_run(const std::string* toks, std::size_t count) {
  std::uint64_t h = 14695981039346656037ull;
  for (std::size_t k = 0; k < count; ++k) {
    std::uint64_t len = toks[k].size();
    h = fnv1a(std::string_view(reinterpret_cast<const char*>(&len), sizeof(len)), h);
    h = fnv1a(toks[k], h);
  }
  return h;
}

}  // namespace

bool ArticleTracker::sentence_equals(const SentenceInstance& inst, const std::string* slots,
                                     std::size_t count) const {
  if (inst.token_ids.size() != count) return false;
  for (std::size_t k = 0; k < count; ++k) {
    if (tokens_[inst.token_ids[k] - 1].str != slots[k]) return false;
  }
  return true;
}

bool ArticleTracker::paragraph_equals(const ParagraphInstance& inst, const std::string* slots,
                                      std::size_t count) const {
  if (inst.token_count != count) return false;
  std::size_t k = 0;
  for (std::uint32_t sid : inst.sentence_ids) {
    for (TokenId t : sentences_[sid].token_ids) {
      if (tokens_[t - 1].str != slots[k++]) return false;
    }
  }
  return true;
}

std::uint32_t ArticleTracker::upsert_sentence(std::uint64_t hash, const TokenId* ids,
                                              std::size_t count, RevId rev) {
  auto& bucket = sentence_index_[hash];
  for (std::uint32_t sid : bucket) {
    auto& inst = sentences_[sid];
    if (inst.token_ids.size() == count &&
        std::equal(ids, ids + count, inst.token_ids.begin())) {
      inst.last_seen = rev;
      return sid;
    }
  }
  auto sid = static_cast<std::uint32_t>(sentences_.size());
  sentences_.push_back(SentenceInstance{hash, std::vector<TokenId>(ids, ids + count), rev, 0});
  bucket.push_back(sid);
  return sid;
}

std::uint32_t ArticleTracker::upsert_paragraph(std::uint64_t hash,
                                               std::vector<std::uint32_t> sentence_ids,
                                               std::uint32_t token_count, RevId rev) {
  auto& bucket = paragraph_index_[hash];
  for (std::uint32_t pid : bucket) {
    auto& inst = paragraphs_[pid];
    if (inst.sentence_ids == sentence_ids) {
      inst.last_seen = rev;
      return pid;
    }
  }
  auto pid = static_cast<std::uint32_t>(paragraphs_.size());
  paragraphs_.push_back(ParagraphInstance{hash, std::move(sentence_ids), token_count, rev, 0});
  bucket.push_back(pid);
  return pid;
}

RevisionEvents ArticleTracker::process_revision(RevId rev_id, UtcSeconds timestamp,
                                                std::string_view text) {
  if (!rev_order_.empty()) {
    UtcSeconds last = rev_times_.back();
    if (timestamp < last || (timestamp == last && rev_id <= rev_order_.back())) {
      throw OrderingError("revision " + std::to_string(rev_id) + " out of order on page " +
                          std::to_string(page_id_));
    }
  }
  if (rev_index_.contains(rev_id)) {
    throw OrderingError("duplicate revision " + std::to_string(rev_id) + " on page " +
                        std::to_string(page_id_));
  }
  ++epoch_;

  // Flatten the structured tokenization into one slot list plus ranges.
  struct NewSentence {
    std::uint64_t hash;
    std::uint32_t slot_begin, slot_end;
  };
  struct NewParagraph {
    std::uint64_t hash;
    std::uint32_t sent_begin, sent_end;
    std::uint32_t slot_begin, slot_end;
  };
  std::vector<std::string> slots;
  std::vector<NewSentence> new_sents;
  std::vector<NewParagraph> new_paras;
  {
    auto structure = tokenize_structured(text);
    for (auto& para : structure) {
      NewParagraph np;
      np.sent_begin = static_cast<std::uint32_t>(new_sents.size());
      np.slot_begin = static_cast<std::uint32_t>(slots.size());
      for (auto& sent : para.sentences) {
        NewSentence ns;
        ns.slot_begin = static_cast<std::uint32_t>(slots.size());
        for (auto& tok : sent.tokens) slots.push_back(std::move(tok));
        ns.slot_end = static_cast<std::uint32_t>(slots.size());
        ns.hash = hash_token_run(slots.data() + ns.slot_begin, ns.slot_end - ns.slot_begin);
        new_sents.push_back(ns);
      }
      np.sent_end = static_cast<std::uint32_t>(new_sents.size());
      np.slot_end = static_cast<std::uint32_t>(slots.size());
      np.hash = hash_token_run(slots.data() + np.slot_begin, np.slot_end - np.slot_begin);
      new_paras.push_back(np);
    }
  }

  if (bound_epoch_.size() < tokens_.size() + 1) bound_epoch_.resize(tokens_.size() + 1, 0);
  if (in_prev_epoch_.size() < tokens_.size() + 1) in_prev_epoch_.resize(tokens_.size() + 1, 0);
  for (TokenId t : prev_tokens_) in_prev_epoch_[t] = epoch_;

  std::vector<TokenId> binding(slots.size(), 0);
  auto bind_run = [&](const TokenId* ids, std::size_t count, std::uint32_t slot_begin) {
    for (std::size_t k = 0; k < count; ++k) {
      TokenId t = ids[k];
      if (bound_epoch_[t] != epoch_) {
        bound_epoch_[t] = epoch_;
        binding[slot_begin + k] = t;
      }
    }
  };

  std::vector<TokenId> run;  // scratch: flattened token ids of one paragraph instance
  auto flatten_paragraph = [&](const ParagraphInstance& inst) {
    run.clear();
    for (std::uint32_t sid : inst.sentence_ids) {
      const auto& s = sentences_[sid];
      run.insert(run.end(), s.token_ids.begin(), s.token_ids.end());
    }
  };

  // Stage 1: whole paragraphs, previous revision first, then any structure
  // version the article ever contained (most recently seen wins).
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> prev_para_by_hash;
  for (std::uint32_t pid : prev_paragraphs_) prev_para_by_hash[paragraphs_[pid].hash].push_back(pid);

  std::vector<std::uint8_t> para_matched(new_paras.size(), 0);
  for (std::size_t p = 0; p < new_paras.size(); ++p) {
    const auto& np = new_paras[p];
    const std::string* sl = slots.data() + np.slot_begin;
    const std::size_t count = np.slot_end - np.slot_begin;
    std::uint32_t chosen = kNone;
    if (auto it = prev_para_by_hash.find(np.hash); it != prev_para_by_hash.end()) {
      for (std::uint32_t pid : it->second) {
        const auto& inst = paragraphs_[pid];
        if (inst.used_epoch != epoch_ && paragraph_equals(inst, sl, count)) {
          chosen = pid;
          break;
        }
      }
    }
    if (chosen == kNone) {
      if (auto it = paragraph_index_.find(np.hash); it != paragraph_index_.end()) {
        for (std::uint32_t pid : it->second) {
          const auto& inst = paragraphs_[pid];
          if (inst.used_epoch == epoch_ || !paragraph_equals(inst, sl, count)) continue;
          if (chosen == kNone || inst.last_seen > paragraphs_[chosen].last_seen ||
              (inst.last_seen == paragraphs_[chosen].last_seen && pid > chosen)) {
            chosen = pid;
          }
        }
      }
    }
    if (chosen != kNone) {
      auto& inst = paragraphs_[chosen];
      inst.used_epoch = epoch_;
      for (std::uint32_t sid : inst.sentence_ids) sentences_[sid].used_epoch = epoch_;
      flatten_paragraph(inst);
      bind_run(run.data(), run.size(), np.slot_begin);
      para_matched[p] = 1;
    }
  }

  // Stage 2: sentences of unmatched paragraphs, same lookup order.
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> prev_sent_by_hash;
  for (std::uint32_t pid : prev_paragraphs_) {
    const auto& pp = paragraphs_[pid];
    if (pp.used_epoch == epoch_) continue;
    for (std::uint32_t sid : pp.sentence_ids) prev_sent_by_hash[sentences_[sid].hash].push_back(sid);
  }
  for (std::size_t p = 0; p < new_paras.size(); ++p) {
    if (para_matched[p]) continue;
    const auto& np = new_paras[p];
    for (std::uint32_t s = np.sent_begin; s < np.sent_end; ++s) {
      const auto& ns = new_sents[s];
      const std::string* sl = slots.data() + ns.slot_begin;
      const std::size_t count = ns.slot_end - ns.slot_begin;
      std::uint32_t chosen = kNone;
      if (auto it = prev_sent_by_hash.find(ns.hash); it != prev_sent_by_hash.end()) {
        for (std::uint32_t sid : it->second) {
          const auto& inst = sentences_[sid];
          if (inst.used_epoch != epoch_ && sentence_equals(inst, sl, count)) {
            chosen = sid;
            break;
          }
        }
      }
      if (chosen == kNone) {
        if (auto it = sentence_index_.find(ns.hash); it != sentence_index_.end()) {
          for (std::uint32_t sid : it->second) {
            const auto& inst = sentences_[sid];
            if (inst.used_epoch == epoch_ || !sentence_equals(inst, sl, count)) continue;
            if (chosen == kNone || inst.last_seen > sentences_[chosen].last_seen ||
                (inst.last_seen == sentences_[chosen].last_seen && sid > chosen)) {
              chosen = sid;
            }
          }
        }
      }
      if (chosen != kNone) {
        auto& inst = sentences_[chosen];
        inst.used_epoch = epoch_;
        bind_run(inst.token_ids.data(), inst.token_ids.size(), ns.slot_begin);
      }
    }
  }

  // Stage 3: LCS over the remaining tokens of both revisions.
  std::vector<std::uint32_t> open_slots;
  for (std::uint32_t i = 0; i < binding.size(); ++i) {
    if (binding[i] == 0) open_slots.push_back(i);
  }
  std::vector<std::uint32_t> open_prev;
  for (std::uint32_t i = 0; i < prev_tokens_.size(); ++i) {
    if (bound_epoch_[prev_tokens_[i]] != epoch_) open_prev.push_back(i);
  }
  if (!open_slots.empty() && !open_prev.empty()) {
    auto intern = [&](const std::string& s) {
      auto [it, inserted] = symbol_ids_.try_emplace(s, static_cast<std::uint32_t>(symbol_ids_.size()));
      (void)inserted;
      return it->second;
    };
    std::vector<std::uint32_t> a_ids, b_ids;
    a_ids.reserve(open_prev.size());
    b_ids.reserve(open_slots.size());
    for (auto pos : open_prev) a_ids.push_back(intern(tokens_[prev_tokens_[pos] - 1].str));
    for (auto slot : open_slots) b_ids.push_back(intern(slots[slot]));
    for (auto [pa, pb] : lcs_align_ids(a_ids, b_ids)) {
      TokenId t = prev_tokens_[open_prev[pa]];
      bound_epoch_[t] = epoch_;
      binding[open_slots[pb]] = t;
    }
  }

  RevisionEvents ev;
  ev.rev_id = rev_id;

  // Remaining slots are first appearances.
  for (std::uint32_t i : open_slots) {
    if (binding[i] != 0) continue;
    auto id = static_cast<TokenId>(tokens_.size() + 1);
    tokens_.push_back(TokenHistory{id, slots[i], rev_id, 0, {}, {}});
    binding[i] = id;
    ev.adds.push_back(id);
  }

  // Reintroductions: bound tokens that were absent from the previous
  // revision and are not new. Only historical structure matches produce
  // these.
  for (TokenId t : binding) {
    auto& th = tokens_[t - 1];
    if (th.origin_rev_id == rev_id) continue;
    if (in_prev_epoch_[t] == epoch_) continue;
    th.in.push_back(rev_id);
    ev.res.push_back(t);
  }

  // Deletions: previous-revision tokens that nothing claimed.
  for (TokenId t : prev_tokens_) {
    if (bound_epoch_[t] != epoch_) {
      tokens_[t - 1].out.push_back(rev_id);
      ev.dels.push_back(t);
    }
  }

  // Re-register the new revision's structure so later revisions can match
  // against it; unchanged parts collapse onto their existing instances.
  std::vector<std::uint32_t> new_prev_paras;
  new_prev_paras.reserve(new_paras.size());
  std::vector<std::uint32_t> sids;
  for (const auto& np : new_paras) {
    sids.clear();
    for (std::uint32_t s = np.sent_begin; s < np.sent_end; ++s) {
      const auto& ns = new_sents[s];
      sids.push_back(upsert_sentence(ns.hash, binding.data() + ns.slot_begin,
                                     ns.slot_end - ns.slot_begin, rev_id));
    }
    new_prev_paras.push_back(upsert_paragraph(np.hash, sids, np.slot_end - np.slot_begin, rev_id));
  }
  prev_paragraphs_ = std::move(new_prev_paras);
  prev_tokens_ = std::move(binding);
  rev_index_.emplace(rev_id, static_cast<std::uint32_t>(rev_order_.size()));
  rev_order_.push_back(rev_id);
  rev_times_.push_back(timestamp);
  return ev;
}

ArticleTracker::Partition ArticleTracker::finalize() {
  Partition part;
  if (rev_order_.empty()) return part;
  const RevId final_rev = rev_order_.back();
  for (auto& t : tokens_) {
    if (t.present()) {
      t.last_rev_id = final_rev;
      part.current.push_back(t.token_id);
    } else {
      std::uint32_t oi = rev_index_.at(t.out.back());
      t.last_rev_id = rev_order_[oi - 1];
      part.deleted.push_back(t.token_id);
    }
  }
  return part;
}

std::unordered_map<std::string, std::uint32_t> ArticleTracker::reconstruct_revision(
    RevId rev_id) const {
  auto it = rev_index_.find(rev_id);
  if (it == rev_index_.end()) {
    throw std::out_of_range("unknown revision " + std::to_string(rev_id) + " on page " +
                            std::to_string(page_id_));
  }
  const std::uint32_t upto = it->second;
  std::unordered_map<std::string, std::uint32_t> counts;
  for (const auto& t : tokens_) {
    if (rev_index_.at(t.origin_rev_id) > upto) continue;
    std::size_t outs = 0, ins = 0;
    for (RevId r : t.out) {
      if (rev_index_.at(r) <= upto) ++outs;
    }
    for (RevId r : t.in) {
      if (rev_index_.at(r) <= upto) ++ins;
    }
    if (outs == ins) ++counts[t.str];
  }
  return counts;
}

ArticleTracker::StorageStats ArticleTracker::storage_stats() const {
  StorageStats st;
  st.sentence_instances = sentences_.size();
  st.paragraph_instances = paragraphs_.size();
  for (const auto& s : sentences_) st.stored_token_slots += s.token_ids.size();
  return st;
}

}  // namespace toktrack
