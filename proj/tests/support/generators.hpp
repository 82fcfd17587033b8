#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "toktrack/analytics.hpp"
#include "toktrack/editor.hpp"
#include "toktrack/tracker.hpp"
#include "toktrack/types.hpp"

namespace testsupport {

// Quadratic reference LCS, length only.
inline std::size_t naive_lcs_len(const std::vector<std::string>& a,
                                 const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline bool is_common_subsequence(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b,
                                  const std::vector<std::pair<std::uint32_t, std::uint32_t>>& m) {
  for (std::size_t k = 0; k < m.size(); ++k) {
    auto [i, j] = m[k];
    if (i >= a.size() || j >= b.size() || a[i] != b[j]) return false;
    if (k > 0 && (m[k - 1].first >= i || m[k - 1].second >= j)) return false;
  }
  return true;
}

inline const std::vector<std::string>& vocab() {
  static const std::vector<std::string> words = {
      "alpha",  "beta",   "gamma",   "delta", "epsilon",   "zeta",  "eta",   "theta",
      "iota",   "kappa",  "lambda",  "mu",    "nu",        "xi",    "pi",    "rho",
      "sigma",  "tau",    "omega",   "Beta",  "GAMMA",     "naïve", "übung", "łódź",
      "москва", "αθήνα",  "東京",    "x1",    "y2",        "z_3",   "q42",   "ssv",
      "tree",   "stone",  "river",   "cloud", "mountain",  "bird",  "fish",  "wind",
  };
  return words;
}

// A text modeled as paragraphs of sentences; every mutation mirrors a
// plausible edit: insert, delete, move, duplicate, word swap or a full
// restore of an earlier snapshot.
class TextState {
 public:
  using Snapshot = std::vector<std::vector<std::string>>;

  explicit TextState(std::mt19937& rng) {
    int paragraphs = 1 + static_cast<int>(rng() % 3);
    for (int p = 0; p < paragraphs; ++p) paras_.push_back(random_paragraph(rng));
  }

  void mutate(std::mt19937& rng) {
    int ops = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < ops; ++i) apply_one(rng);
    cap_tokens(500);
  }

  void restore(const Snapshot& snapshot) { paras_ = snapshot; }
  const Snapshot& snapshot() const { return paras_; }

  std::string render() const {
    std::string out;
    for (std::size_t p = 0; p < paras_.size(); ++p) {
      if (p) out += "\n\n";
      for (std::size_t s = 0; s < paras_[p].size(); ++s) {
        if (s) out += '\n';
        out += paras_[p][s];
      }
    }
    return out;
  }

 private:
  static std::string random_sentence(std::mt19937& rng) {
    int words = 1 + static_cast<int>(rng() % 8);
    std::string out;
    for (int w = 0; w < words; ++w) {
      if (w) out += (rng() % 6 == 0) ? ", " : " ";
      out += vocab()[rng() % vocab().size()];
    }
    switch (rng() % 4) {
      case 0: out += '.'; break;
      case 1: out += '!'; break;
      case 2: out += '?'; break;
      default: break;
    }
    return out;
  }

  static std::vector<std::string> random_paragraph(std::mt19937& rng) {
    int sentences = 1 + static_cast<int>(rng() % 4);
    std::vector<std::string> out;
    for (int s = 0; s < sentences; ++s) out.push_back(random_sentence(rng));
    return out;
  }

  void apply_one(std::mt19937& rng) {
    if (paras_.empty()) {
      paras_.push_back(random_paragraph(rng));
      return;
    }
    std::size_t p = rng() % paras_.size();
    auto& sentences = paras_[p];
    switch (rng() % 8) {
      case 0:  // insert sentence
        sentences.insert(sentences.begin() + static_cast<long>(rng() % (sentences.size() + 1)),
                         random_sentence(rng));
        break;
      case 1:  // delete sentence
        if (!sentences.empty()) sentences.erase(sentences.begin() + static_cast<long>(rng() % sentences.size()));
        if (sentences.empty()) paras_.erase(paras_.begin() + static_cast<long>(p));
        break;
      case 2: {  // move sentence across paragraphs
        if (sentences.empty()) break;
        std::size_t s = rng() % sentences.size();
        std::string moved = sentences[s];
        sentences.erase(sentences.begin() + static_cast<long>(s));
        if (sentences.empty()) paras_.erase(paras_.begin() + static_cast<long>(p));
        auto& target = paras_.empty() ? (paras_.emplace_back(), paras_.back())
                                      : paras_[rng() % paras_.size()];
        target.insert(target.begin() + static_cast<long>(rng() % (target.size() + 1)), moved);
        break;
      }
      case 3:  // duplicate sentence (repeated content)
        if (!sentences.empty()) sentences.push_back(sentences[rng() % sentences.size()]);
        break;
      case 4: {  // move paragraph
        std::size_t q = rng() % paras_.size();
        std::swap(paras_[p], paras_[q]);
        break;
      }
      case 5:  // new paragraph
        paras_.insert(paras_.begin() + static_cast<long>(rng() % (paras_.size() + 1)),
                      random_paragraph(rng));
        break;
      case 6:  // delete paragraph
        if (paras_.size() > 1) paras_.erase(paras_.begin() + static_cast<long>(p));
        break;
      default:  // rewrite one sentence
        if (!sentences.empty()) sentences[rng() % sentences.size()] = random_sentence(rng);
        break;
    }
  }

  void cap_tokens(std::size_t max_words) {
    std::size_t words = 0;
    for (const auto& para : paras_)
      for (const auto& s : para) words += 1 + std::count(s.begin(), s.end(), ' ');
    while (words > max_words && paras_.size() > 1) {
      for (const auto& s : paras_.back()) words -= 1 + std::count(s.begin(), s.end(), ' ');
      paras_.pop_back();
    }
  }

  Snapshot paras_;
};

struct SynthRevision {
  toktrack::RevId rev_id = 0;
  toktrack::UtcSeconds timestamp = 0;
  std::string text;
  toktrack::EditorId editor;
};

inline toktrack::EditorId random_editor(std::mt19937& rng) {
  switch (rng() % 4) {
    case 0: return toktrack::EditorId::unregistered(std::to_string(rng() % 200) + ".0.0.1");
    case 1: return toktrack::EditorId::registered_user(900 + rng() % 2);  // bot-listed ids
    default: return toktrack::EditorId::registered_user(1 + rng() % 6);
  }
}

// Random history with insert/delete/move/duplicate edits plus occasional
// full restores of an earlier revision.
inline std::vector<SynthRevision> random_history(std::uint32_t seed, int max_revisions = 100) {
  std::mt19937 rng(seed);
  TextState state(rng);
  std::vector<TextState::Snapshot> snapshots;
  std::vector<SynthRevision> out;
  int revisions = 2 + static_cast<int>(rng() % std::max(1, max_revisions - 1));
  toktrack::UtcSeconds ts = 1400000000 + static_cast<toktrack::UtcSeconds>(rng() % 1000000);
  toktrack::RevId rev_id = 100 + rng() % 50;
  for (int r = 0; r < revisions; ++r) {
    if (r > 0) {
      if (!snapshots.empty() && rng() % 6 == 0) {
        state.restore(snapshots[rng() % snapshots.size()]);
        if (rng() % 2 == 0) state.mutate(rng);  // restore plus follow-up edit
      } else {
        state.mutate(rng);
      }
    }
    snapshots.push_back(state.snapshot());
    out.push_back({rev_id, ts, state.render(), random_editor(rng)});
    rev_id += 1 + rng() % 9;
    ts += 1 + static_cast<toktrack::UtcSeconds>(rng() % 200000);
  }
  return out;
}

// History from the constrained edit model where token-based full reverts
// and hash-identity reverts must coincide: ordinary edits only append lines
// of never-seen words, vandalism cycles either append junk or delete one
// never-deleted word of a multi-word line, and every cycle ends with an
// exact restore that does nothing else. Re-deleting a restored word would
// fully undo the one-action restore without recreating any earlier content
// hash, so vandals only touch words no revision has deleted before.
inline std::vector<SynthRevision> random_consistency_history(std::uint32_t seed) {
  std::mt19937 rng(seed);
  std::vector<std::vector<std::string>> lines;  // line i added by exactly one revision
  std::vector<std::vector<bool>> virgin;        // word never deleted by a vandal
  std::uint64_t next_word = 0;
  auto fresh_line = [&](int min_words) {
    std::vector<std::string> line;
    int words = min_words + static_cast<int>(rng() % 4);
    for (int w = 0; w < words; ++w) line.push_back("w" + std::to_string(next_word++));
    return line;
  };
  auto render = [&] {
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      if (i) out += '\n';
      for (std::size_t w = 0; w < lines[i].size(); ++w) {
        if (w) out += ' ';
        out += lines[i][w];
      }
    }
    return out;
  };

  std::vector<SynthRevision> out;
  toktrack::UtcSeconds ts = 1450000000;
  toktrack::RevId rev_id = 500;
  auto emit = [&](const toktrack::EditorId& editor) {
    out.push_back({rev_id, ts, render(), editor});
    rev_id += 1 + rng() % 5;
    ts += 30 + static_cast<toktrack::UtcSeconds>(rng() % 100000);
  };

  auto append_fresh = [&](int min_words) {
    lines.push_back(fresh_line(min_words));
    virgin.emplace_back(lines.back().size(), true);
  };

  append_fresh(2);
  emit(toktrack::EditorId::registered_user(1));

  int segments = 6 + static_cast<int>(rng() % 12);
  for (int s = 0; s < segments; ++s) {
    unsigned kind = rng() % 10;
    if (kind < 5) {  // ordinary growth
      append_fresh(1);
      emit(toktrack::EditorId::registered_user(1 + rng() % 4));
    } else if (kind < 8) {  // junk addition, then exact restore
      auto before = lines;
      append_fresh(1);
      if (rng() % 3 == 0) append_fresh(1);
      emit(toktrack::EditorId::registered_user(50 + rng() % 3));
      lines = before;
      virgin.resize(lines.size());
      emit(toktrack::EditorId::registered_user(1 + rng() % 4));
    } else {  // blanking one untouched word of a line, then exact restore
      std::vector<std::pair<std::size_t, std::size_t>> targets;
      for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].size() < 2) continue;
        for (std::size_t w = 0; w < lines[i].size(); ++w)
          if (virgin[i][w]) targets.emplace_back(i, w);
      }
      if (targets.empty()) continue;
      auto [i, w] = targets[rng() % targets.size()];
      auto before = lines;
      lines[i].erase(lines[i].begin() + static_cast<long>(w));
      emit(toktrack::EditorId::registered_user(50 + rng() % 3));
      lines = before;
      virgin[i][w] = false;
      emit(toktrack::EditorId::registered_user(1 + rng() % 4));
    }
  }
  return out;
}

// Empty string when the provenance invariants hold for a finalized article,
// else a description of the first violation. rev_order must be the article's
// processed revision ids in order.
inline std::string invariant_violation(const std::vector<toktrack::TokenHistory>& tokens,
                                       const std::vector<toktrack::RevId>& rev_order) {
  std::unordered_map<toktrack::RevId, std::size_t> index;
  for (std::size_t i = 0; i < rev_order.size(); ++i) index[rev_order[i]] = i;
  auto fail = [](toktrack::TokenId id, const std::string& what) {
    return "token " + std::to_string(id) + ": " + what;
  };
  for (std::size_t k = 0; k < tokens.size(); ++k) {
    const auto& t = tokens[k];
    if (t.token_id != k + 1) return fail(t.token_id, "ids not gapless from 1");
    if (t.str.empty()) return fail(t.token_id, "empty string");
    if (t.out.size() != t.in.size() && t.out.size() != t.in.size() + 1)
      return fail(t.token_id, "|out| - |in| not in {0, 1}");
    if (t.present() != (t.out.size() == t.in.size()))
      return fail(t.token_id, "present() disagrees with list sizes");
    if (!index.count(t.origin_rev_id)) return fail(t.token_id, "unknown origin revision");
    std::size_t prev = index[t.origin_rev_id];
    for (std::size_t e = 0; e < t.out.size() + t.in.size(); ++e) {
      toktrack::RevId rev = e % 2 == 0 ? t.out[e / 2] : t.in[e / 2];
      if (!index.count(rev)) return fail(t.token_id, "unknown event revision");
      if (index[rev] <= prev) return fail(t.token_id, "events not strictly interleaved");
      prev = index[rev];
    }
  }
  return "";
}

inline toktrack::ArticleTracker run_tracker(toktrack::PageId page_id,
                                            const std::vector<SynthRevision>& revisions) {
  toktrack::ArticleTracker tracker(page_id);
  for (const auto& rev : revisions) tracker.process_revision(rev.rev_id, rev.timestamp, rev.text);
  return tracker;
}

inline toktrack::ArticleHistory make_article_history(toktrack::ArticleTracker& tracker,
                                                     const std::vector<SynthRevision>& revisions) {
  toktrack::ArticleHistory article;
  article.page_id = tracker.page_id();
  for (const auto& rev : revisions)
    article.revisions.push_back({rev.rev_id, rev.timestamp, rev.editor});
  tracker.finalize();
  article.tokens = tracker.tokens();
  return article;
}

}  // namespace testsupport
