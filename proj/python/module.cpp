#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstdint>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "toktrack/analytics.hpp"
#include "toktrack/editor.hpp"
#include "toktrack/tokenizer.hpp"
#include "toktrack/tracker.hpp"

namespace py = pybind11;

namespace {

using namespace toktrack;

EditorId editor_from(const py::object& value) {
  if (py::isinstance<EditorId>(value)) return value.cast<EditorId>();
  if (py::isinstance<py::int_>(value)) return EditorId::registered_user(value.cast<std::uint64_t>());
  if (py::isinstance<py::str>(value)) return EditorId::unregistered(value.cast<std::string>());
  throw py::type_error("editor must be an int user id, an identifier string or an EditorId");
}

// (rev_id, timestamp, editor, text) in article order
using RevisionTuple = std::tuple<RevId, std::int64_t, py::object, std::string>;

ArticleHistory track_article_py(PageId page_id, const std::vector<RevisionTuple>& revisions) {
  ArticleTracker tracker(page_id);
  ArticleHistory article;
  article.page_id = page_id;
  article.revisions.reserve(revisions.size());
  for (const auto& [rev_id, timestamp, editor, text] : revisions) {
    tracker.process_revision(rev_id, timestamp, text);
    article.revisions.push_back({rev_id, timestamp, editor_from(editor)});
  }
  tracker.finalize();
  article.tokens = tracker.tokens();
  return article;
}

std::vector<RevertClassification> revert_classifications_py(const ArticleHistory& article) {
  return classify_reverts(article.page_id, extract_undo_actions(article),
                          revision_action_counts(article));
}

std::string format_ids(const std::vector<RevId>& ids) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (i) out << ", ";
    out << ids[i];
  }
  out << ']';
  return out.str();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Token provenance tracking for revisioned wiki page histories";

  py::register_exception<OrderingError>(m, "OrderingError", PyExc_ValueError);
  py::register_exception<IntegrityError>(m, "IntegrityError", PyExc_ValueError);

  m.def(
      "tokenize", [](std::string_view text) { return tokenize(text); }, py::arg("text"),
      "Splits text into lowercased words and single-character special tokens.");

  py::class_<EditorId>(m, "EditorId", "Editor identity as stored in the dataset.")
      .def_static("registered_user", &EditorId::registered_user, py::arg("user_id"))
      .def_static("unregistered", &EditorId::unregistered, py::arg("identifier"))
      .def_static("parse", &EditorId::parse, py::arg("field"))
      .def("is_registered", &EditorId::is_registered)
      .def("user_id", &EditorId::user_id, "Numeric user id; raises for unregistered editors.")
      .def_readonly("value", &EditorId::value, "serialized form: user id or \"0|<identifier>\"")
      .def(py::self == py::self)
      .def(py::self != py::self)
      .def("__hash__", [](const EditorId& e) { return py::hash(py::cast(e.value)); })
      .def("__repr__", [](const EditorId& e) { return "EditorId('" + e.value + "')"; });

  py::class_<TokenHistory>(m, "Token",
                           "Full provenance of one token within one article. `out` holds the\n"
                           "revisions that removed the token, `in_` the revisions that\n"
                           "reintroduced it afterwards.")
      .def_readonly("token_id", &TokenHistory::token_id)
      .def_readonly("str", &TokenHistory::str)
      .def_readonly("origin_rev_id", &TokenHistory::origin_rev_id)
      .def_readonly("last_rev_id", &TokenHistory::last_rev_id)
      .def_readonly("out", &TokenHistory::out)
      .def_readonly("in_", &TokenHistory::in)
      .def_property_readonly("present", &TokenHistory::present)
      .def("__repr__", [](const TokenHistory& t) {
        return "Token(" + std::to_string(t.token_id) + ", '" + t.str +
               "', origin=" + std::to_string(t.origin_rev_id) + ", out=" + format_ids(t.out) +
               ", in_=" + format_ids(t.in) + ")";
      });

  py::class_<RevisionEvents>(m, "RevisionEvents", "Token events produced by one revision.")
      .def_readonly("rev_id", &RevisionEvents::rev_id)
      .def_readonly("adds", &RevisionEvents::adds)
      .def_readonly("dels", &RevisionEvents::dels)
      .def_readonly("res", &RevisionEvents::res)
      .def("total", &RevisionEvents::total);

  py::class_<ArticleTracker> tracker(
      m, "ArticleTracker", "Tracks token identity across the revision history of one article.");
  py::class_<ArticleTracker::Partition>(tracker, "Partition",
                                        "Token ids partitioned by final presence.")
      .def_readonly("current", &ArticleTracker::Partition::current)
      .def_readonly("deleted", &ArticleTracker::Partition::deleted);
  tracker.def(py::init<PageId>(), py::arg("page_id"))
      .def("process_revision", &ArticleTracker::process_revision, py::arg("rev_id"),
           py::arg("timestamp"), py::arg("text"),
           "Feeds the next revision in article order (ascending timestamp, ties by\n"
           "rev id). Raises OrderingError when the order is violated.")
      .def("finalize", &ArticleTracker::finalize,
           "Fills in last_rev_id on every token and partitions token ids by\n"
           "final presence.")
      .def("reconstruct_revision", &ArticleTracker::reconstruct_revision, py::arg("rev_id"),
           "Token multiset of the article text as of the given revision, rebuilt\n"
           "from provenance alone.")
      .def_property_readonly("page_id", &ArticleTracker::page_id)
      .def_property_readonly("tokens", &ArticleTracker::tokens)
      .def_property_readonly("revision_ids", &ArticleTracker::revision_ids);

  py::class_<RevisionMeta>(m, "RevisionMeta")
      .def(py::init([](RevId rev_id, std::int64_t timestamp, const py::object& editor) {
             return RevisionMeta{rev_id, timestamp, editor_from(editor)};
           }),
           py::arg("rev_id"), py::arg("timestamp"), py::arg("editor"))
      .def_readonly("rev_id", &RevisionMeta::rev_id)
      .def_readonly("timestamp", &RevisionMeta::timestamp)
      .def_readonly("editor", &RevisionMeta::editor);

  py::class_<ArticleHistory>(m, "ArticleHistory",
                             "One article's analysis input: revision metadata in article order\n"
                             "plus the finalized token histories.")
      .def(py::init<>())
      .def_readwrite("page_id", &ArticleHistory::page_id)
      .def_readwrite("revisions", &ArticleHistory::revisions)
      .def_readwrite("tokens", &ArticleHistory::tokens);

  m.def("track_article", &track_article_py, py::arg("page_id"), py::arg("revisions"),
        "Runs the tracker over (rev_id, timestamp, editor, text) tuples and returns\n"
        "the finalized ArticleHistory. Editors are int user ids, identifier strings\n"
        "or EditorId values.");

  py::class_<UndoAction> undo(m, "UndoAction",
                              "A deletion undoes the action that most recently made the token\n"
                              "present; a reintroduction undoes the most recent deletion.");
  py::enum_<UndoAction::Kind>(undo, "Kind")
      .value("deletion", UndoAction::Kind::del)
      .value("reintroduction", UndoAction::Kind::re);
  undo.def_readonly("kind", &UndoAction::kind)
      .def_readonly("token_id", &UndoAction::token_id)
      .def_readonly("acting_rev_id", &UndoAction::acting_rev_id)
      .def_readonly("target_rev_id", &UndoAction::target_rev_id)
      .def_readonly("acting_editor", &UndoAction::acting_editor)
      .def_readonly("target_editor", &UndoAction::target_editor)
      .def_readonly("dt_seconds", &UndoAction::dt_seconds)
      .def_readonly("self", &UndoAction::self);

  m.def("undo_actions", &extract_undo_actions, py::arg("article"),
        "All undo actions of an article, tokens in id order, events chronological\n"
        "within each token.");

  py::class_<ConflictScore>(m, "ConflictScore")
      .def_readonly("cb", &ConflictScore::cb)
      .def_readonly("ct", &ConflictScore::ct)
      .def("__repr__", [](const ConflictScore& s) {
        return "ConflictScore(cb=" + std::to_string(s.cb) + ", ct=" + std::to_string(s.ct) + ")";
      });

  py::class_<TokenConflict>(m, "TokenConflict")
      .def_readonly("token_id", &TokenConflict::token_id)
      .def_readonly("score", &TokenConflict::score);

  m.def("token_conflict", &token_conflict, py::arg("token"), py::arg("article"),
        "Conflict score of one token: counts every out/in action except the first\n"
        "deletion and self-undos; ct weighs each counted action with 1/log_3600(dt).");
  m.def("token_conflicts", &article_token_conflicts, py::arg("article"),
        "Conflict scores for every token of the article, in token id order.");

  py::class_<RevisionActionCounts>(m, "RevisionActionCounts")
      .def_readonly("adds", &RevisionActionCounts::adds)
      .def_readonly("dels", &RevisionActionCounts::dels)
      .def_readonly("res", &RevisionActionCounts::res)
      .def("total", &RevisionActionCounts::total);

  m.def("revision_action_counts", &revision_action_counts, py::arg("article"),
        "Original action counts per revision, recovered from token histories.");

  py::class_<RevertClassification>(m, "RevertClassification",
                                   "One (reverting, reverted) revision pair with the fraction of\n"
                                   "the target's original actions that were undone.")
      .def_readonly("page_id", &RevertClassification::page_id)
      .def_readonly("reverting_rev_id", &RevertClassification::reverting_rev_id)
      .def_readonly("reverted_rev_id", &RevertClassification::reverted_rev_id)
      .def_readonly("undone_actions", &RevertClassification::undone_actions)
      .def_readonly("target_original_actions", &RevertClassification::target_original_actions)
      .def_readonly("ratio", &RevertClassification::ratio)
      .def_readonly("full", &RevertClassification::full)
      .def_readonly("self", &RevertClassification::self);

  m.def("revert_classifications", &revert_classifications_py, py::arg("article"),
        "Groups the article's undo actions by (acting, target) revision pair.");

  py::class_<IdentityRevert>(m, "IdentityRevert")
      .def_readonly("reverting_rev_id", &IdentityRevert::reverting_rev_id)
      .def_readonly("reverted_rev_id", &IdentityRevert::reverted_rev_id);

  m.def("identity_reverts", &identity_reverts, py::arg("hashes_in_order"),
        "Hash-identity reverts from (rev_id, content hash) pairs in article order:\n"
        "a revision whose hash equals an earlier one's (most recent match wins)\n"
        "fully reverts every revision strictly between the two.");
}
