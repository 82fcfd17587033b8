import math

import pytest

import toktrack

# Four-revision article: rev 1002 vandalizes two lines, 1003 restores one of
# them, 1004 blanks everything except a paragraph introduced by 1002.
REVS = [
    (1001, 1456833600, 101, "the sun is bright\n\nstar\nabove"),
    (1002, 1456920000, 102, "the sun is bright\n\nclouds gather\nthey were\nhere today"),
    (1003, 1456920020, 103, "the sun is bright\n\nstar\nhere today\nstorm"),
    (1004, 1457006420, 104, "they were\nhere today"),
]


def test_tokenize():
    assert toktrack.tokenize("The sun, is bright!") == ["the", "sun", ",", "is", "bright", "!"]
    assert toktrack.tokenize("") == []


def test_tracker_provenance():
    tracker = toktrack.ArticleTracker(7)
    for rev_id, timestamp, _, text in REVS:
        tracker.process_revision(rev_id, timestamp, text)
    partition = tracker.finalize()
    tokens = tracker.tokens
    assert len(tokens) == 13
    star = next(t for t in tokens if t.str == "star")
    assert star.origin_rev_id == 1001
    assert star.out == [1002, 1004]
    assert star.in_ == [1003]
    assert not star.present
    assert len(partition.current) == 4
    assert len(partition.deleted) == 9
    assert tracker.reconstruct_revision(1004) == {"they": 1, "were": 1, "here": 1, "today": 1}


def test_revision_order_enforced():
    tracker = toktrack.ArticleTracker(1)
    tracker.process_revision(2, 100, "a")
    with pytest.raises(toktrack.OrderingError):
        tracker.process_revision(1, 50, "b")


def test_editor_identity():
    editor = toktrack.EditorId.registered_user(7)
    assert editor.is_registered()
    assert editor.user_id() == 7
    ip = toktrack.EditorId.unregistered("10.0.0.1")
    assert not ip.is_registered()
    assert ip.value == "0|10.0.0.1"
    assert toktrack.EditorId.parse("0|10.0.0.1") == ip


def test_conflict_scores():
    article = toktrack.track_article(7, REVS)
    scores = {c.token_id: c.score for c in toktrack.token_conflicts(article)}
    star = next(t for t in article.tokens if t.str == "star")
    assert scores[star.token_id].cb == 2
    assert math.isclose(scores[star.token_id].ct, 3.4538592806, abs_tol=1e-6)
    assert toktrack.token_conflict(star, article).cb == 2


def test_undo_actions_and_reverts():
    article = toktrack.track_article(7, REVS)
    undos = [u for u in toktrack.undo_actions(article) if u.acting_rev_id == 1004]
    assert len(undos) == 8
    assert {u.target_rev_id for u in undos} == {1001, 1003}
    assert not any(u.self for u in undos)

    pairs = {
        (c.reverting_rev_id, c.reverted_rev_id): c
        for c in toktrack.revert_classifications(article)
    }
    assert set(pairs) == {(1002, 1001), (1003, 1002), (1004, 1001), (1004, 1003)}
    c = pairs[(1004, 1003)]
    assert (c.undone_actions, c.target_original_actions) == (4, 6)
    assert math.isclose(c.ratio, 2 / 3)
    assert not c.full


def test_identity_reverts():
    pairs = toktrack.identity_reverts([(1, "h1"), (2, "h2"), (3, "h1")])
    assert [(p.reverting_rev_id, p.reverted_rev_id) for p in pairs] == [(3, 2)]
