"""Token provenance tracking for revisioned wiki page histories."""

from toktrack._core import (
    ArticleHistory,
    ArticleTracker,
    ConflictScore,
    EditorId,
    IdentityRevert,
    IntegrityError,
    OrderingError,
    RevertClassification,
    RevisionActionCounts,
    RevisionEvents,
    RevisionMeta,
    Token,
    TokenConflict,
    UndoAction,
    identity_reverts,
    revert_classifications,
    revision_action_counts,
    token_conflict,
    token_conflicts,
    tokenize,
    track_article,
    undo_actions,
)

__all__ = [
    "ArticleHistory",
    "ArticleTracker",
    "ConflictScore",
    "EditorId",
    "IdentityRevert",
    "IntegrityError",
    "OrderingError",
    "RevertClassification",
    "RevisionActionCounts",
    "RevisionEvents",
    "RevisionMeta",
    "Token",
    "TokenConflict",
    "UndoAction",
    "identity_reverts",
    "revert_classifications",
    "revision_action_counts",
    "token_conflict",
    "token_conflicts",
    "tokenize",
    "track_article",
    "undo_actions",
]
