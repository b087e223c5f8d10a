"""Exception hierarchy shared across the engine."""


class IrecError(Exception):
    """Base class for all engine errors."""


class ConfigError(IrecError):
    """Bad or unknown configuration key/value."""


# --- graph store ---

class UnknownCard(IrecError):
    def __init__(self, card_id: str):
        super().__init__(f"unknown card: {card_id}")
        self.card_id = card_id


class UnknownTag(IrecError):
    def __init__(self, tag_id: str):
        super().__init__(f"unknown tag: {tag_id}")
        self.tag_id = tag_id


class UnknownParent(IrecError):
    def __init__(self, parent_id: str):
        super().__init__(f"unknown parent tag: {parent_id}")
        self.parent_id = parent_id


class DuplicateId(IrecError):
    """Internal id collision; retried with a fresh id, never surfaced."""


class CycleDetected(IrecError):
    """Tag hierarchy mutation would introduce a PARENT_OF cycle."""


class SnapshotError(IrecError):
    """Base for snapshot persistence failures."""


class VersionMismatch(SnapshotError):
    def __init__(self, found, expected: int):
        super().__init__(f"snapshot version {found!r}, expected {expected}")
        self.found = found
        self.expected = expected


class CorruptSnapshot(SnapshotError):
    """Snapshot file is truncated, malformed, or internally inconsistent."""


# --- embeddings ---

class EmptyText(IrecError):
    """Text to embed is empty or contains no tokens."""


class DimensionMismatch(IrecError):
    def __init__(self, a: int, b: int):
        super().__init__(f"vector dimensions differ: {a} vs {b}")


class ProviderUnavailable(IrecError):
    """Remote embedding provider cannot be reached."""


# --- reranker ---

class PathCountOutOfRange(IrecError):
    def __init__(self, count: int, n_paths: int):
        super().__init__(f"path count {count} outside [1, {n_paths}]")


# --- LLM gateway ---

class LlmUnavailable(IrecError):
    """Language-model provider failed or timed out."""


class MalformedLlmResponse(IrecError):
    """Provider response does not satisfy the task's JSON contract."""


class EmptyNote(IrecError):
    """Insight note is empty."""


# --- tag mapper ---

class UnknownDecision(IrecError):
    def __init__(self, decision_id: str):
        super().__init__(f"unknown mapping decision: {decision_id}")


class AlreadyConfirmed(IrecError):
    def __init__(self, decision_id: str):
        super().__init__(f"decision already confirmed: {decision_id}")


# --- workflow ---

class EmptyQuery(IrecError):
    """Query text is empty."""


class UnknownSession(IrecError):
    def __init__(self, session_id: str):
        super().__init__(f"unknown session: {session_id}")


class NotInSession(IrecError):
    """Card was not part of the session's final results."""
