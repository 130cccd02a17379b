"""Force-majeure event classification, cataloguing, and handling.

An event catalog lists recognized event names, may carry per-event scores
(similarity to the catalogued perils, and business impact), and may be
extended at runtime with custom events. Classification is a pure
threshold rule; by default an event counts as force majeure when its
similarity reaches 7, or when impact scoring is enabled and its impact
reaches 7.

Impact figures in shipped catalogs are stored exactly as scored, even
where a source scored impact on a wider-than-10 scale; thresholds compare
raw values and no rescaling is applied.

Score lookup is behind a provider interface so a table shipped on disk
and a remote scoring service are interchangeable; only the table-backed
provider is implemented here.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Union

from .evaluator import NoticeEntry, OutcomeLedger, StatusEntry, TerminateEntry
from .model import EventCatalog
from .parser import ParseError


class MissingScoresError(LookupError):
    """No scores available for an event name."""

    def __init__(self, event: str):
        super().__init__(f"no scores for event '{event}'")
        self.event = event


class EmptyNameError(ValueError):
    """A custom event name must contain at least one non-space character."""


@dataclass(frozen=True)
class ScoredEvent:
    """An event name with its similarity and impact scores.

    Similarity is on a 1..10 scale; impact is any positive integer, kept
    raw from its source scale.
    """

    name: str
    similarity: int
    impact: int

    def __post_init__(self) -> None:
        if not 1 <= self.similarity <= 10:
            raise ValueError(f"similarity must be in 1..10, got {self.similarity}")
        if self.impact < 1:
            raise ValueError(f"impact must be at least 1, got {self.impact}")


@dataclass(frozen=True)
class FmThresholds:
    """Classification thresholds; `impact_min=None` disables the impact route."""

    similarity_min: int = 7
    impact_min: Optional[int] = 7


@dataclass(frozen=True)
class FmParams:
    """Contract-level handling parameters."""

    max_duration_days: int = 30


def classify(scores: ScoredEvent, thresholds: FmThresholds = FmThresholds()) -> bool:
    """True when the event clears the similarity bar, or the impact bar
    when impact classification is enabled."""
    if scores.similarity >= thresholds.similarity_min:
        return True
    return thresholds.impact_min is not None and scores.impact >= thresholds.impact_min


def filter_catalog(catalog: EventCatalog, thresholds: FmThresholds = FmThresholds()) -> List[str]:
    """Names of catalog events classified as force majeure, catalog order.

    Every event consulted must have scores; raises MissingScoresError
    otherwise.
    """
    included = []
    scores = catalog.scores or {}
    for name in catalog.all_events():
        if name not in scores:
            raise MissingScoresError(name)
        if classify(scores[name], thresholds):
            included.append(name)
    return included


def register_custom_event(catalog: EventCatalog, name: str) -> EventCatalog:
    """Add a custom event name; idempotent, rejects empty names."""
    if not name.strip():
        raise EmptyNameError("custom event name is empty")
    if name in catalog.listed or name in catalog.registered_custom:
        return catalog
    return catalog.with_custom(name)


def is_custom_event_registered(catalog: EventCatalog, name: str) -> bool:
    return name in catalog.registered_custom


def handle_event(
    affected_party: str,
    other_party: str,
    event: str,
    duration_days: int,
    catalog: EventCatalog,
    params: FmParams = FmParams(),
) -> OutcomeLedger:
    """Outcome of invoking force majeure for `event`.

    A recognized event (listed or registered) produces a notification, a
    suspension of obligations, and then either a termination when the
    event outlasts `params.max_duration_days` or a resumption otherwise.
    An unrecognized event produces a single notice and nothing else.
    """
    recognized = event in catalog.listed or event in catalog.registered_custom
    if not recognized:
        return OutcomeLedger(
            entries=(NoticeEntry(f"'{event}' is not a recognized force majeure event"),),
        )
    entries = [
        NoticeEntry(f"{affected_party} notifies {other_party} of force majeure event: {event}"),
        StatusEntry("obligations_suspended", True),
    ]
    if duration_days > params.max_duration_days:
        entries.append(
            TerminateEntry(
                f"force majeure event '{event}' lasting {duration_days} days "
                f"exceeds the {params.max_duration_days}-day limit"
            )
        )
    else:
        entries.append(StatusEntry("performance_resumed", True))
    return OutcomeLedger(entries=tuple(entries))


# ---------------------------------------------------------------------------
# Score providers


class ScoreProvider:
    """Interface for score lookup; implementations may be local or remote."""

    def score(self, event: str) -> ScoredEvent:
        raise NotImplementedError


class TableScoreProvider(ScoreProvider):
    """Scores backed by an in-memory table."""

    def __init__(self, table: Dict[str, ScoredEvent]):
        self._table = dict(table)

    def score(self, event: str) -> ScoredEvent:
        if event not in self._table:
            raise MissingScoresError(event)
        return self._table[event]


def _parse_catalog_rows(text: str, where: str) -> List[ScoredEvent]:
    rows = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise ParseError(
                f"{where}: expected name<TAB>similarity<TAB>impact",
                lineno, 1, expected="3 tab-separated fields", found=raw,
            )
        name = parts[0].strip()
        try:
            similarity = int(parts[1])
            impact = int(parts[2])
        except ValueError:
            raise ParseError(
                f"{where}: scores must be integers", lineno, 1,
                expected="integer scores", found=raw,
            ) from None
        try:
            rows.append(ScoredEvent(name, similarity, impact))
        except ValueError as exc:
            raise ParseError(f"{where}: {exc}", lineno, 1,
                             expected="scores in range", found=raw) from None
    return rows


def load_catalog(path: Union[str, Path]) -> EventCatalog:
    """Read a scored event catalog from a tab-separated file.

    Rows are `name<TAB>similarity<TAB>impact`; blank lines and `#`
    comments are ignored. The catalog keeps file order and takes its name
    from the file stem.
    """
    path = Path(path)
    rows = _parse_catalog_rows(path.read_text(encoding="utf-8"), str(path))
    return EventCatalog(
        name=path.stem,
        listed=tuple(r.name for r in rows),
        has_wildcard=False,
        scores={r.name: r for r in rows},
    )


def table_score_provider(path: Union[str, Path]) -> TableScoreProvider:
    """Provider view over a catalog file; same format as load_catalog."""
    rows = _parse_catalog_rows(Path(path).read_text(encoding="utf-8"), str(path))
    return TableScoreProvider({r.name: r for r in rows})
