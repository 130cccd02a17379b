"""Shipped case corpus: loading, execution, and judgment alignment.

A corpus directory holds one subdirectory per case, each with a contract,
scenario files, golden expected outputs, and a `meta.tsv` recording the
alignment label, the failure cause where applicable, a citation quote,
and machine-checkable assertions derived from the judgment. A top-level
`manifest.tsv` lists every file with its SHA-256, so a corrupted or
edited corpus is detected before anything runs.

Alignment labels compare what the encoding computes with what the court
decided:

    Match     every judgment assertion holds on the computed ledgers
    Partial   nothing contradicted, but some aspect was not evaluable
    Opposite  at least one evaluable assertion is contradicted
    LintOnly  the case is about absent terms; no scenario is evaluated

For Opposite entries the recorded cause is one of EncodingError,
AmbiguousLanguage, or Either.

The published summary constants reproduce the source analysis row for
row, including its arithmetic inconsistency (categories summing to 10
against a printed total of 11, and a Match count one lower than the
per-case labels give). Reports show published next to computed figures
and flag the disagreement rather than correcting it.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple, Union

from .evaluator import (
    EvalError,
    EvalErrorKind,
    OutcomeLedger,
    format_eval_error,
    format_ledger,
    run,
    serialize_money,
    serialize_value,
)
from .linter import Finding, lint
from .model import ContractAst, validate
from .parser import Scenario, parse, parse_scenario

LABELS = ("Match", "Partial", "Opposite", "LintOnly")
CAUSES = ("EncodingError", "AmbiguousLanguage", "Either")

# Source analysis summary, kept verbatim: the categories sum to 10, the
# printed total is 11, and per-case labels give one more Match than the
# summary row records. Reported alongside computed figures, never fixed.
PUBLISHED_TALLIES = {"Match": 5, "Partial": 2, "Opposite": 3, "total": 11}
PUBLISHED_CAUSE_TALLIES = {"EncodingError": 2, "AmbiguousLanguage": 0, "Either": 1, "total": 3}


class ManifestError(Exception):
    """Corpus files missing, unlisted, or failing their checksum."""


class CorpusError(Exception):
    """A corpus entry that does not parse, validate, or carry sound metadata."""


@dataclass(frozen=True)
class Assertion:
    """One machine-checkable claim the judgment makes about an outcome.

    `subject` is `status:<name>`, `payment:<from>-><to>`, or
    `termination`; `relation` is equals, exists, or absent. Non-evaluable
    assertions record in `reason` what the encoding cannot express.
    """

    scenario: str
    subject: str
    relation: str
    expected: str
    evaluable: bool
    reason: str = ""


@dataclass(frozen=True)
class CorpusEntry:
    id: str
    directory: Path
    ast: ContractAst
    scenarios: Tuple[Tuple[str, Scenario], ...]
    expected_outputs: Mapping[str, str]
    label: str
    cause: Optional[str]
    citation: str
    assertions: Tuple[Assertion, ...]


@dataclass(frozen=True)
class EntryResult:
    entry_id: str
    label: str  # from metadata
    computed_label: str
    cause: Optional[str]
    outputs: Mapping[str, str]  # scenario id -> produced text
    outputs_agree: bool  # every produced text equals its golden file
    findings: Tuple[Finding, ...]

    @property
    def agrees(self) -> bool:
        return self.outputs_agree and self.computed_label == self.label


@dataclass(frozen=True)
class AlignmentReport:
    rows: Tuple[EntryResult, ...]
    computed_tallies: Mapping[str, int]
    published_tallies: Mapping[str, int]
    computed_cause_tallies: Mapping[str, int]
    published_cause_tallies: Mapping[str, int]
    notes: Tuple[str, ...]

    @property
    def all_agree(self) -> bool:
        return all(row.agrees for row in self.rows)


# ---------------------------------------------------------------------------
# Loading


def file_sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _read_manifest(directory: Path) -> "List[Tuple[str, str, str]]":
    manifest = directory / "manifest.tsv"
    if not manifest.is_file():
        return []
    rows = []
    for lineno, raw in enumerate(manifest.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        if len(parts) != 3:
            raise ManifestError(f"{manifest}:{lineno}: expected id<TAB>path<TAB>sha256")
        rows.append((parts[0], parts[1], parts[2]))
    return rows


def _parse_meta(path: Path) -> "Tuple[str, Optional[str], str, List[Assertion]]":
    label = ""
    cause: Optional[str] = None
    citation = ""
    assertions: List[Assertion] = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not raw.strip() or raw.startswith("#"):
            continue
        parts = raw.split("\t")
        key = parts[0]
        if key == "label" and len(parts) == 2:
            label = parts[1]
        elif key == "cause" and len(parts) == 2:
            cause = parts[1]
        elif key == "citation" and len(parts) == 2:
            citation = parts[1]
        elif key == "assert" and len(parts) == 7:
            scenario, subject, relation, expected, evaluable, reason = parts[1:]
            if relation not in ("equals", "exists", "absent"):
                raise CorpusError(f"{path}:{lineno}: unknown relation '{relation}'")
            if evaluable not in ("yes", "no"):
                raise CorpusError(f"{path}:{lineno}: evaluable must be yes or no")
            assertions.append(
                Assertion(scenario, subject, relation, expected, evaluable == "yes", reason)
            )
        else:
            raise CorpusError(f"{path}:{lineno}: unrecognized metadata row {key!r}")
    if label not in LABELS:
        raise CorpusError(f"{path}: label must be one of {', '.join(LABELS)}, got {label!r}")
    if cause is not None and cause not in CAUSES:
        raise CorpusError(f"{path}: cause must be one of {', '.join(CAUSES)}, got {cause!r}")
    if (cause is not None) != (label == "Opposite"):
        raise CorpusError(f"{path}: a cause is recorded exactly for Opposite entries")
    return label, cause, citation, assertions


def load_corpus(directory: "Union[str, Path]") -> List[CorpusEntry]:
    """Load and verify every corpus entry listed in the manifest.

    Checks the manifest checksums first, then parses and validates each
    contract and parses each scenario. Entries come back in manifest
    order.
    """
    directory = Path(directory)
    rows = _read_manifest(directory)

    listed = {directory / relpath: entry_id for entry_id, relpath, _ in rows}
    on_disk = {
        p for p in directory.rglob("*")
        if p.is_file() and p.name != "manifest.tsv"
    }
    missing = sorted(
        f"{listed[p]}: {p}" for p in set(listed) - on_disk
    )
    unlisted = sorted(str(p) for p in on_disk - set(listed))
    if missing:
        raise ManifestError("manifest lists missing files: " + ", ".join(missing))
    if unlisted:
        raise ManifestError("files not in manifest: " + ", ".join(unlisted))
    for _, relpath, digest in rows:
        path = directory / relpath
        actual = file_sha256(path)
        if actual != digest:
            raise ManifestError(f"{path}: checksum mismatch (manifest {digest}, file {actual})")

    order: List[str] = []
    by_id: Dict[str, List[str]] = {}
    for entry_id, relpath, _ in rows:
        if entry_id not in by_id:
            by_id[entry_id] = []
            order.append(entry_id)
        by_id[entry_id].append(relpath)

    entries = []
    for entry_id in order:
        entry_dir = directory / entry_id
        contract_path = entry_dir / "contract.lexc"
        ast = parse(contract_path.read_text(encoding="utf-8"))
        problems = validate(ast)
        if problems:
            raise CorpusError(
                f"{contract_path}: contract does not validate: "
                + "; ".join(str(p) for p in problems)
            )
        scenarios = []
        expected: Dict[str, str] = {}
        for relpath in by_id[entry_id]:
            path = directory / relpath
            if path.suffix == ".scn":
                scenarios.append((path.stem, parse_scenario(path.read_text(encoding="utf-8"))))
            elif path.suffix == ".ledger":
                expected[path.stem] = path.read_text(encoding="utf-8")
        label, cause, citation, assertions = _parse_meta(entry_dir / "meta.tsv")
        scenario_ids = {sid for sid, _ in scenarios}
        if scenario_ids != set(expected):
            raise CorpusError(f"{entry_dir}: scenarios and expected outputs do not pair up")
        for assertion in assertions:
            if assertion.scenario not in scenario_ids:
                raise CorpusError(
                    f"{entry_dir}: assertion references unknown scenario '{assertion.scenario}'"
                )
        entries.append(
            CorpusEntry(
                id=entry_id,
                directory=entry_dir,
                ast=ast,
                scenarios=tuple(scenarios),
                expected_outputs=expected,
                label=label,
                cause=cause,
                citation=citation,
                assertions=tuple(assertions),
            )
        )
    return entries


# ---------------------------------------------------------------------------
# Alignment


def _assertion_holds(result: "Union[OutcomeLedger, EvalError]", assertion: Assertion) -> bool:
    if isinstance(result, EvalError):
        # an errored run produced no ledger facts at all
        return assertion.relation == "absent"
    if assertion.subject.startswith("status:"):
        name = assertion.subject[len("status:"):]
        statuses = result.final_statuses()
        if assertion.relation == "equals":
            return name in statuses and serialize_value(statuses[name]) == assertion.expected
        present = name in statuses
    elif assertion.subject.startswith("payment:"):
        route = assertion.subject[len("payment:"):]
        payments = [
            p for p in result.payments() if f"{p.from_party}->{p.to_party}" == route
        ]
        if assertion.relation == "equals":
            return any(serialize_money(p.amount) == assertion.expected for p in payments)
        present = bool(payments)
    elif assertion.subject == "termination":
        if assertion.relation == "equals":
            raise CorpusError("termination assertions support exists/absent only")
        present = result.terminated()
    else:
        raise CorpusError(f"unknown assertion subject {assertion.subject!r}")
    return present if assertion.relation == "exists" else not present


def classify_alignment(
    results: Mapping[str, "Union[OutcomeLedger, EvalError]"],
    assertions: Tuple[Assertion, ...],
) -> str:
    """Label computed outcomes against judgment assertions.

    Opposite dominates: one contradicted evaluable assertion is enough.
    Partial covers the no-contradiction cases where something could not
    be evaluated, either an assertion outside the encoding's reach or a
    scenario that failed for a missing input. Entries with no scenarios
    are LintOnly by construction.
    """
    if not results:
        return "LintOnly"
    for assertion in assertions:
        if assertion.evaluable and not _assertion_holds(results[assertion.scenario], assertion):
            return "Opposite"
    if any(not a.evaluable for a in assertions):
        return "Partial"
    if any(
        isinstance(r, EvalError) and r.kind is EvalErrorKind.UNBOUND_INPUT
        for r in results.values()
    ):
        return "Partial"
    return "Match"


def run_entry(entry: CorpusEntry, max_passes: int = 8) -> EntryResult:
    """Evaluate every scenario, lint the contract, classify alignment."""
    results: Dict[str, Union[OutcomeLedger, EvalError]] = {}
    outputs: Dict[str, str] = {}
    for scenario_id, scenario in entry.scenarios:
        result = run(entry.ast, scenario, max_passes=max_passes)
        results[scenario_id] = result
        outputs[scenario_id] = (
            format_eval_error(result) if isinstance(result, EvalError) else format_ledger(result)
        )
    outputs_agree = all(
        outputs[sid] == entry.expected_outputs[sid] for sid in outputs
    )
    return EntryResult(
        entry_id=entry.id,
        label=entry.label,
        computed_label=classify_alignment(results, entry.assertions),
        cause=entry.cause,
        outputs=outputs,
        outputs_agree=outputs_agree,
        findings=tuple(lint(entry.ast)),
    )


def build_report(results: List[EntryResult]) -> AlignmentReport:
    """Tally computed labels against the published summary figures."""
    tallies = {label: 0 for label in LABELS if label != "LintOnly"}
    causes = {cause: 0 for cause in CAUSES}
    for row in results:
        if row.computed_label in tallies:
            tallies[row.computed_label] += 1
        if row.computed_label == "Opposite" and row.cause:
            causes[row.cause] += 1
    tallies["total"] = sum(tallies.values())
    causes["total"] = sum(causes.values())

    notes = []
    published_sum = sum(v for k, v in PUBLISHED_TALLIES.items() if k != "total")
    if published_sum != PUBLISHED_TALLIES["total"]:
        notes.append(
            f"published tallies are internally inconsistent: categories sum to "
            f"{published_sum} against a printed total of {PUBLISHED_TALLIES['total']}"
        )
    for key in ("Match", "Partial", "Opposite", "total"):
        if tallies.get(key, 0) != PUBLISHED_TALLIES[key]:
            notes.append(
                f"computed {key} tally is {tallies.get(key, 0)} but the published "
                f"summary records {PUBLISHED_TALLIES[key]}; both are shown unchanged"
            )
    for key in CAUSES:
        if causes[key] != PUBLISHED_CAUSE_TALLIES[key]:
            notes.append(
                f"computed {key} cause tally is {causes[key]} but the published "
                f"summary records {PUBLISHED_CAUSE_TALLIES[key]}; both are shown unchanged"
            )

    return AlignmentReport(
        rows=tuple(results),
        computed_tallies=tallies,
        published_tallies=dict(PUBLISHED_TALLIES),
        computed_cause_tallies=causes,
        published_cause_tallies=dict(PUBLISHED_CAUSE_TALLIES),
        notes=tuple(notes),
    )
