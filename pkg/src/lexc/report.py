"""Alignment report rendering: console text, JSON, and files on disk.

`write_report` produces a tab-separated report file plus two PNG figures
saved alongside it (computed-versus-published tallies, and cause split
for Opposite entries). The figures use the non-interactive Agg backend
and matplotlib is imported only when figures are actually rendered.
"""

from __future__ import annotations

from pathlib import Path
from typing import Dict, List

from .corpus import AlignmentReport, CAUSES, EntryResult

_TALLY_KEYS = ("Match", "Partial", "Opposite", "total")


def _row_findings(row: EntryResult) -> str:
    return ",".join(f.code for f in row.findings) if row.findings else "-"


def render_text(report: AlignmentReport) -> str:
    """Human-readable report; identical input gives identical text."""
    lines = []
    width = max((len(r.entry_id) for r in report.rows), default=8)
    for row in report.rows:
        outputs = "ok" if row.outputs_agree else "DIFF"
        agree = "yes" if row.agrees else "NO"
        lines.append(
            f"{row.entry_id:<{width}}  computed={row.computed_label:<8}"
            f" recorded={row.label:<8} outputs={outputs:<4} agree={agree:<3}"
            f" findings={_row_findings(row)}"
        )
    lines.append("")
    computed = report.computed_tallies
    published = report.published_tallies
    lines.append(
        "tallies computed/published: "
        + "  ".join(f"{k} {computed.get(k, 0)}/{published.get(k, 0)}" for k in _TALLY_KEYS)
    )
    causes = report.computed_cause_tallies
    pub_causes = report.published_cause_tallies
    lines.append(
        "causes  computed/published: "
        + "  ".join(f"{k} {causes.get(k, 0)}/{pub_causes.get(k, 0)}" for k in (*CAUSES, "total"))
    )
    for note in report.notes:
        lines.append(f"note: {note}")
    return "\n".join(lines) + "\n"


def to_dict(report: AlignmentReport) -> Dict:
    """JSON-ready view mirroring the text report field for field."""
    return {
        "rows": [
            {
                "id": row.entry_id,
                "computed_label": row.computed_label,
                "recorded_label": row.label,
                "cause": row.cause,
                "outputs_agree": row.outputs_agree,
                "agree": row.agrees,
                "findings": [f.code for f in row.findings],
            }
            for row in report.rows
        ],
        "computed_tallies": dict(report.computed_tallies),
        "published_tallies": dict(report.published_tallies),
        "computed_cause_tallies": dict(report.computed_cause_tallies),
        "published_cause_tallies": dict(report.published_cause_tallies),
        "notes": list(report.notes),
        "all_agree": report.all_agree,
    }


def render_delimited(report: AlignmentReport) -> str:
    """Tab-separated report: entry rows, tally rows, cause rows, notes."""
    lines = ["section\tkey\tcomputed\tpublished\textra"]
    for row in report.rows:
        lines.append(
            "entry\t{id}\t{computed}\t{recorded}\toutputs={outputs};findings={findings}".format(
                id=row.entry_id,
                computed=row.computed_label,
                recorded=row.label,
                outputs="ok" if row.outputs_agree else "diff",
                findings=_row_findings(row),
            )
        )
    for key in _TALLY_KEYS:
        lines.append(
            f"tally\t{key}\t{report.computed_tallies.get(key, 0)}"
            f"\t{report.published_tallies.get(key, 0)}\t"
        )
    for key in (*CAUSES, "total"):
        lines.append(
            f"cause\t{key}\t{report.computed_cause_tallies.get(key, 0)}"
            f"\t{report.published_cause_tallies.get(key, 0)}\t"
        )
    for note in report.notes:
        lines.append(f"note\t{note}\t\t\t")
    return "\n".join(lines) + "\n"


def render_figures(report: AlignmentReport, base: Path) -> List[Path]:
    """Save tally and cause charts next to `base`; returns written paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    written = []

    def grouped_bars(path: Path, title: str, keys, computed, published) -> None:
        positions = range(len(keys))
        fig, ax = plt.subplots(figsize=(6.4, 3.6))
        offset = 0.2
        ax.bar([p - offset for p in positions], [computed.get(k, 0) for k in keys],
               width=0.38, label="computed", color="#3465a4")
        ax.bar([p + offset for p in positions], [published.get(k, 0) for k in keys],
               width=0.38, label="published", color="#a40000")
        ax.set_xticks(list(positions))
        ax.set_xticklabels(keys, rotation=15, ha="right")
        ax.set_ylabel("cases")
        ax.set_title(title)
        ax.legend()
        fig.tight_layout()
        fig.savefig(path, dpi=120)
        plt.close(fig)
        written.append(path)

    grouped_bars(
        base.with_name(base.stem + "_alignment.png"),
        "judgment alignment: computed vs published",
        _TALLY_KEYS,
        report.computed_tallies,
        report.published_tallies,
    )
    grouped_bars(
        base.with_name(base.stem + "_causes.png"),
        "causes of Opposite outcomes: computed vs published",
        (*CAUSES, "total"),
        report.computed_cause_tallies,
        report.published_cause_tallies,
    )
    return written


def write_report(report: AlignmentReport, path: "Path") -> List[Path]:
    """Write the delimited report to `path` and figures alongside it."""
    path = Path(path)
    path.write_text(render_delimited(report), encoding="utf-8")
    return [path] + render_figures(report, path)
