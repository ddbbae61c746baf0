"""Aggregate metric results into per-campaign, per-strategy tables.

One :class:`MetricReport` holds the three metric values for a single
(campaign, strategy) run.  :func:`render_tables` lays any number of them out
as three text tables with strategy columns B/E/D/DC and one row per
campaign; cells are ``mean±std`` at two decimals, with ``n/a`` where a
metric was skipped.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable

from .metrics import MeanStd

__all__ = ["MetricReport", "render_tables", "save_report", "load_report"]

STRATEGY_LETTERS = {
    "baseline": "B",
    "emotion": "E",
    "description": "D",
    "dc": "DC",
}
_COLUMN_ORDER = ["B", "E", "D", "DC"]


@dataclass
class MetricReport:
    """Metric results for one generated soundtrack."""

    campaign: str
    strategy: str
    fad: float | None = None
    human_fad: float | None = None
    story: MeanStd | None = None
    transition: MeanStd | None = None
    notes: list[str] = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.strategy not in STRATEGY_LETTERS:
            raise ValueError(
                f"strategy must be one of {sorted(STRATEGY_LETTERS)}, got {self.strategy!r}"
            )

    @property
    def strategy_letter(self) -> str:
        return STRATEGY_LETTERS[self.strategy]

    def to_json_dict(self) -> dict:
        out = asdict(self)
        for key in ("story", "transition"):
            if out[key] is not None:
                out[key] = {"mean": out[key]["mean"], "std": out[key]["std"], "n": out[key]["n"]}
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "MetricReport":
        kwargs = dict(data)
        for key in ("story", "transition"):
            if kwargs.get(key) is not None:
                kwargs[key] = MeanStd(**kwargs[key])
        return cls(**kwargs)


def save_report(report: MetricReport, path: str | Path) -> None:
    Path(path).write_text(json.dumps(report.to_json_dict(), indent=2), encoding="utf-8")


def load_report(path: str | Path) -> MetricReport:
    return MetricReport.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _layout(header: list[str], rows: list[list[str]]) -> str:
    widths = [max(len(row[i]) for row in [header, *rows]) for i in range(len(header))]
    lines = []
    for row in [header, *rows]:
        cells = [row[0].ljust(widths[0])] + [
            cell.rjust(width) for cell, width in zip(row[1:], widths[1:])
        ]
        lines.append("   ".join(cells).rstrip())
    return "\n".join(lines)


def _table(
    title: str,
    campaigns: list[str],
    cell: dict[tuple[str, str], str],
    extra_column: str | None = None,
) -> str:
    columns = list(_COLUMN_ORDER) + ([extra_column] if extra_column else [])
    header = ["TRPG", *columns]
    rows = [
        [campaign] + [cell.get((campaign, col), "n/a") for col in columns]
        for campaign in campaigns
    ]
    return f"{title}\n{_layout(header, rows)}"


def render_tables(reports: Iterable[MetricReport]) -> str:
    """Render the three metric tables (plus notes) as UTF-8 text."""
    reports = list(reports)
    campaigns: list[str] = []
    for report in reports:
        if report.campaign not in campaigns:
            campaigns.append(report.campaign)

    fad_cells: dict[tuple[str, str], str] = {}
    story_cells: dict[tuple[str, str], str] = {}
    transition_cells: dict[tuple[str, str], str] = {}
    any_human = False
    for r in reports:
        key = (r.campaign, r.strategy_letter)
        if r.fad is not None:
            fad_cells[key] = f"{r.fad:.2f}"
        if r.human_fad is not None:
            fad_cells[(r.campaign, "Human")] = f"{r.human_fad:.2f}"
            any_human = True
        if r.story is not None:
            story_cells[key] = format(r.story, ".2f")
        if r.transition is not None:
            transition_cells[key] = format(r.transition, ".2f")

    sections = [
        _table("FAD score (lower is better)", campaigns, fad_cells,
               extra_column="Human" if any_human else None),
        _table("Mean KL-Divergence (lower is better)", campaigns, story_cells),
        _table("Mean Transition KLD (lower is better)", campaigns, transition_cells),
    ]
    notes = [
        f"- [{r.campaign}/{r.strategy_letter}] {note}" for r in reports for note in r.notes
    ]
    if notes:
        sections.append("Notes\n" + "\n".join(notes))
    return "\n\n".join(sections) + "\n"
