import re

import pytest

from storytrack.metrics import MeanStd
from storytrack.report import MetricReport, load_report, render_tables, save_report


def full_grid():
    reports = []
    values = {
        ("Emberfall", "baseline"): (9.41, 4.72, 2.81, 2.52, 2.04),
        ("Emberfall", "emotion"): (6.08, 3.34, 1.89, 1.33, 1.19),
        ("Emberfall", "description"): (6.44, 4.19, 2.73, 2.36, 2.18),
        ("Emberfall", "dc"): (5.70, 4.31, 2.44, 2.25, 1.87),
        ("Tidewatch", "baseline"): (9.12, 5.48, 3.09, 2.26, 1.72),
        ("Tidewatch", "emotion"): (6.35, 4.02, 2.21, 1.45, 1.12),
        ("Tidewatch", "description"): (5.81, 4.67, 2.55, 1.94, 1.39),
        ("Tidewatch", "dc"): (5.26, 4.88, 2.78, 2.14, 1.66),
    }
    humans = {"Emberfall": 3.00, "Tidewatch": 4.31}
    for (campaign, strategy), (fad, sm, ss, tm, ts) in values.items():
        reports.append(
            MetricReport(
                campaign=campaign,
                strategy=strategy,
                fad=fad,
                human_fad=humans[campaign] if strategy == "baseline" else None,
                story=MeanStd(sm, ss, 60),
                transition=MeanStd(tm, ts, 59),
            )
        )
    return reports


class TestRendering:
    def test_columns_in_strategy_order(self):
        text = render_tables(full_grid())
        for line in text.splitlines():
            if line.startswith("TRPG"):
                assert re.match(r"TRPG\s+B\s+E\s+D\s+DC(\s+Human)?$", line)

    def test_campaign_rows_present(self):
        text = render_tables(full_grid())
        assert text.count("Emberfall") == 3 and text.count("Tidewatch") == 3

    def test_mean_std_cells_two_decimals(self):
        text = render_tables(full_grid())
        assert "3.34±1.89" in text
        assert "1.33±1.19" in text
        cells = re.findall(r"\d+\.\d+±\d+\.\d+", text)
        assert cells and all(re.fullmatch(r"\d+\.\d{2}±\d+\.\d{2}", c) for c in cells)

    def test_fad_cells_two_decimals_and_human_column(self):
        text = render_tables(full_grid())
        assert "5.70" in text and "3.00" in text

    def test_missing_cells_render_na(self):
        text = render_tables([MetricReport(campaign="X", strategy="emotion", fad=1.0)])
        assert "n/a" in text

    def test_notes_rendered(self):
        report = MetricReport(campaign="X", strategy="dc",
                              notes=["FAD skipped: no reference corpus"])
        assert "FAD skipped: no reference corpus" in render_tables([report])


class TestSerialization:
    def test_round_trip(self, tmp_path):
        report = MetricReport(
            campaign="Emberfall",
            strategy="dc",
            fad=5.82,
            story=MeanStd(4.23, 2.51, 60),
            transition=MeanStd(2.19, 1.93, 59),
            notes=["note"],
            metadata={"kld_direction": "reference_first"},
        )
        path = tmp_path / "r.json"
        save_report(report, path)
        assert load_report(path) == report

    def test_unknown_strategy_rejected(self):
        with pytest.raises(ValueError):
            MetricReport(campaign="X", strategy="vibes")
