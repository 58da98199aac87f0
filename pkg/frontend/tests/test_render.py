"""Rendering: all four kinds, censored points, byte stability."""

import json
from pathlib import Path

import pytest

from qlos_figures.cli import main
from qlos_figures.render import build_series, render
from qlos_figures.spec import FigureSpec
from qlos_figures.tables import SchemaError

GOLDEN = Path(__file__).parent / "golden"

MI_THETA_FILES = tuple(str(GOLDEN / f"mi_theta_{k}.csv") for k in range(8))

ALL_KINDS = [
    FigureSpec("mi_vs_snr", (str(GOLDEN / "mi_snr.csv"),), ("scheme",),
               "mi_snr.svg"),
    FigureSpec("mi_vs_theta", MI_THETA_FILES, ("scheme",), "mi_theta.svg"),
    FigureSpec("ber_vs_snr", (str(GOLDEN / "ber_snr.csv"),), ("detector",),
               "ber_snr.svg"),
    FigureSpec("ber_vs_range", (str(GOLDEN / "ber_range.csv"),),
               ("detector",), "ber_range.svg"),
]


@pytest.mark.parametrize("spec", ALL_KINDS, ids=lambda s: s.kind)
def test_renders_every_kind(spec, tmp_path):
    out = render(spec, tmp_path)
    assert out == tmp_path / spec.output
    data = out.read_bytes()
    assert len(data) > 2000
    assert data.startswith(b"<?xml")
    assert b"dc:date" not in data  # determinism: no timestamps inside


def test_series_shapes():
    mi = build_series(ALL_KINDS[0])
    assert [s.label for s in mi] == ["ap-k2-m8-fixed", "phase-m8",
                                     "unquantized"]
    assert all(len(s.x) == 5 for s in mi)
    theta = build_series(ALL_KINDS[1])
    assert len(theta) == 2
    assert all(len(s.x) == 8 for s in theta)
    assert all((s.x[1:] > s.x[:-1]).all() for s in theta)
    rng = build_series(ALL_KINDS[3])
    assert all(len(s.x) == 21 for s in rng)
    assert all(s.x.min() >= 0.8 - 1e-9 and s.x.max() <= 1.2 + 1e-9
               for s in rng)


def test_zero_error_rows_censored_not_dropped():
    series = {s.label: s for s in build_series(ALL_KINDS[2])}
    ml = series["ml"]
    assert len(ml.x) == 4  # the clean row is kept, not dropped
    assert bool(ml.censored[-1]) is True
    assert not ml.censored[:-1].any()
    # clip level is half a count over the 20000x4x2 bits behind the row
    assert ml.y[-1] == pytest.approx(0.5 / 160000)
    assert ml.band[-1] == 0.0
    assert not series["zf"].censored.any()


def test_missing_column_reported_through_render(tmp_path):
    p = tmp_path / "thin.csv"
    p.write_text("detector,snr_db,ber\nzf,10.0,0.01\n")
    spec = FigureSpec("ber_vs_snr", (str(p),), ("detector",), "f.svg")
    with pytest.raises(SchemaError, match="missing column 'stderr'"):
        render(spec, tmp_path)


def test_byte_stable_across_runs(tmp_path):
    for spec in (ALL_KINDS[2],
                 FigureSpec("ber_vs_snr", (str(GOLDEN / "ber_snr.csv"),),
                            ("detector",), "ber_snr.png")):
        a = render(spec, tmp_path / "run1").read_bytes()
        b = render(spec, tmp_path / "run2").read_bytes()
        assert a == b, f"{spec.output} drifted between runs"


def test_cli_end_to_end(tmp_path, capsys):
    spec_file = tmp_path / "figs.json"
    spec_file.write_text(json.dumps([
        {"kind": "mi_vs_snr", "csv": str(GOLDEN / "mi_snr.csv"),
         "output": "mi.svg", "title": "data rate vs SNR"},
        {"kind": "ber_vs_range", "csv": str(GOLDEN / "ber_range.csv"),
         "output": "rng.svg"},
    ]))
    out_dir = tmp_path / "figs"
    assert main(["--spec", str(spec_file), "--out", str(out_dir)]) == 0
    printed = capsys.readouterr().out.splitlines()
    assert len(printed) == 2
    assert (out_dir / "mi.svg").exists()
    assert (out_dir / "rng.svg").exists()


def test_cli_reports_spec_errors(tmp_path, capsys):
    spec_file = tmp_path / "figs.json"
    spec_file.write_text('{"kind": "nope", "csv": "x", "output": "f.svg"}')
    assert main(["--spec", str(spec_file), "--out", str(tmp_path)]) == 2
    assert "figure error" in capsys.readouterr().err
