"""Rendering tests over synthetic trace CSVs matching the runner's schema."""

import numpy as np
import pytest
import yaml

from traceplot.figspec import FigureSpecError, load_figure_spec, parse_figure_spec
from traceplot.render import TraceSchemaError, group_stats, read_trace, render

HEADER = "k,f,grad_norm,stationarity,lyapunov,elapsed_ns"


def write_trace(path, ks, fs, lyap=True):
    lines = [HEADER]
    for i, (k, f) in enumerate(zip(ks, fs)):
        ly = format(f, ".17g") if lyap else ""
        lines.append(f"{k},{format(f, '.17g')},{format(2 * f, '.17g')},"
                     f"{format(0.5 * f, '.17g')},{ly},{1000 + i}")
    path.write_text("\n".join(lines) + "\n")


@pytest.fixture
def trace_dir(tmp_path):
    rng = np.random.default_rng(0)
    ks = list(range(0, 51, 10))
    for seed in range(5):
        start = 100.0 * (1.0 + 0.1 * seed)
        fs = [start * 0.5**i for i in range(len(ks))]
        write_trace(tmp_path / f"a_seed{seed}.csv", ks, fs)
        write_trace(tmp_path / f"b_seed{seed}.csv", ks, [f * 3.0 for f in fs])
    return tmp_path


def test_read_trace_roundtrip(trace_dir):
    tr = read_trace(trace_dir / "a_seed0.csv")
    assert list(tr["k"]) == [0, 10, 20, 30, 40, 50]
    assert tr["f"][0] == 100.0
    assert tr["grad_norm"][0] == 200.0


def test_read_trace_empty_lyapunov_becomes_nan(tmp_path):
    write_trace(tmp_path / "t.csv", [0, 1], [1.0, 0.5], lyap=False)
    tr = read_trace(tmp_path / "t.csv")
    assert np.isnan(tr["lyapunov"]).all()


def test_schema_mismatch_names_column(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("k,f,gradient,stationarity,lyapunov,elapsed_ns\n0,1,1,1,1,0\n")
    with pytest.raises(TraceSchemaError, match="grad_norm"):
        read_trace(bad)


def test_misaligned_grids_rejected(tmp_path):
    write_trace(tmp_path / "x1.csv", [0, 1, 2], [3.0, 2.0, 1.0])
    write_trace(tmp_path / "x2.csv", [0, 2, 4], [3.0, 2.0, 1.0])
    with pytest.raises(TraceSchemaError, match="iteration grid"):
        group_stats("x", [tmp_path / "x1.csv", tmp_path / "x2.csv"], "f", "min-max")


def test_group_stats_match_independent_recomputation(trace_dir):
    files = sorted(trace_dir.glob("a_seed*.csv"))
    gs = group_stats("a", files, "f", "std")
    raw = [read_trace(f)["f"] for f in files]
    for j in range(len(gs.k)):
        col = sorted(r[j] for r in raw)
        mean = sum(col) / len(col)
        var = sum((v - mean) ** 2 for v in col) / len(col)
        assert abs(gs.mean[j] - mean) <= 1e-12 * max(1.0, abs(mean))
        assert abs((gs.hi[j] - gs.mean[j]) - var**0.5) <= 1e-12 * max(1.0, var**0.5)
    mm = group_stats("a", files, "f", "min-max")
    for j in range(len(mm.k)):
        col = [r[j] for r in raw]
        assert mm.lo[j] == min(col) and mm.hi[j] == max(col)


def test_render_single_seed_no_band(trace_dir):
    spec = parse_figure_spec({
        "groups": {"run": "a_seed0.csv"},
        "band": "none",
        "output": "single.png",
    }, base_dir=trace_dir)
    out = render(spec)
    assert out.exists() and out.stat().st_size > 0


def test_render_grouped_with_band_and_rerender_idempotent(trace_dir):
    spec_file = trace_dir / "fig.yaml"
    spec_file.write_text(yaml.safe_dump({
        "groups": {"iHGDm": "a_seed*.csv", "GDm": "b_seed*.csv"},
        "y": "f",
        "yscale": "log",
        "band": "min-max",
        "output": "losses.png",
    }))
    spec = load_figure_spec(spec_file)
    out = render(spec)
    first = out.read_bytes()
    again = render(spec).read_bytes()
    assert first == again  # rendering is read-only and repeatable
    # input CSVs untouched
    assert (trace_dir / "a_seed0.csv").read_text().startswith(HEADER)


def test_render_vector_output(trace_dir):
    spec = parse_figure_spec({
        "groups": {"run": "a_seed*.csv"},
        "output": "fig.svg",
    }, base_dir=trace_dir)
    out = render(spec)
    assert out.suffix == ".svg"
    assert b"<svg" in out.read_bytes()[:300]


def test_spec_validation_errors(trace_dir):
    with pytest.raises(FigureSpecError, match="groups"):
        parse_figure_spec({"groups": {}}, base_dir=trace_dir)
    with pytest.raises(FigureSpecError, match="y:"):
        parse_figure_spec({"groups": {"a": "x.csv"}, "y": "loss"}, base_dir=trace_dir)
    with pytest.raises(FigureSpecError, match="band"):
        parse_figure_spec({"groups": {"a": "x.csv"}, "band": "ribbon"}, base_dir=trace_dir)
    with pytest.raises(FigureSpecError, match="unknown"):
        parse_figure_spec({"groups": {"a": "x.csv"}, "color": "red"}, base_dir=trace_dir)
    with pytest.raises(TraceSchemaError, match="matched no files"):
        render(parse_figure_spec({"groups": {"a": "missing*.csv"}}, base_dir=trace_dir))


def test_std_band_accepts_plus_minus_spelling(trace_dir):
    spec = parse_figure_spec({"groups": {"a": "a_seed*.csv"}, "band": "±std"},
                             base_dir=trace_dir)
    assert spec.band == "std"


def test_cli_end_to_end(trace_dir):
    from traceplot.cli import main

    spec_file = trace_dir / "cli_fig.yaml"
    spec_file.write_text(yaml.safe_dump({
        "groups": {"a": "a_seed*.csv"},
        "output": "cli.png",
    }))
    assert main([str(spec_file)]) == 0
    assert (trace_dir / "cli.png").exists()
    assert main([str(trace_dir / "missing.yaml")]) == 2
