import json
import textwrap

import pytest

from metaes.cli import main
from metaes.report import TRACE_FIELDS


def _write(path, text):
    path.write_text(textwrap.dedent(text), encoding="utf-8")
    return str(path)


def _run_yaml(tmp_path, outdir, *, function="sphere", figures=True, seed=0):
    return _write(tmp_path / "run.yaml", f"""\
        function: {function}
        n: 8
        seed: {seed}
        algorithm: dlmcma
        lambda_prime: 4
        mu_prime: 1
        tau: {{mode: max_evaluations, amount: 200}}
        total: {{mode: max_evaluations, amount: 1500}}
        figures: {str(figures).lower()}
        outdir: {outdir}
        """)


# ---------------------------------------------------------------------- run

def test_run_writes_trace_summary_and_figure(tmp_path, capsys):
    outdir = tmp_path / "out"
    code = main(["run", _run_yaml(tmp_path, outdir)])
    assert code == 0
    assert "f*=" in capsys.readouterr().out

    trace = (outdir / "trace.csv").read_text().splitlines()
    assert trace[0] == ",".join(TRACE_FIELDS)
    assert len(trace) >= 3
    for line in trace[1:]:
        assert len(line.split(",")) == len(TRACE_FIELDS)

    summary = json.loads((outdir / "summary.json").read_text())
    for key in ("f_star", "evals", "wall_seconds", "config_hash",
                "failed_epochs", "x_star", "function", "algorithm", "n", "seed"):
        assert key in summary
    assert summary["function"] == "sphere"
    assert summary["evals"] <= 1500 + 4 * 19

    svg = (outdir / "trace.svg").read_text()
    assert svg.lstrip().startswith("<?xml")
    assert "sphere" in svg  # text stays text, so labels are greppable


def test_run_without_figures_writes_no_svg(tmp_path):
    outdir = tmp_path / "out"
    assert main(["run", _run_yaml(tmp_path, outdir, figures=False)]) == 0
    assert not (outdir / "trace.svg").exists()
    assert (outdir / "trace.csv").exists()


def test_run_unknown_function_is_config_error(tmp_path, capsys):
    cfgpath = _run_yaml(tmp_path, tmp_path / "out", function="parabola")
    assert main(["run", cfgpath]) == 2
    err = capsys.readouterr().err
    assert "function" in err and "parabola" in err


def test_run_missing_config_file_is_config_error(tmp_path, capsys):
    assert main(["run", str(tmp_path / "nope.yaml")]) == 2
    assert "not found" in capsys.readouterr().err


def test_run_repeat_is_byte_identical(tmp_path):
    a = tmp_path / "a"
    b = tmp_path / "b"
    assert main(["run", _run_yaml(tmp_path, a, figures=False)]) == 0
    assert main(["run", _run_yaml(tmp_path, b, figures=False)]) == 0
    assert (a / "trace.csv").read_bytes() == (b / "trace.csv").read_bytes()


def test_run_outdir_env_override(tmp_path, monkeypatch):
    override = tmp_path / "elsewhere"
    monkeypatch.setenv("METAES_OUTDIR", str(override))
    assert main(["run", _run_yaml(tmp_path, tmp_path / "ignored",
                                  figures=False)]) == 0
    assert (override / "trace.csv").exists()
    assert not (tmp_path / "ignored").exists()


# -------------------------------------------------------------------- bench

def test_bench_suite_layout(tmp_path):
    suite = _write(tmp_path / "suite.yaml", f"""\
        functions: [sphere, cigar]
        algorithms: [dlmcma]
        seeds: [0, 1, 2]
        n: 8
        lambda_prime: 4
        mu_prime: 1
        tau: {{mode: max_evaluations, amount: 150}}
        total: {{mode: max_evaluations, amount: 900}}
        figures: false
        outdir: {tmp_path / "bench"}
        """)
    assert main(["bench", suite]) == 0
    for function in ("sphere", "cigar"):
        for seed in (0, 1, 2):
            assert (tmp_path / "bench" / function / "dlmcma" / f"seed{seed}"
                    / "trace.csv").exists()
        assert (tmp_path / "bench" / f"{function}_medians.svg").exists()

    medians = (tmp_path / "bench" / "medians.csv").read_text().splitlines()
    assert medians[0] == "function,algorithm,epoch,median_evals,median_best_f,status"
    assert len(medians) > 2
    assert all(",ok" in line for line in medians[1:])
    assert any(line.startswith("sphere,") for line in medians[1:])
    assert any(line.startswith("cigar,") for line in medians[1:])


def test_bench_empty_function_list_is_config_error(tmp_path, capsys):
    suite = _write(tmp_path / "suite.yaml", """\
        functions: []
        algorithms: [dlmcma]
        seeds: [0]
        n: 8
        """)
    assert main(["bench", suite]) == 2
    assert "functions" in capsys.readouterr().err


# --------------------------------------------------------------------- plot

def _trace_file(path, rows):
    lines = [",".join(TRACE_FIELDS)]
    lines += [f"{e},{v},0.0,{f},1.0" for e, v, f in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(path)


def test_plot_two_traces_with_clipping_note(tmp_path):
    t1 = _trace_file(tmp_path / "one.csv",
                     [(0, 1, 100.0), (1, 50, 1.0), (2, 100, 1e-14)])
    t2 = _trace_file(tmp_path / "two.csv",
                     [(0, 1, 90.0), (1, 60, 5.0), (2, 120, 0.5)])
    out = tmp_path / "cmp.svg"
    assert main(["plot", t1, t2, "-o", str(out)]) == 0
    svg = out.read_text()
    # series one dips under the default floor: its legend entry says so,
    # the untouched series' entry does not
    assert "one (clipped at 1e-10)" in svg
    assert "two (clipped" not in svg
    assert "best cost" in svg


def test_plot_rejects_malformed_trace(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text(",".join(TRACE_FIELDS) + "\n1,2,0.0,not_a_float,1.0\n",
                   encoding="utf-8")
    out = tmp_path / "out.svg"
    assert main(["plot", str(bad), "-o", str(out)]) == 1
    err = capsys.readouterr().err
    assert f"{bad}:2" in err
    assert not out.exists()


def test_plot_rejects_wrong_header(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
    assert main(["plot", str(bad), "-o", str(tmp_path / "out.svg")]) == 1
    assert f"{bad}:1" in capsys.readouterr().err
