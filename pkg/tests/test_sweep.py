import json
import math

import numpy as np
import pytest

from ancilla_qsl import cli, sweep
from ancilla_qsl.engine import qslt_for
from ancilla_qsl.errors import DomainError, StepSizeUnderflow, ToleranceExceeded
from ancilla_qsl.model import ModelConfig, Topology
from ancilla_qsl.sweep import (
    CSV_HEADER,
    AxisRange,
    SweepSpec,
    csv_text,
    emit_outputs,
    make_spec,
    read_config,
    run_sweep,
    typo_experiment,
    verify,
)


def small_spec(**kw):
    base = dict(topology="id", gamma0="0.5:3:3", J="0:4:3", n_points=401)
    base.update(kw)
    return SweepSpec(**base)


def test_axis_range():
    ax = AxisRange.parse("0.1:10:50")
    assert ax.values()[0] == 0.1 and ax.values()[-1] == 10 and ax.values().size == 50
    assert AxisRange.parse(str(ax)) == ax
    with pytest.raises(DomainError):
        AxisRange.parse("1:2")


@pytest.mark.parametrize("kw", [
    {"gamma0": "0:1:1"}, {"J": "-1:1:3"}, {"J": "3:1:3"}, {"gamma0": "0:25:3"},
    {"oracle": "maybe"}, {"threads": 0}, {"lam": 0.0}, {"common_reading": "sin"},
])
def test_spec_validation(kw):
    with pytest.raises(DomainError):
        small_spec(**kw)


def test_cap_is_configurable():
    assert small_spec(gamma0="0:25:3", cap=30).gamma0.hi == 25


def test_config_precedence(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("topology = common\ngamma0 = 0.1:1:4  # comment\nJ = 0:2:3\nlambda = 1.5\nthreads = 2\n")
    values = read_config(path)
    assert values["lam"] == 1.5 and values["J"] == AxisRange(0, 2, 3)
    spec = make_spec(path, threads=None, tau=2.0, topology="sys")
    assert spec.topology is Topology.SYSTEM_ONLY and spec.tau == 2.0 and spec.threads == 2
    assert spec.lam == 1.5


def test_config_unknown_key(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("[sweep]\nfrobnicate = 1\n")
    with pytest.raises(DomainError):
        read_config(path)


@pytest.mark.parametrize("name,topology", [("fig1", "id"), ("fig2", "common"), ("fig3", "sys")])
def test_bundled_configs(name, topology):
    spec = make_spec(cli.resolve_config(name))
    assert spec.topology.value == topology
    assert (spec.lam, spec.tau) == (2.0, 3.0)
    assert spec.gamma0 == AxisRange(0.1, 10, 50) and spec.J == AxisRange(0, 10, 50)


def test_csv_layout():
    grid = run_sweep(small_spec(gamma0="1:2:2", J="1:2:2"))
    lines = csv_text(grid).splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 5
    fields = lines[1].split(",")
    assert len(fields) == 9 and fields[0] == "id" and "e+" in fields[3]
    assert float(fields[5]) == grid.cells[0].ratio


def test_grid_cells_bounded():
    grid = run_sweep(small_spec(topology="sys", J="0:4:5"))
    assert np.all((grid.ratio >= 0) & (grid.ratio <= 1))
    assert grid.ratio.shape == (3, 5)
    assert grid.cell(1, 2).J == grid.J[2]


def test_thread_determinism():
    texts = {csv_text(run_sweep(small_spec(threads=t))) for t in (1, 3, 8, 1)}
    assert len(texts) == 1


def test_closed_system_continuity():
    grid = run_sweep(small_spec(gamma0="1e-6:2e-6:2", J=f"0.5:{math.pi / 3}:2", n_points=2001))
    for c in grid.cells:
        ref = qslt_for(ModelConfig.build("id", 0.0, c.J)).ratio
        assert abs(c.ratio - ref) < 1e-4
    assert grid.cell(0, 0).ratio == pytest.approx(1.0, abs=1e-4)
    assert grid.cell(0, 1).ratio < 1e-4


def test_failure_isolation(monkeypatch):
    real = sweep.qslt_for

    def flaky(cfg, *a, **kw):
        if cfg.J > 3:
            raise StepSizeUnderflow("boom")
        return real(cfg, *a, **kw)

    monkeypatch.setattr(sweep, "qslt_for", flaky)
    grid = run_sweep(small_spec())
    failed = [c for c in grid.cells if c.failed]
    assert len(failed) == 3 and all(math.isnan(c.ratio) for c in failed)
    assert "failed:StepSizeUnderflow" in csv_text(grid)
    assert grid.failed_fraction == pytest.approx(1 / 3)


def test_cli_partial_failure_exit(monkeypatch, tmp_path):
    monkeypatch.setattr(sweep, "qslt_for", lambda *a, **k: (_ for _ in ()).throw(StepSizeUnderflow("x")))
    code = cli.main(["sweep", "--gamma0", "1:2:2", "--J", "1:2:2", "--out", str(tmp_path), "--no-plot"])
    assert code == cli.EXIT_PARTIAL


def test_degenerate_cells_fall_back(monkeypatch):
    monkeypatch.setattr(sweep, "_needs_fallback", lambda cfg: True)
    grid = run_sweep(small_spec(topology="sys"))
    assert all("degenerate_roots" in c.flags for c in grid.cells)
    assert np.all(np.isfinite(grid.ratio))


def test_emit_outputs(tmp_path):
    grid = run_sweep(small_spec(gamma0="1:2:2", J="1:2:2"))
    files = emit_outputs(grid, tmp_path / "out")
    assert set(files) == {"csv", "manifest", "plot"}
    manifest = json.loads(files["manifest"].read_text())
    assert manifest["spec"]["topology"] == "id" and manifest["cells"] == 4
    assert "numpy" in manifest["versions"] and "sweep_seconds" in manifest["timings"]
    assert files["csv"].name in files["plot"].read_text()
    again = emit_outputs(run_sweep(grid.spec), tmp_path / "again")
    assert again["csv"].read_bytes() == files["csv"].read_bytes()
    assert "plot" not in emit_outputs(grid, tmp_path / "np", plot=False)


def test_emit_outputs_io_error(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit_outputs(run_sweep(small_spec(gamma0="1:2:2", J="1:2:2")), blocker / "sub")


def test_typo_experiment():
    cosh_dev, cos_dev = typo_experiment()
    assert cosh_dev < 1e-7 and cos_dev > 1e-2


def test_verify_passes():
    report = verify(small_spec(n_points=801), samples=2, topologies=["id", "common", "sys"])
    assert report.passed and report.typo_resolved
    assert report.max_amplitude_dev < 1e-7 and report.max_ratio_dev < 1e-6
    assert len(report.ordering) == 9
    report.raise_for_failure()


def test_verify_closed_system_suite():
    report = verify(small_spec(gamma0="0:0:2", J="0:5:4"), samples=4, topologies=["id", "common", "sys"])
    assert report.passed


def test_verify_cos_reading_fails():
    report = verify(small_spec(topology="common", gamma0="1:2:2", J="1:2:2", common_reading="cos"), samples=2)
    assert not report.passed
    with pytest.raises(ToleranceExceeded) as info:
        report.raise_for_failure()
    assert info.value.worst.amplitude_dev > 1e-2


def test_verify_discrete_route():
    spec = small_spec(gamma0="1:3:2", J="1:2:2", oracle="discrete", n_modes=512)
    report = verify(spec, samples=2)
    routes = {c.route for c in report.comparisons}
    assert routes == {"kernel", "discrete"} and report.passed


def test_cli_sweep(tmp_path, capsys):
    code = cli.main(["sweep", "--config", "fig2", "--gamma0", "1:2:2", "--J", "0:1:2",
                     "--n-points", "401", "--threads", "2", "--out", str(tmp_path)])
    assert code == 0
    assert (tmp_path / "qsl_common.csv").exists() and (tmp_path / "qsl_common.gp").exists()
    assert "4 cells" in capsys.readouterr().out


def test_cli_sweep_with_oracle(tmp_path):
    code = cli.main(["sweep", "--gamma0", "1:2:2", "--J", "0:1:2", "--oracle", "kernel",
                     "--out", str(tmp_path), "--no-plot"])
    assert code == 0


@pytest.mark.parametrize("argv", [
    ["sweep", "--gamma0", "1:2"],
    ["sweep", "--gamma0", "1:2:1", "--J", "0:1:2"],
    ["sweep", "--config", "nonexistent.cfg"],
    ["sweep", "--oracle", "psychic"],
    ["point", "--gamma0", "1"],
    [],
])
def test_cli_usage_errors(argv, tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        code = cli.main(argv + ["--out", str(tmp_path)] if argv[:1] == ["sweep"] else argv)
        raise SystemExit(code)
    assert info.value.code == cli.EXIT_USAGE


def test_cli_verify_exit_codes(capsys):
    args = ["verify", "--gamma0", "1:2:2", "--J", "1:2:2", "--samples", "2", "--n-points", "401"]
    assert cli.main(args) == 0
    out = capsys.readouterr().out
    assert "cosh" in out and out.strip().endswith("PASS")
    assert cli.main(args + ["--topology", "common", "--h-c-reading", "cos"]) == cli.EXIT_TOLERANCE


def test_cli_point(capsys):
    assert cli.main(["point", "--gamma0", "1", "--J", "1", "--topology", "common", "--oracle", "kernel"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["topology"] == "common" and 0 <= out["result"]["ratio"] <= 1
    assert out["oracle"]["ratio_dev"] < 1e-6


def test_cli_compare(capsys):
    assert cli.main(["compare", "--gamma0", "1", "--J", "1", "3"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0] == "gamma0,J,id,common,sys" and len(out) == 4
