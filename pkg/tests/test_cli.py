import io
import math

import numpy as np
import pytest

from singularqme.cli import main, read_config
from singularqme.models import CentralSpin
from singularqme.tomography import TrajectoryBundle


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(list(argv), stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def table(text):
    lines = text.strip().splitlines()
    return lines[0].split(","), np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def report(text):
    return dict(ln.split(" = ", 1) for ln in text.strip().splitlines())


def test_simulate_central_spin_cosine():
    code, out, _ = run("simulate", "--model", "central-spin", "--param", "N=1", "--param", "A=0.5",
                       "--initial", "1,0,0", "--t-max", "2*pi", "--dt", "0.01")
    assert code == 0
    header, rows = table(out)
    assert header == ["t", "x", "y", "z"]
    assert np.allclose(rows[:, 1], np.cos(rows[:, 0]), atol=1e-11)
    assert np.all(np.diff(rows[:, 0]) > 0)


def test_simulate_identity_constant():
    _, out, _ = run("simulate", "--model", "identity", "--initial", "0.1,-0.2,0.3")
    _, rows = table(out)
    assert np.allclose(rows[:, 1:], [0.1, -0.2, 0.3])


def test_simulate_fig2_components():
    _, out, _ = run("simulate", "--model", "central-spin", "--param", "N=2",
                    "--param", "A=sqrt(2)/2", "--initial", "1/2,1/sqrt(2),1/2", "--t-max", "3*pi")
    _, rows = table(out)
    t = rows[:, 0]
    assert np.allclose(rows[:, 1], 0.5 * np.cos(t) ** 2, atol=1e-11)
    assert np.allclose(rows[:, 2], np.cos(t) ** 2 / math.sqrt(2), atol=1e-11)
    assert np.allclose(rows[:, 3], 0.5)


def test_derive_prints_equation():
    code, out, _ = run("derive", "--model", "central-spin", "--param", "N=2", "--param", "A=sqrt(2)/2")
    assert code == 0
    rep = report(out)
    assert rep["equation[x]"] == "4*d1 + d3 = 0"
    assert rep["coefficients[x]"] == "0,4,0,1"
    assert rep["order"] == "3"


def test_derive_identity_trivial():
    rep = report(run("derive", "--model", "identity")[1])
    assert rep["order"] == "1"
    assert all(rep[f"equation[{c}]"] == "d1 = 0" for c in "1xyz")


def test_integrate_two_spin_residual(tmp_path):
    path = tmp_path / "cmp.csv"
    code, out, _ = run("integrate", "--model", "two-spin", "--param", "omega1=1", "--param", "omega2=2",
                       "--initial", "0.6,0.2,0.1", "--out", str(path))
    assert code == 0
    header, rows = table(path.read_text())
    assert header == ["t", "x_ode", "y_ode", "z_ode", "x_map", "y_map", "z_map", "residual"]
    assert rows[:, -1].max() < 1e-6
    assert float(report(out)["max_residual"]) < 1e-6


def test_integrate_rejects_coarse_step():
    code, _, err = run("integrate", "--model", "two-spin", "--param", "omega2=200",
                       "--dt", "1", "--t-max", "400")
    assert code == 1
    assert "characteristic period" in err


def test_numerical_failure_exit_code(monkeypatch):
    import singularqme.generators as gen
    from singularqme.errors import NumericalFailureError

    def blow_up(*args, **kwargs):
        raise NumericalFailureError("non-finite value at t=1")
    monkeypatch.setattr(gen, "integrate_ode", blow_up)
    code, out, err = run("integrate", "--model", "central-spin")
    assert code == 2
    assert out == "" and "non-finite" in err


def test_singularities():
    code, out, err = run("singularities", "--model", "central-spin", "--t-max", "7")
    assert code == 0
    _, rows = table(out)
    assert np.allclose(rows.ravel(), [math.pi / 2, 3 * math.pi / 2], atol=1e-9)
    assert report(err)["count"] == "2"


def test_measure_periodic():
    code, out, _ = run("measure", "--model", "central-spin", "--periodic", "--n-points", "128")
    assert code == 0
    rep = report(out)
    assert float(rep["rate"]) == pytest.approx(1 / math.pi, rel=0.02)
    assert rep["mode"] == "periodic"


def test_measure_tolerance_with_trace():
    code, out, err = run("measure", "--model", "damped-cosine", "--param", "omega=100",
                         "--epsilon", "0.5", "--t-max", "1", "--n-points", "256", "--trace")
    assert code == 0
    rep = report(err)
    assert float(rep["tau"]) == pytest.approx(0.0568, abs=5e-4)
    header, rows = table(out)
    assert header == ["t", "norm"]
    assert rows[-1, 0] == pytest.approx(float(rep["tau"]))
    assert rows[-1, 1] == pytest.approx(0.5, abs=1e-6)


def test_measure_not_found():
    code, _, err = run("measure", "--model", "central-spin", "--epsilon", "1e-3", "--t-max", "4")
    assert code == 2
    assert "min_value" in err


def test_measure_requires_mode():
    assert run("measure", "--model", "central-spin")[0] == 1


def test_mutual_info_zero_start_and_first_return():
    code, out, _ = run("mutual-info", "--param", "N=1", "--param", "A=0.5", "--t-max", "4", "--dt", "0.001")
    assert code == 0
    header, rows = table(out)
    assert header == ["t", "I"]
    assert rows[0, 1] == pytest.approx(0.0, abs=1e-12)
    later = rows[rows[:, 0] > 0.5]
    assert later[np.argmin(later[:, 1]), 0] == pytest.approx(math.pi, abs=2e-3)


def test_mutual_info_sqrt_n_spacing():
    for N in (1, 2, 4, 9):
        T = math.pi * math.sqrt(N)
        _, out, _ = run("mutual-info", "--param", f"N={N}", "--t-max", f"{1.5 * T}", "--dt", f"{T / 2000}")
        _, rows = table(out)
        later = rows[rows[:, 0] > 0.5 * T]
        assert later[np.argmin(later[:, 1]), 0] == pytest.approx(T, rel=1e-3)


def test_mutual_info_oracle_and_resource_limit():
    _, fast, _ = run("mutual-info", "--param", "N=3", "--t-max", "2", "--dt", "0.5")
    _, oracle, _ = run("mutual-info", "--param", "N=3", "--t-max", "2", "--dt", "0.5", "--oracle")
    assert np.allclose(table(fast)[1], table(oracle)[1], atol=1e-8)
    code, _, err = run("mutual-info", "--param", "N=11", "--t-max", "1", "--dt", "0.5", "--oracle")
    assert code == 2 and "error" in err


def _tomography_inputs(tmp_path, model, grid):
    paths = [tmp_path / f"state{i}.csv" for i in range(4)]
    TrajectoryBundle.from_model(model, grid).to_csv(paths)
    return [str(p) for p in paths]


def test_tomography_from_inputs(tmp_path):
    grid = np.linspace(0.0, 1.0, 10001)
    paths = _tomography_inputs(tmp_path, CentralSpin(N=1, A=0.5), grid)
    code, out, _ = run("tomography", "--inputs", *paths)
    assert code == 0
    header, rows = table(out)
    assert header[:4] == ["t", "rate_x", "rate_y", "rate_z"] and header[-1] == "ill_conditioned"
    inner = rows[1:-1]
    assert np.allclose(inner[:, 3], 0.5 * np.tan(inner[:, 0]), atol=1e-4)


def test_tomography_identity_zero_rates(tmp_path):
    paths = _tomography_inputs(tmp_path, CentralSpin(N=1, A=0.0), np.linspace(0, 1, 11))
    _, out, _ = run("tomography", "--inputs", *paths)
    assert np.allclose(table(out)[1][:, 1:7], 0.0, atol=1e-12)


def test_tomography_flags_singular_rows(tmp_path):
    s = math.pi / 2
    grid = np.concatenate([np.linspace(s - 1e-3, s, 101)[:-1], np.linspace(s, s + 1e-3, 101)])
    paths = _tomography_inputs(tmp_path, CentralSpin(N=1, A=0.5), grid)
    code, out, err = run("tomography", "--inputs", *paths)
    assert code == 0
    _, rows = table(out)
    flagged = rows[rows[:, -1] == 1, 0]
    assert len(flagged) >= 1
    assert np.all(np.abs(flagged - s) < 1e-3)
    assert np.all(rows[rows[:, -1] == 1, 8] > 1e8)
    assert int(report(err)["ill_conditioned"]) == len(flagged)


def test_tomography_grid_mismatch(tmp_path):
    paths = _tomography_inputs(tmp_path, CentralSpin(), np.linspace(0, 1, 11))
    TrajectoryBundle.from_model(CentralSpin(), np.linspace(0, 1.2, 11)).to_csv([paths[2]] * 4)
    code, _, err = run("tomography", "--inputs", *paths)
    assert code == 1
    assert "time grid" in err


def test_models_lists_catalog():
    rep = report(run("models")[1])
    assert "central-spin" in rep and "quasi-periodic" in rep


def test_config_file_and_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# central spin run\nmodel = central-spin\nt_max = pi\ndt = 0.5\nA = 0.25\n")
    assert read_config(cfg)["A"] == "0.25"
    _, out, _ = run("simulate", "--config", str(cfg))
    _, rows = table(out)
    assert rows[-1, 0] == pytest.approx(math.pi)
    assert rows[-1, 1] == pytest.approx(math.cos(0.5 * math.pi))
    # flags override the file
    _, out, _ = run("simulate", "--config", str(cfg), "--t-max", "1", "--param", "A=0.5")
    _, rows = table(out)
    assert rows[-1, 0] == pytest.approx(1.0)
    assert rows[-1, 1] == pytest.approx(math.cos(1.0))


def test_bad_config_line(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("model central-spin\n")
    assert run("simulate", "--config", str(cfg))[0] == 1


def test_deterministic_output(tmp_path):
    argv = ["measure", "--model", "central-spin", "--epsilon", "1e-2", "--t-max", "10",
            "--n-points", "64", "--trace"]
    first, second = run(*argv), run(*argv)
    assert first == second
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        run("simulate", "--model", "transcendental", "--out", str(path))
    assert a.read_bytes() == b.read_bytes()


def test_csv_format():
    _, out, _ = run("simulate", "--model", "damped-cosine", "--t-max", "1", "--dt", "0.1")
    lines = out.split("\n")
    assert out.endswith("\n")
    assert sum(ln.startswith("t,") for ln in lines) == 1
    digits = max(len(v.lstrip("-").replace(".", "").split("e")[0].lstrip("0"))
                 for ln in lines[1:] if ln for v in ln.split(","))
    assert digits == 12


@pytest.mark.parametrize("argv", [
    ["simulate", "--bogus"],
    ["simulate"],
    ["simulate", "--model", "no-such-model"],
    ["simulate", "--model", "central-spin", "--param", "N=0"],
    ["simulate", "--model", "central-spin", "--dt", "-1"],
    ["simulate", "--model", "central-spin", "--t-max", "0"],
    ["simulate", "--model", "central-spin", "--initial", "1,1,1"],
    ["simulate", "--model", "central-spin", "--initial", "1,0"],
    ["simulate", "--model", "central-spin", "--param", "noequals"],
    ["measure", "--model", "damped-cosine", "--periodic"],
    ["tomography", "--inputs", "a.csv", "b.csv", "c.csv", "d.csv"],
])
def test_usage_errors_exit_1(argv):
    code, out, err = run(*argv)
    assert code == 1
    assert out == ""
    assert err.startswith("error:")
