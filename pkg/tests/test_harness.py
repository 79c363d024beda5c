import math
import os
import subprocess
import sys
import warnings
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from semr.errors import EmptyInput, NonPositiveRegret, ParseError, ValidationError
from semr.harness import cli
from semr.harness.config import load_config, parse_config, serialize_config, validate
from semr.harness.slope import fit_slope
from semr.harness.svg import emit_svg
from semr.harness.sweep import CSV_MAGIC, read_csv, rows_to_csv, run_sweep

BASIC = """
# two scalar arms
[environment]
theta = 0
gamma = 3
[arm]
variance = 1
[arm]
variance = 3
[policy]
kind = uniform
[policy]
kind = oracle
[policy]
kind = epsilon-greedy
epsilon = 0.1
[run]
horizons = 10 20 40
replications = 50
seed = 5
"""


def _cfg(text=BASIC):
    return validate(parse_config(text))


def test_parse_basic():
    cfg = _cfg()
    assert cfg.gamma == 3 and cfg.horizons == (10, 20, 40)
    env = cfg.build_environment()
    assert env.k == 2
    assert [p.name for p in cfg.build_policies()] == ["uniform", "oracle", "epsilon-greedy(0.1)"]


def test_round_trip():
    text = BASIC + "\n[concentration]\nm = 10 30\ntrials = 100\n[sigma]\nmatrix = 2 0.5; 0.5 1\n[sigma]\nrandom = 3 42\n"
    text += "[lowerbound]\nsigma1 = 1\ngamma = 2\narms = 2 5\nhorizons = 100 1000\n"
    cfg = _cfg(text)
    again = _cfg(serialize_config(cfg))
    assert again == cfg
    assert serialize_config(again) == serialize_config(cfg)


@pytest.mark.parametrize("text, field", [
    (BASIC.replace("gamma = 3", "gamma = -1"), "gamma"),
    (BASIC.replace("horizons = 10 20 40", "horizons = 100 100"), "horizons"),
    (BASIC.replace("replications = 50", "replications = 1"), "replications"),
    (BASIC.replace("epsilon = 0.1", "epsilon = 1.5"), "epsilon"),
    (BASIC.replace("seed = 5", "seed = -3"), "seed"),
])
def test_validation_errors(text, field):
    with pytest.raises(ValidationError) as info:
        _cfg(text)
    assert info.value.field == field


def test_grid_message():
    with pytest.raises(ValidationError, match="horizon grid strictly increasing"):
        _cfg(BASIC.replace("horizons = 10 20 40", "horizons = 100 100"))


def test_gamma_violation_surfaces_as_validation_error():
    cfg = _cfg(BASIC.replace("gamma = 3", "gamma = 2"))
    with pytest.raises(ValidationError):
        cfg.build_environment()


@pytest.mark.parametrize("text, line", [
    ("[environment]\ngamma = 1\nbogus = 2\n", 3),
    ("[nowhere]\n", 1),
    ("[environment]\ngamma = 1\ngamma = 2\n", 3),
    ("gamma = 1\n", 1),
    ("[environment]\ngamma 1\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(ParseError) as info:
        parse_config(text)
    assert info.value.line == line


def test_sweep_closed_forms():
    rows, _ = run_sweep(_cfg())
    for row in rows:
        if row["policy"] == "oracle":
            assert row["count_based_regret"] == 0.0
        if row["policy"] == "uniform":
            assert row["count_based_regret"] == 1.0 / row["n"]


def test_sweep_single_arm():
    cfg = _cfg(BASIC.replace("[arm]\nvariance = 3\n", ""))
    rows, _ = run_sweep(cfg)
    assert all(r["count_based_regret"] == 0.0 and r["mean_count_0"] == r["n"] for r in rows)


def test_csv_round_trip():
    rows, _ = run_sweep(_cfg())
    text = rows_to_csv(rows)
    assert text.startswith(CSV_MAGIC + "\n")
    assert read_csv(text) == rows
    with pytest.raises(ValueError):
        read_csv("n,policy\n1,lcb\n")


NS = [2.0 ** j for j in range(9, 16)]


def test_fit_exact_power_laws():
    assert fit_slope([(n, n ** -1.5) for n in NS]).slope == pytest.approx(-1.5, abs=1e-12)
    fit = fit_slope([(n, n ** -1.5 * math.sqrt(math.log(n))) for n in NS], correction="sqrtlog")
    assert fit.slope == pytest.approx(-1.5, abs=1e-9)
    assert fit_slope([(n, 3.0 / n) for n in NS]).slope == pytest.approx(-1.0, abs=1e-12)


def test_fit_drops_nonpositive():
    rows = [(n, n ** -1.0) for n in NS[:4]] + [(NS[4], 0.0)]
    with pytest.warns(UserWarning):
        fit = fit_slope(rows)
    assert fit.dropped == (int(NS[4]),)
    with pytest.raises(NonPositiveRegret):
        fit_slope([(1, 1.0), (2, 0.5), (3, 0.0), (4, -1.0)])
    with pytest.raises(ValueError):
        fit_slope([(1, 1.0), (2, 0.5)])


def test_svg():
    rows = [{"n": n, "count_based_regret": n ** -1.5} for n in (100, 1000, 10000)]
    with pytest.raises(EmptyInput):
        emit_svg([])
    svg = emit_svg(rows, fit_slope(rows))
    root = ET.fromstring(svg)
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}circle")) == 3
    assert emit_svg(rows, fit_slope(rows)) == svg


def _write_cfg(tmp_path, text):
    path = tmp_path / "exp.cfg"
    path.write_text(text)
    return str(path)


def test_cli_sweep_and_fit(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, BASIC)
    out = tmp_path / "out"
    assert cli.main(["sweep", "--config", cfg, "--out", str(out)]) == 0
    assert (out / "sweep.csv").exists() and (out / "sweep_uniform.svg").exists()
    code = cli.main(["fit-slope", "--input", str(out / "sweep.csv"), "--policy", "uniform"])
    assert code == 0
    assert '"slope": -1.0' in capsys.readouterr().out


def test_cli_simulate(tmp_path):
    cfg = _write_cfg(tmp_path, BASIC)
    assert cli.main(["simulate", "--config", cfg, "--out", str(tmp_path), "--n", "30"]) == 0
    rows = read_csv((tmp_path / "simulate.csv").read_text())
    assert {r["n"] for r in rows} == {30}


def test_cli_exit_codes(tmp_path):
    bad = _write_cfg(tmp_path, BASIC.replace("gamma = 3", "gamma = -1"))
    assert cli.main(["sweep", "--config", bad]) == 2
    assert cli.main(["sweep", "--config", str(tmp_path / "missing.cfg")]) == 2
    # lambda reaches 1/sigma1: a numeric failure, not a config error
    lam = _write_cfg(tmp_path, "[run]\nreplications = 2\n[lowerbound]\nsigma1 = 1\ngamma = 1\narms = 2\nhorizons = 2\n")
    assert cli.main(["lowerbound", "--config", lam, "--out", str(tmp_path)]) == 3
    # an oracle that knows each environment incurs no shortfall on either, so certification fails
    fail = _write_cfg(tmp_path, "[policy]\nkind = oracle\n[run]\nreplications = 4\n"
                                "[lowerbound]\nsigma1 = 1\ngamma = 2\narms = 2\nhorizons = 1000\n")
    assert cli.main(["lowerbound", "--config", fail, "--out", str(tmp_path)]) == 4


def test_cli_workers_byte_identical(tmp_path):
    cfg = _write_cfg(tmp_path, BASIC.replace("kind = uniform", "kind = lcb"))
    for w in ("1", "8"):
        assert cli.main(["sweep", "--config", cfg, "--out", str(tmp_path / w), "--workers", w]) == 0
    assert (tmp_path / "1" / "sweep.csv").read_bytes() == (tmp_path / "8" / "sweep.csv").read_bytes()


def test_shipped_configs_parse():
    root = os.path.join(os.path.dirname(__file__), "..", "configs")
    for name in sorted(os.listdir(root)):
        load_config(os.path.join(root, name))


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", None)])
def test_backend_env_flag(flag, expected):
    code = "from semr import _backend; print(_backend.resolve())"
    env = {**os.environ, "SEMR_DISABLE_NUMBA": flag}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    from semr._backend import NUMBA_AVAILABLE
    assert out.stdout.strip() == (expected or ("numba" if NUMBA_AVAILABLE else "numpy"))
