import csv
import hashlib
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rdnlab import cli
from rdnlab.experiments import color_jump_problem
from rdnlab.hyperbolic import color_solution
from rdnlab.invnet import MonotonicityError
from rdnlab.nwidth import fit_decay
from rdnlab.reduction import read_snapshots_csv


def write_cfg(tmp_path, body, name="cfg.ini"):
    p = tmp_path / name
    p.write_text("[experiment]\n" + body)
    return p


def run(tmp_path, command, cfg, *extra):
    return cli.main([command, "--config", str(cfg), "--out", str(tmp_path / "out"), *extra])


def read_rows(path):
    with open(path) as fh:
        return list(csv.reader(l for l in fh if not l.startswith("#")))


def digest(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_parse_helpers():
    assert cli.parse_number("2pi") == pytest.approx(2 * math.pi)
    assert cli.parse_number("1.1*pi") == pytest.approx(1.1 * math.pi)
    assert cli.parse_number("pi") == pytest.approx(math.pi)
    assert cli.parse_number("-3e-2") == -0.03
    assert cli.parse_list("0:1:5") == [0.0, 0.25, 0.5, 0.75, 1.0]
    with pytest.raises(cli.ConfigError):
        cli.parse_number("two")
    with pytest.raises(cli.ConfigError):
        cli.parse_list("")


def test_config_validation():
    with pytest.raises(cli.ConfigError, match="n_delta"):
        cli.ExperimentConfig.from_mapping({"problem": "advection", "n_delta": "32"})
    with pytest.raises(cli.ConfigError, match="problem"):
        cli.ExperimentConfig.from_mapping({"problem": "wave"})
    with pytest.raises(cli.ConfigError):
        cli.ExperimentConfig.from_mapping({"problem": "color", "sweep": "4, 0"})
    cfg = cli.ExperimentConfig.from_mapping({"problem": "color", "mu1": "0.25, 0.5", "mu2": "2pi, 6pi"})
    assert len(cfg.mus) == 4


def test_advection_snapshots_and_determinism(tmp_path):
    cfg = write_cfg(tmp_path, "problem = advection\ntimes = 0:1:64\nn_delta = 256\n")
    assert run(tmp_path, "snapshots", cfg) == 0
    path = tmp_path / "out" / "snapshots_advection.csv"
    S = read_snapshots_csv(path)
    assert S.values.shape == (256, 64)
    h = digest(path)
    assert run(tmp_path, "snapshots", cfg) == 0
    assert digest(path) == h


def test_color_snapshots_match_direct_solution(tmp_path):
    cfg = write_cfg(tmp_path, "problem = color\ntimes = 0.1, 0.3\nmu1 = 0.3\nmu2 = 2pi\nmu3 = pi\n"
                              "n_delta = 257\n")
    assert run(tmp_path, "snapshots", cfg) == 0
    S = read_snapshots_csv(tmp_path / "out" / "snapshots_color.csv")
    prob = color_jump_problem((0.3, 2 * math.pi, math.pi))
    for j, (t, mu) in enumerate(S.params):
        assert mu == pytest.approx((0.3, 2 * math.pi, math.pi))
        assert np.max(np.abs(S.values[:, j] - color_solution(prob, S.grid, t))) < 1e-6


def test_burgers_snapshots_write_shock_path(tmp_path):
    cfg = write_cfg(tmp_path, "problem = burgers\ntimes = 0, 1, 2, 3\nn_delta = 129\n")
    assert run(tmp_path, "snapshots", cfg) == 0
    rows = read_rows(tmp_path / "out" / "shock_path.csv")
    assert rows[0] == ["t", "x_s", "I_lo", "I_hi"] and rows[1][1] == "nan"
    assert float(rows[4][1]) == pytest.approx(0.3 + 1.5, abs=1e-6)


def check_svg_matches_csv(svg, rows):
    root = ET.parse(svg).getroot()
    lines = [e for e in root.iter() if e.tag.endswith("polyline")]
    drawable = [[float(r[c]) for r in rows[1:] if float(r[c]) > 0] for c in (1, 2)]
    assert len(lines) == sum(1 for d in drawable if d)
    for pl, d in zip(lines, [d for d in drawable if d]):
        assert len(pl.get("points").split()) == len(d)
    labels = {e.text for e in root.iter() if e.tag.endswith("text")}
    assert {r[0] for r in rows[1:]} <= labels


def test_advection_separation(tmp_path):
    cfg = write_cfg(tmp_path, "problem = advection\ntimes = 0:1:256\nn_delta = 4096\n"
                              "sweep = 4, 8, 16, 32, 64\n")
    assert run(tmp_path, "separation", cfg) == 0
    rows = read_rows(tmp_path / "out" / "separation_advection.csv")
    assert rows[0] == ["M", "pod_error", "rdn_error"]
    ms = [int(r[0]) for r in rows[1:]]
    pod = [float(r[1]) for r in rows[1:]]
    assert -0.65 <= fit_decay(ms, pod).rate <= -0.35
    assert all(float(r[2]) <= 1.0 / 2 ** 14 for r in rows[1:])
    check_svg_matches_csv(tmp_path / "out" / "separation_advection.svg", rows)


def test_color_separation_small(tmp_path):
    cfg = write_cfg(tmp_path, "problem = color\ntimes = 0:0.35:48\nmu1 = 0.3\nmu2 = 2pi\nmu3 = pi\n"
                              "test_times = 0.35\nn_delta = 1025\nsweep = 6, 12, 18, 24, 30, 36\n")
    assert run(tmp_path, "separation", cfg, "--jobs", "2") == 0
    rows = read_rows(tmp_path / "out" / "separation_color.csv")
    ms = [int(r[0]) for r in rows[1:]]
    rdn = [float(r[2]) for r in rows[1:]]
    assert fit_decay(ms, rdn, "exponential").r_squared >= 0.9
    check_svg_matches_csv(tmp_path / "out" / "separation_color.svg", rows)


def test_burgers_separation_halves_per_step(tmp_path):
    cfg = write_cfg(tmp_path, "problem = burgers\ntest_times = 1.0, 2.0, 2.9\n"
                              "sweep = 6, 7, 8, 9, 10, 11, 12, 13, 14\n")
    assert run(tmp_path, "separation", cfg, "--jobs", "2") == 0
    rows = read_rows(tmp_path / "out" / "separation_burgers.csv")
    assert [int(r[0]) for r in rows[1:]] == [3 + k for k in range(6, 15)]
    rdn = np.array([float(r[2]) for r in rows[1:]])
    ratios = rdn[1:] / rdn[:-1]
    print("per-step ratios", np.round(ratios, 3))
    assert np.all((ratios >= 0.4) & (ratios <= 0.6)), ratios


@pytest.mark.parametrize("problem,alpha,sweep", [("advection", "0.5", "4, 8, 16, 32"),
                                                 ("burgers", "1.5", "4, 8, 16"),
                                                 ("color", "0.5", "4, 8")])
def test_certify(tmp_path, problem, alpha, sweep):
    cfg = write_cfg(tmp_path, f"problem = {problem}\nalpha = {alpha}\nsweep = {sweep}\n")
    assert run(tmp_path, "certify", cfg) == 0
    text = (tmp_path / "out" / f"certificate_{problem}.csv").read_text()
    assert text.rstrip().endswith("# verdict=PASS")


def test_invnet_command_deterministic(tmp_path):
    cfg = write_cfg(tmp_path, "problem = advection\nn_nets = 6\nl_inv = 4, 8, 12\n")
    assert run(tmp_path, "invnet-test", cfg, "--seed", "11") == 0
    path = tmp_path / "out" / "invnet_test.csv"
    rows = read_rows(path)
    assert len(rows) == 1 + 18 and all(float(r[2]) <= 1e-9 for r in rows[1:])
    h = digest(path)
    assert run(tmp_path, "invnet-test", cfg, "--seed", "11") == 0
    assert digest(path) == h


def test_exit_codes(tmp_path, monkeypatch, capsys):
    good = write_cfg(tmp_path, "problem = advection\nsweep = 4, 8\n")
    assert run(tmp_path, "certify", tmp_path / "missing.ini") == cli.EXIT_CONFIG
    bad = write_cfg(tmp_path, "problem = advection\nn_delta = 10\n", "bad.ini")
    assert run(tmp_path, "certify", bad) == cli.EXIT_CONFIG
    monkeypatch.setenv("RDNLAB_LOG", "verbose")
    assert run(tmp_path, "certify", good) == cli.EXIT_CONFIG
    monkeypatch.setenv("RDNLAB_LOG", "info")
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert cli.main(["certify", "--config", str(good), "--out", str(blocker / "sub")]) == cli.EXIT_IO

    def boom(*a, **k):
        raise MonotonicityError((0.0, 1.0, 2.0, 1.0))

    monkeypatch.setattr(cli, "cmd_certify", boom)
    assert run(tmp_path, "certify", good) == cli.EXIT_NUMERIC
    assert "numerical failure" in capsys.readouterr().err
