import csv
import io
import math
import os
import subprocess

import numpy as np
import pytest

import qdec


def test_module_surface():
    assert qdec.__version__.startswith("qdec ")
    assert "bell" in qdec.builtin_fixtures()


def test_xi_and_norms():
    assert qdec.xi(0.0) == 0.0
    eps = 0.04
    assert qdec.xi(eps) == pytest.approx(math.sqrt(eps * (2 + eps + 2 * math.sqrt(1 + eps))))
    z = np.diag([1.0, -1.0]).astype(complex)
    assert qdec.trace_norm(z) == pytest.approx(2.0)


def test_entropies():
    mixed = np.eye(2, dtype=complex) / 2
    assert qdec.renyi_entropy(mixed, 1.5) == pytest.approx(1.0)
    phi = np.zeros((4, 4), dtype=complex)
    phi[np.ix_([0, 3], [0, 3])] = 0.5
    assert qdec.h_cond(phi, ["A", "B"], [2, 2], ["B"], 2.0) == pytest.approx(-1.0, abs=1e-8)


def test_theta():
    assert qdec.theta("identity", 3) == pytest.approx(math.log2(3))
    assert qdec.theta("trace", 4) == pytest.approx(-2.0)


def test_protocol():
    r = qdec.protocol("destroy", "classical_correlated", 1, 0, 3, m=4)
    assert r["measured_error"] <= 1e-9
    s = qdec.protocol("schumacher", "skewed_source", 2, 4, 3)
    assert s["measured_error"] <= 1e-9
    assert s["bound"] >= s["measured_error"]


def test_run_config_and_errors():
    text = "[run]\nkind = theta\nseed = 1\n[grid]\nmap = identity, trace\ndim = 2, 3\n"
    rows = list(csv.reader(io.StringIO(qdec.run_config(text))))
    assert rows[0][:3] == ["map", "dim", "theta"]
    assert len(rows) == 5
    with pytest.raises(qdec.ConfigError, match="run.seed"):
        qdec.run_config("[run]\nkind = theta\n[grid]\nmap = identity\ndim = 2\n")


def test_cli_matches_module(tmp_path):
    cli = os.environ.get("QDEC_CLI")
    if not cli:
        pytest.skip("QDEC_CLI not set")
    text = "[run]\nkind = theta\nseed = 1\n[grid]\nmap = identity, depolarizing(0.5)\ndim = 2\n"
    cfg = tmp_path / "t.ini"
    cfg.write_text(text)
    out = subprocess.run([cli, "theta", "--config", str(cfg)], capture_output=True, text=True, check=True)
    assert out.stdout == qdec.run_config(text)
    bad = subprocess.run([cli, "theta", "--config", str(cfg), "--seed", "x"], capture_output=True, text=True)
    assert bad.returncode != 0
