import json
import math
import os
import subprocess

import numpy as np
import pytest

import pgdflow


def small(case, **over):
    cfg = json.loads(pgdflow.default_config(case))
    cfg["mesh"]["cells"] = over.pop("cells", 12)
    cfg["parametric"]["intervals"] = over.pop("intervals", 6)
    for k, v in over.items():
        cfg["pgd"][k] = v
    return json.dumps(cfg)


def test_case_registry():
    assert set(pgdflow.case_names()) >= {"kovasznay", "lid", "jets"}


def test_kovasznay_exact_matches_closed_form():
    mu = 1e-2
    re = 1 / mu
    lam = re / 2 - math.sqrt(re * re / 4 + 4 * math.pi**2)
    assert pgdflow.kovasznay_lambda(mu) == pytest.approx(lam, rel=1e-14)
    u, v, p = pgdflow.kovasznay_exact(0.3, 0.1, mu)
    e = math.exp(lam * 0.3)
    assert u == pytest.approx(1 - e * math.cos(2 * math.pi * 0.1))
    assert v == pytest.approx(lam / (2 * math.pi) * e * math.sin(2 * math.pi * 0.1))


def test_full_order_kovasznay_close_to_exact():
    r = pgdflow.solve_full(small("kovasznay"), 1e-2)
    assert r["converged"]
    assert r["u"].shape == (144, 2)
    ex = np.array([pgdflow.kovasznay_exact(x, y, 1e-2)[:2] for x, y in r["centroids"]])
    err = np.linalg.norm(r["u"] - ex) / np.linalg.norm(ex)
    assert err < 0.1


def test_bad_config_and_mu():
    with pytest.raises(ValueError):
        pgdflow.solve_full('{"case": "lid", "mesh": {"cells": -1}}', 0.5)
    with pytest.raises(ValueError):
        pgdflow.solve_full("lid", 3.0)


def test_offline_online_round_trip(tmp_path):
    out = tmp_path / "lid"
    rep = pgdflow.pgd_offline(small("lid", max_modes=2), str(out))
    assert rep["n_bc_modes"] == 1
    assert 1 <= rep["n_computed"] <= 2
    assert (out / "manifest.json").exists()

    a = pgdflow.Archive(str(out))
    assert a.case == "lid"
    lo, hi = a.mu_range
    assert (lo, hi) == (0.25, 1.0)
    full = pgdflow.solve_full(small("lid"), 1.0)
    online = a.evaluate(1.0)
    err = np.linalg.norm(online["u"] - full["u"]) / np.linalg.norm(full["u"])
    assert err < 1e-2
    with pytest.raises(ValueError):
        a.evaluate(0.1)

    status, body = a.evaluate_json("0.5", "2")
    assert status == 200
    assert json.loads(body)["stride"] == 2
    assert a.evaluate_json("7", "")[0] == 400
    assert json.loads(a.meta_json())["n_modes"] == a.n_modes


@pytest.mark.skipif("PGDFLOW_CLI" not in os.environ, reason="CLI path not provided")
def test_cli_rejects_out_of_range_mu(tmp_path):
    cli = os.environ["PGDFLOW_CLI"]
    out = tmp_path / "arch"
    pgdflow.pgd_offline(small("lid", max_modes=1), str(out))
    r = subprocess.run([cli, "evaluate", "--archive", str(out), "--mu", "0.5"], capture_output=True, text=True)
    assert r.returncode == 0
    r = subprocess.run([cli, "evaluate", "--archive", str(out), "--mu", "5"], capture_output=True, text=True)
    assert r.returncode == 2
