"""Secondary acceptance: render the cost and timing figures from real outputs
of the control package's CLI (consumed strictly through its file contracts),
and check that golden-image hashes are stable across two runs."""

import hashlib
import json
import shutil
import subprocess
import sys

import pytest
import yaml

from drce_plots import FigureSpec, render

DRCE = shutil.which("drce")

pytestmark = pytest.mark.skipif(DRCE is None, reason="drce CLI not installed")


def make_experiment_outputs(tmp_path):
    """Downscaled version of the cost-grid protocol, via the drce CLI."""
    out = tmp_path / "out"
    cfg = {
        "version": 1,
        "system": {"builtin": "paper10", "horizon": 4},
        "nominal": {"source": "from_true", "n_samples": {"w": 15, "v": 15, "x0": 15},
                    "seed": 2024},
        "true_distributions": {
            "w": {"kind": "uquadratic", "a": 0.0, "b": 2.0},
            "v": {"kind": "uquadratic", "a": -0.5, "b": 2.5},
            "x0": {"kind": "uquadratic", "a": 0.8, "b": 1.2},
        },
        "robustness": {"theta_w_grid": [0.1], "theta_v_grid": [0.5, 2.0],
                       "theta_x0": 2.0, "lambda": {"mode": "fixed", "value": 50.0}},
        "simulation": {"n_runs": 5, "base_seed": 7, "methods": ["wdrce", "lqg"]},
        "solver": {"tol": 1e-3},
        "output_dir": str(out),
    }
    cfg_path = tmp_path / "cfg.yaml"
    cfg_path.write_text(yaml.safe_dump(cfg))
    subprocess.run([DRCE, "offline", "--config", str(cfg_path)], check=True,
                   capture_output=True)
    subprocess.run([DRCE, "simulate", "--config", str(cfg_path)], check=True,
                   capture_output=True)
    return out / "runs.csv"


def make_timing_sweep(tmp_path):
    script = [sys.executable, "-c", (
        "import json, time, numpy as np\n"
        "from drce.model import NominalModel, RobustnessConfig\n"
        "from drce.riccati import backward_pass\n"
        "from drce.systems import builtin_system\n"
        "from drce.worstcase import forward_pass\n"
        "entries = []\n"
        "for T in (3, 5):\n"
        "    s = builtin_system('paper10', T=T)\n"
        "    nom = NominalModel.stationary(T, np.zeros(10), 0.1*np.eye(10),\n"
        "        np.zeros(10), 1.5*np.eye(10), np.zeros(10), 0.1*np.eye(10))\n"
        "    cfg = RobustnessConfig(1.0, 1.0, 1.0, 10.0)\n"
        "    times = []\n"
        "    for _ in range(2):\n"
        "        t0 = time.perf_counter()\n"
        "        rc = backward_pass(s, nom, 10.0)\n"
        "        forward_pass(rc, nom, cfg, s, tol=1e-3)\n"
        "        times.append(time.perf_counter() - t0)\n"
        "    entries.append({'T': T, 'times_s': times})\n"
        "print(json.dumps({'format': 'drce-timing-sweep', 'version': 1,"
        " 'entries': entries}))\n")]
    result = subprocess.run(script, check=True, capture_output=True, text=True)
    path = tmp_path / "timing_sweep.json"
    path.write_text(result.stdout)
    return path


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


def test_criterion_10_figures_from_experiment_outputs(tmp_path):
    runs_csv = make_experiment_outputs(tmp_path)
    timing = make_timing_sweep(tmp_path)

    hashes = []
    for tag in ("first", "second"):
        cost_paths = render(FigureSpec(kind="cost_surface", csv=runs_csv,
                                       out=tmp_path / f"cost_{tag}"))
        time_paths = render(FigureSpec(kind="time_scaling", timing=timing,
                                       out=tmp_path / f"time_{tag}"))
        assert all(p.exists() and p.stat().st_size > 0 for p in cost_paths + time_paths)
        hashes.append([sha(p) for p in cost_paths + time_paths])
    ok = hashes[0] == hashes[1]
    print(f"[criterion 10] {'PASS' if ok else 'FAIL'}: figures render and hashes stable")
    assert ok
