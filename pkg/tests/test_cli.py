import json

import numpy as np
import pytest
from scipy.stats import spearmanr

from nsaflow.cli import main
from nsaflow.io import read_matrix, read_matrix_file, write_matrix
from nsaflow.spca import SpcaConfig, run_spca
from nsaflow.synthetic import TWO_FACTOR_LAMBDA, two_factor

TRACE_HEADER = ["iter", "time_s", "fidelity", "orth_defect", "energy", "grad_norm", "lr", "best_energy"]


@pytest.fixture
def target(tmp_path):
    path = tmp_path / "x0.csv"
    write_matrix(path, np.abs(np.random.default_rng(1).standard_normal((12, 3))))
    return path


def test_least_squares_endpoint(tmp_path, target):
    y0 = tmp_path / "y0.csv"
    write_matrix(y0, np.random.default_rng(2).standard_normal((12, 3)))
    out = tmp_path / "y.csv"
    rc = main(["optimize", "--input", str(y0), "--target", str(target), "--w", "0",
               "--retraction", "none", "--nonneg", "off", "--out", str(out)])
    assert rc == 0
    np.testing.assert_allclose(read_matrix(out), read_matrix(target), atol=1e-5)


def test_trace_and_header(tmp_path, target):
    out, trace = tmp_path / "y.csv", tmp_path / "t.csv"
    assert main(["optimize", "--input", str(target), "--seed", "11", "--nonneg", "relu",
                 "--out", str(out), "--trace", str(trace)]) == 0
    mf = read_matrix_file(trace)
    assert mf.header == TRACE_HEADER
    assert any("seed=11" in c for c in mf.comments)
    assert np.all(mf.data[:, 1] >= 0) and np.all(np.diff(mf.data[:, 7]) <= 0)
    assert np.all(read_matrix(out) >= 0)


def test_same_seed_identical(tmp_path, target):
    files = []
    for tag in "ab":
        out, trace = tmp_path / f"y{tag}.csv", tmp_path / f"t{tag}.csv"
        assert main(["optimize", "--input", str(target), "--out", str(out), "--trace", str(trace),
                     "--no-timing", "--optimizer", "adam"]) == 0
        files.append(out.read_bytes() + trace.read_bytes())
    assert files[0] == files[1]


def test_missing_input(tmp_path, capsys):
    assert main(["optimize", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path / "y.csv")]) == 3
    assert "nope.csv" in capsys.readouterr().err


def test_malformed_input(tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2\n3\n")
    assert main(["optimize", "--input", str(bad), "--out", str(tmp_path / "y.csv")]) == 3


def test_unwritable_output(tmp_path, target):
    assert main(["optimize", "--input", str(target), "--out", str(tmp_path / "no" / "y.csv")]) == 3


def test_bad_config(tmp_path, target):
    assert main(["optimize", "--input", str(target), "--w", "1.5", "--out", str(tmp_path / "y.csv")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["optimize", "--input", str(target), "--retraction", "cayley", "--out", "y.csv"])
    assert exc.value.code == 2


def test_spca_matches_in_process(tmp_path):
    X = np.random.default_rng(3).standard_normal((40, 8))
    data, out, metrics = tmp_path / "x.csv", tmp_path / "l.csv", tmp_path / "m.csv"
    write_matrix(data, X)
    assert main(["spca", "--data", str(data), "--k", "2", "--lambda", "0", "--prox", "basic",
                 "--out", str(out), "--metrics", str(metrics)]) == 0
    ref = run_spca(X, SpcaConfig(k=2, lam=0.0))
    mf = read_matrix_file(metrics)
    assert mf.header == ["explained_variance_ratio", "sparsity", "orth_residual", "energy"]
    np.testing.assert_array_equal(mf.data[0], [ref.explained_variance_ratio, ref.sparsity, ref.orth_residual, ref.energy])
    np.testing.assert_array_equal(read_matrix(out), ref.Y)


def test_spca_k_too_large(tmp_path):
    data = tmp_path / "x.csv"
    write_matrix(data, np.ones((5, 3)) + np.arange(3))
    assert main(["spca", "--data", str(data), "--k", "4", "--out", str(tmp_path / "l.csv")]) == 2


def test_spca_two_factor_sparse(tmp_path):
    X, _ = two_factor(200, 40, noise=0.1, seed=0)
    data, out, metrics = tmp_path / "x.csv", tmp_path / "l.csv", tmp_path / "m.csv"
    write_matrix(data, X)
    for prox in ("basic", "nsa_flow"):
        assert main(["spca", "--data", str(data), "--k", "2", "--lambda", str(TWO_FACTOR_LAMBDA), "--prox", prox,
                     "--nonneg", "--out", str(out), "--metrics", str(metrics)]) == 0
        assert read_matrix(metrics)[0, 1] > 0.5


def test_sweep_endpoints(tmp_path):
    out = tmp_path / "s.csv"
    assert main(["sweep", "--w-grid", "0,1", "--seeds", "0", "--rows", "30", "--cols", "4", "--out", str(out)]) == 0
    rows = read_matrix_file(out)
    assert rows.header == ["w", "seed", "fidelity_error", "orth_defect", "sparsity", "iterations", "time_s"]
    assert rows.data[1, 3] < rows.data[0, 3]


def test_sweep_file_and_trends(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"w_grid": [0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99], "seeds": [0, 1, 2],
                                "kind": "block_nonneg", "rows": 60, "cols": 8, "noise": 0.3}))
    out = tmp_path / "s.csv"
    assert main(["sweep", "--spec", str(spec), "--workers", "3", "--out", str(out)]) == 0
    data = read_matrix(out)
    assert data.shape == (21, 7) and np.all(np.isfinite(data))
    for seed in range(3):
        d = data[data[:, 1] == seed]
        assert spearmanr(d[:, 0], d[:, 3])[0] <= -0.9
        assert spearmanr(d[:, 0], d[:, 2])[0] >= 0.9
    assert spearmanr(data[:, 0], data[:, 4])[0] > 0


@pytest.mark.parametrize("argv", [["--w-grid", ""], ["--w-grid", "0.5,0.1"], ["--w-grid", "0,2"], []])
def test_sweep_bad_grid(tmp_path, argv):
    assert main(["sweep", *argv, "--out", str(tmp_path / "s.csv")]) == 2


def test_sweep_bad_spec_file(tmp_path):
    spec = tmp_path / "spec.json"
    spec.write_text("{not json")
    assert main(["sweep", "--spec", str(spec), "--out", str(tmp_path / "s.csv")]) == 2
    spec.write_text(json.dumps({"w_grid": [0.5], "colour": 1}))
    assert main(["sweep", "--spec", str(spec), "--out", str(tmp_path / "s.csv")]) == 2
    assert main(["sweep", "--spec", str(tmp_path / "none.json"), "--out", str(tmp_path / "s.csv")]) == 3


def test_generate_deterministic(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["generate", "--kind", "toy43", "--noise", "0.05", "--seed", "7", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert read_matrix(a).shape == (4, 3)


def test_generate_bad_dims(tmp_path):
    assert main(["generate", "--kind", "block_nonneg", "--rows", "0", "--cols", "3", "--out", str(tmp_path / "g.csv")]) == 2
