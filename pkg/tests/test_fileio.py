import json

import numpy as np
import pytest

from grouplpq import fileio
from grouplpq.datagen import GenSpec, gen_problem
from grouplpq.model import INF


def test_array_layout_is_column_major_little_endian(tmp_path):
    A = np.arange(6.0).reshape(2, 3)
    fileio.write_array(tmp_path / "a.bin", A)
    raw = (tmp_path / "a.bin").read_bytes()
    assert np.frombuffer(raw, dtype="<f8").tolist() == [0, 3, 1, 4, 2, 5]
    np.testing.assert_array_equal(fileio.read_array(tmp_path / "a.bin", (2, 3)), A)
    with pytest.raises(ValueError):
        fileio.read_array(tmp_path / "a.bin", (4, 2))


@pytest.mark.parametrize("r", [2.0, INF])
def test_problem_round_trip(tmp_path, r):
    prob, _ = gen_problem(GenSpec(M=8, N=16, n=4, s=1, seed=2), 0.05, r=r)
    path = fileio.save_problem(prob, tmp_path / "prob.json")
    meta = json.loads(path.read_text())
    assert set(meta) == set(fileio.MANIFEST_KEYS)
    back = fileio.load_problem(path)
    assert np.array_equal(back.A, prob.A) and np.array_equal(back.y, prob.y)
    assert (back.alpha, back.p, back.q, back.r) == (prob.alpha, prob.p, prob.q, prob.r)
    assert back.partition == prob.partition


def test_manifest_missing_keys(tmp_path):
    (tmp_path / "m.json").write_text("{}")
    with pytest.raises(ValueError, match="lacks"):
        fileio.load_problem(tmp_path / "m.json")


def test_solution_round_trip(tmp_path):
    _, x = gen_problem(GenSpec(M=8, N=16, n=4, s=2, seed=2), 0.05)
    sidecar = fileio.save_solution(x, tmp_path / "x.bin", {"note": np.float64(1.5), "v": np.arange(2)})
    back, meta = fileio.load_solution(tmp_path / "x.bin")
    assert sidecar.name == "x.bin.json"
    assert np.array_equal(back.values, x.values) and meta["note"] == 1.5 and meta["v"] == [0, 1]
