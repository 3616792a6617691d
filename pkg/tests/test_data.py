import json
import warnings

import numpy as np
import pytest

from mtebounds import sample
from mtebounds.data import (CellDistribution, dataset_from_arrays, estimate_distribution, ingest_csv,
                            load_distribution, save_distribution, write_csv)
from mtebounds.errors import DataError, FormatError, RelevanceError


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_ingest_small_file(tmp_path):
    p = write(tmp_path, "y,d,z\n0,0,0\n1,0,1\n0,1,0\n1,1,1\n")
    data = ingest_csv(p)
    assert len(data) == 4
    assert all(data.levels[c] == (0, 1) for c in ("y", "d", "z"))


def test_three_level_w(tmp_path):
    p = write(tmp_path, "y,d,z,w\n0,0,0,0\n1,0,1,1\n0,1,0,2\n1,1,1,0\n")
    data = ingest_csv(p, w="w")
    assert data.levels["w"] == (0, 1, 2)


def test_missing_value_names_row(tmp_path):
    p = write(tmp_path, "y,d,z\n0,0,0\n,1,1\n")
    with pytest.raises(DataError, match="row 3"):
        ingest_csv(p)


@pytest.mark.parametrize("text,match", [
    ("y,d\n0,0\n", "missing required column"),
    ("", "empty"),
    ("y,d,z\n", "no data rows"),
    ("y,d,z\n0.5,0,1\n", "non-integer"),
    ("y,d,z\nabc,0,1\n", "non-numeric"),
    ("y,d,z\n2,0,1\n", "0 or 1"),
])
def test_bad_files(tmp_path, text, match):
    with pytest.raises(DataError, match=match):
        ingest_csv(write(tmp_path, text))


def test_unreadable_file(tmp_path):
    with pytest.raises(DataError):
        ingest_csv(tmp_path / "nope.csv")


def test_multiple_x_columns_combine(tmp_path):
    rows = ["y,d,z,a,b"] + [f"{i % 2},{(i // 2) % 2},{i % 2},{i % 2},{(i // 3) % 2}" for i in range(12)]
    data = ingest_csv(write(tmp_path, "\n".join(rows) + "\n"), x=("a", "b"))
    assert data.levels["x"] == (0, 1, 2, 3)
    assert np.array_equal(data.codes["x"], [(i % 2) * 2 + (i // 3) % 2 for i in range(12)])


def test_balanced_dataset_is_half():
    y = [0, 1, 0, 1, 0, 1, 0, 1]
    d = [0, 0, 1, 1, 0, 0, 1, 1]
    z = [0, 0, 0, 0, 1, 1, 1, 1]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        dist = estimate_distribution(dataset_from_arrays(y, d, z))
    cond = dist.conditional
    assert np.allclose(cond.sum(axis=0), 0.5)
    assert np.allclose(dist.propensity_zx(), 0.5)
    assert np.allclose(cond.sum(axis=(0, 1)), 1.0)


def test_empty_cell_flagged():
    y = [0, 1, 0, 1]
    d = [0, 1, 0, 1]
    z = [0, 0, 1, 1]
    w = [0, 0, 0, 1]
    with pytest.warns(UserWarning):
        dist = estimate_distribution(dataset_from_arrays(y, d, z, w))
    assert (0, 1, 0) in dist.empty_cells


def test_million_draws_match_population(dgp, pop):
    dist = estimate_distribution(sample(dgp, 1_000_000, seed=1))
    assert np.max(np.abs(dist.joint - pop.joint)) < 0.002
    err = np.abs(dist.conditional - pop.conditional).ravel()
    assert np.mean(err < 5e-3) >= 0.99


def test_round_trip(tmp_path, pop):
    path = tmp_path / "dist.json"
    save_distribution(pop, path)
    again = load_distribution(path)
    assert np.array_equal(again.joint, pop.joint)
    assert again.levels == pop.levels and again.n == 0


def test_normalization_violation(tmp_path, pop):
    obj = pop.to_dict()
    obj["joint"] = [0.99 * v for v in obj["joint"]]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(obj))
    with pytest.raises(FormatError):
        load_distribution(path)


def test_hand_written_table(tmp_path):
    # p(y, d | z) for a binary instrument, no W or X
    cond = {0: [[0.30, 0.05], [0.45, 0.20]], 1: [[0.10, 0.20], [0.15, 0.55]]}
    joint = np.zeros((2, 2, 2, 1, 1))
    for z, tab in cond.items():
        for y in range(2):
            for d in range(2):
                joint[y, d, z, 0, 0] = 0.5 * tab[y][d]
    obj = {"format": "cell-distribution/1", "axes": ["y", "d", "z", "w", "x"],
           "levels": {"y": [0, 1], "d": [0, 1], "z": [0, 1], "w": [0], "x": [0]},
           "shape": [2, 2, 2, 1, 1], "joint": joint.ravel().tolist()}
    path = tmp_path / "bp.json"
    path.write_text(json.dumps(obj))
    dist = load_distribution(path)
    assert dist.propensity_zx()[:, 0] == pytest.approx([0.25, 0.75])


def test_relevance_check():
    joint = np.full((2, 2, 2, 1, 1), 1 / 8)
    joint[:, 0, 1] = 0.0  # everyone treated when z = 1
    joint[:, 1, 1] = 1 / 4
    dist = CellDistribution(joint, {})
    with pytest.raises(RelevanceError):
        dist.check_relevance()


def test_csv_writer_round_trip(tmp_path, dgp):
    data = sample(dgp, 50, seed=3)
    path = tmp_path / "s.csv"
    write_csv(data, path)
    again = ingest_csv(path, w="w", x="x")
    for c in ("y", "d", "z", "w", "x"):
        assert np.array_equal(again.column(c), data.column(c))
