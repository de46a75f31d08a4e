import json
import logging
import os

import numpy as np
import pytest

import imuon.backend.manifold_part.manifolds as manifolds
from imuon.backend.optimizer_part.optimizer import TrajectoryRecord
from imuon.backend.problem_part.problems import CompletionInstance, gen_completion
from imuon.backend.utility import utils
from imuon.backend.utility.errors import InvalidInput


# ===== MATRIX FILES =====

def test_matrix_file_layout(tmp_path):
    path = str(tmp_path / "M.txt")
    utils.write_matrix(path, np.array([[1.0, 0.1], [1.0 / 3.0, -2.5]]))
    lines = open(path, encoding="utf-8").read().splitlines()
    assert lines[0] == "2 2"
    assert lines[1] == "1 0.10000000000000001"
    assert float(lines[2].split()[0]) == 1.0 / 3.0


def test_matrix_file_is_exact(tmp_path, rng):
    path = str(tmp_path / "M.txt")
    M = rng.standard_normal((4, 3))
    utils.write_matrix(path, M)
    assert np.array_equal(utils.read_matrix(path), M)


def test_read_matrix_rejects_malformed_files(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("2 3\n1 2 3\n", encoding="utf-8")
    with pytest.raises(InvalidInput):
        utils.read_matrix(str(path))
    path.write_text("two three\n", encoding="utf-8")
    with pytest.raises(InvalidInput):
        utils.read_matrix(str(path))
    path.write_text("", encoding="utf-8")
    with pytest.raises(InvalidInput):
        utils.read_matrix(str(path))


# ===== POINT FILES =====

@pytest.mark.parametrize("kind, dims", [
    ("fixed_rank", {"m": 5, "n": 4, "r": 2}),
    ("spd", {"n": 3}),
    ("stiefel", {"m": 5, "r": 2}),
])
def test_point_files(kind, dims, tmp_path, rng):
    path = str(tmp_path / "x.txt")
    x = manifolds.random_point(kind, dims, rng)
    utils.write_point(path, x)
    y = utils.read_point(path)
    assert type(y) is type(x)
    if kind == "fixed_rank":
        assert np.array_equal(y.B, x.B) and np.array_equal(y.A, x.A)
    else:
        assert np.array_equal(y.X, x.X)


def test_point_files_reject_products_and_unknown_kinds(tmp_path, rng):
    a = manifolds.random_point("spd", {"n": 2}, rng)
    with pytest.raises(InvalidInput):
        utils.write_point(str(tmp_path / "p.txt"), manifolds.ProductPoint((a, a)))
    path = tmp_path / "q.txt"
    path.write_text("torus 1 1\n0\n", encoding="utf-8")
    with pytest.raises(InvalidInput):
        utils.read_point(str(path))


# ===== TRAJECTORIES =====

def test_trajectory_writer(tmp_path):
    path = str(tmp_path / "run" / "traj.jsonl")
    writer = utils.TrajectoryWriter(path, {"method": "imuon", "seed": 3})
    record = TrajectoryRecord(
        t=0, f_value=1.5, dual_value=0.5, H_dual=0.5, H_dual_sum=0.5,
        riem_norm_sq=1.0, step_eta=0.1, wall_time=0.0,
    )
    writer.append([record, {"t": 10, "f_value": 1.0}])
    assert writer.records_written == 2
    loaded = utils.read_trajectory(path)
    assert loaded["header"] == {"method": "imuon", "seed": 3}
    assert [r["t"] for r in loaded["records"]] == [0, 10]
    assert loaded["records"][0]["metric"] is None


def test_read_trajectory_needs_a_header(tmp_path):
    path = tmp_path / "traj.jsonl"
    path.write_text(json.dumps({"t": 0}) + "\n", encoding="utf-8")
    with pytest.raises(InvalidInput):
        utils.read_trajectory(str(path))


# ===== INSTANCES =====

def test_completion_instance_directory(tmp_path):
    instance = gen_completion(12, 10, 2, 2, 10.0, 0.1, seed=5)
    utils.save_instance(instance, str(tmp_path / "inst"))
    assert sorted(os.listdir(tmp_path / "inst")) == [
        "U_star.txt", "V_star.txt", "Y.txt", "meta.json", "omega.csv", "sigma_star.txt",
    ]
    loaded = utils.load_instance(CompletionInstance, str(tmp_path / "inst"))
    assert (loaded.m, loaded.n, loaded.r, loaded.s, loaded.seed) == (12, 10, 2, 2, 5)
    assert np.array_equal(loaded.omega, instance.omega)
    assert np.array_equal(loaded.Y, instance.Y)
    assert np.array_equal(loaded.ground_truth(), instance.ground_truth())


def test_load_instance_checks_the_type(tmp_path):
    class Other:
        pass

    utils.save_instance(gen_completion(8, 8, 1, 2, 1.0, 0.0, seed=0), str(tmp_path / "inst"))
    with pytest.raises(InvalidInput):
        utils.load_instance(Other, str(tmp_path / "inst"))


# ===== LOGGING AND PROVENANCE =====

def test_setup_logging_writes_into_the_log_directory(quiet_logs):
    logname = utils.setup_logging(prefix="unit")
    logging.getLogger("imuon.test").info("hello")
    for handler in logging.getLogger().handlers:
        handler.flush()
    assert os.path.dirname(logname) == str(quiet_logs / "logs")
    assert "hello" in open(logname, encoding="utf-8").read()


def test_build_id_is_a_nonempty_string():
    ident = utils.build_id()
    assert isinstance(ident, str) and ident
