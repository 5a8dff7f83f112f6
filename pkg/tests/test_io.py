import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nsplearn import io
from nsplearn.arm import DEFAULT_ARM, LAMBDA_XZ
from nsplearn.constraints import FixedRows, SelectionEstimate, fit_state_dependent_rows
from nsplearn.data import Dataset, add_policy_noise, generate_arm_trajectories, generate_toy_dataset
from nsplearn.errors import ParseError
from nsplearn.lm import LmOptions
from nsplearn.nullspace import fit_nullspace_component
from nsplearn.policies import PolicySpec


@settings(max_examples=15)
@given(st.sampled_from(["linear", "limit_cycle", "sinusoidal"]), st.integers(0, 1000), st.integers(1, 30))
def test_toy_round_trip_is_bit_exact(tmp_path_factory, kind, seed, n):
    path = tmp_path_factory.mktemp("io") / "d.txt"
    d = add_policy_noise(generate_toy_dataset(PolicySpec(kind), n, seed), 0.05, seed)
    io.write_dataset(d, path)
    assert io.read_dataset(path) == d


def test_arm_round_trip_keeps_boundaries(tmp_path):
    d = generate_arm_trajectories(LAMBDA_XZ, 3, 5, seed=1)
    io.write_dataset(d, tmp_path / "arm.txt")
    back = io.read_dataset(tmp_path / "arm.txt")
    assert back == d
    assert back.trajectories() == d.trajectories()


def test_round_trip_without_ground_truth(tmp_path):
    rng = np.random.default_rng(0)
    d = Dataset(rng.normal(size=(6, 3)), rng.normal(size=(6, 3)), meta={"scenario": "raw"})
    io.write_dataset(d, tmp_path / "raw.txt")
    assert io.read_dataset(tmp_path / "raw.txt") == d


@pytest.fixture
def written(tmp_path):
    d = generate_toy_dataset(PolicySpec("linear"), 8, 0)
    path = tmp_path / "d.txt"
    io.write_dataset(d, path)
    return path


def test_truncated_file_is_rejected(written):
    text = written.read_text()
    written.write_text(text[:-7])
    with pytest.raises(ParseError):
        io.read_dataset(written)


def test_missing_record_is_rejected(written):
    lines = written.read_text().splitlines(keepends=True)
    written.write_text("".join(lines[:-1]))
    with pytest.raises(ParseError, match="records"):
        io.read_dataset(written)


@pytest.mark.parametrize("corrupt", [
    lambda s: s.replace("dims", "dimz", 1),
    lambda s: s.replace(",", ",x", 1),
    lambda s: s.replace("\n", "\n1.0,", 2),
    lambda s: "",
])
def test_malformed_files(written, corrupt):
    written.write_text(corrupt(written.read_text()))
    with pytest.raises(ParseError):
        io.read_dataset(written)


def test_parse_error_reports_line(written):
    lines = written.read_text().split("\n")
    lines[3] = "1.0,2.0"
    written.write_text("\n".join(lines))
    with pytest.raises(ParseError) as info:
        io.read_dataset(written)
    assert info.value.line == 4


def test_model_and_estimate_round_trip(tmp_path):
    d = generate_toy_dataset(PolicySpec("limit_cycle"), 40, 2)
    model = fit_nullspace_component(d, 6, restarts=1, scales=(1.0,))
    io.write_model(model, tmp_path / "m.txt")
    back = io.read_model(tmp_path / "m.txt")
    np.testing.assert_array_equal(back.weights, model.weights)
    np.testing.assert_array_equal(back.feature_map.centres, model.feature_map.centres)
    assert back.feature_map.bandwidth == model.feature_map.bandwidth

    fixed = FixedRows(np.array([[0.6, 0.8]]), 2)
    io.write_estimate(fixed, tmp_path / "f.txt")
    np.testing.assert_array_equal(io.read_estimate(tmp_path / "f.txt").rows, fixed.rows)

    sel = SelectionEstimate(np.array([[1.0, 0.0, 0.0]]), DEFAULT_ARM.jacobian, 3)
    io.write_estimate(sel, tmp_path / "s.txt")
    q = np.array([[0.1, 1.5, 0.2]])
    np.testing.assert_array_equal(io.read_estimate(tmp_path / "s.txt").projections(q), sel.projections(q))

    sd = fit_state_dependent_rows(d.x, d.u_ns, d.u_ts, 5, LmOptions(max_iter=20, multistart=2))
    io.write_estimate(sd, tmp_path / "sd.txt")
    np.testing.assert_array_equal(io.read_estimate(tmp_path / "sd.txt").projections(d.x), sd.projections(d.x))


def test_estimate_with_unknown_variant(tmp_path):
    (tmp_path / "e.txt").write_text("estimate mystery u=2 k=0\n")
    with pytest.raises(ParseError):
        io.read_estimate(tmp_path / "e.txt")
