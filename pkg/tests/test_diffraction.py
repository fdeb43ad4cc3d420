import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from hardlab.diffraction import (
    StructureFactorCurve,
    classify_snapshot,
    probe_window,
    smeared_reference,
    structure_factor,
    uniform_positions,
)

Q = probe_window(30.0, 3.0, 16)


def test_single_scatterer():
    s = structure_factor([[1.3, -2.0]], Q)
    np.testing.assert_allclose(s.s, 1.0, rtol=1e-14)


def test_forward_limit():
    pos = np.random.default_rng(0).uniform(-10, 10, size=(50, 2))
    assert structure_factor(pos, [0.0]).s[0] == pytest.approx(50.0, rel=1e-15)
    assert structure_factor(pos, [1e-6]).s[0] == pytest.approx(50.0, rel=1e-8)


@given(st.floats(0.1, 5.0), st.floats(0.01, 10.0), st.floats(0, 2 * math.pi))
def test_two_points_along_separation(d, q, phi):
    u = np.array([math.cos(phi), math.sin(phi)])
    pos = np.array([[0.0, 0.0], d * u])
    s = structure_factor(pos, [q], directions=[u]).s[0]
    assert abs(s - (1 + math.cos(q * d))) < 1e-12


@settings(max_examples=20)
@given(st.floats(-50, 50), st.floats(-50, 50))
def test_translation_invariance(dx, dy):
    pos = np.random.default_rng(1).uniform(-10, 10, size=(40, 2))
    a = structure_factor(pos, Q).s
    b = structure_factor(pos + [dx, dy], Q).s
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-10)


def test_relabeling_invariance():
    rng = np.random.default_rng(2)
    pos = rng.uniform(-10, 10, size=(40, 2))
    a = structure_factor(pos, Q).s
    b = structure_factor(pos[rng.permutation(40)], Q).s
    np.testing.assert_allclose(a, b, rtol=1e-12)


def test_nonnegative_and_grid_increasing():
    pos = np.random.default_rng(3).uniform(-10, 10, size=(40, 2))
    s = structure_factor(pos, Q, shell=0.3, n_shell=5)
    assert (s.s >= 0).all()
    assert (np.diff(s.q) > 0).all()


def test_empty_input():
    with pytest.raises(ValueError):
        structure_factor(np.empty((0, 2)), Q)


def test_window_warning():
    pos = [[0.0, 0.0], [1.0, 0.0]]
    with pytest.warns(UserWarning):
        structure_factor(pos, [10.0], window=(0.1, 1.0))
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        structure_factor(pos, Q, window=(Q[0], Q[-1]))


def test_reference_single_disc():
    ref = smeared_reference(1, 10.0, Q, n_samples=100)
    np.testing.assert_allclose(ref.s, 1.0, rtol=1e-14)
    assert (ref.sigma == 0).all()


def test_reference_tends_to_one():
    ref = smeared_reference(50, 20.0, probe_window(20.0, 2.0, 8), n_samples=200, seed=4)
    hi = ref.q > 10 * 2 * math.pi / 20.0
    assert np.all(np.abs(ref.s[hi] - 1.0) <= ref.sigma[hi])


def test_reference_deterministic_and_sample_floor():
    a = smeared_reference(20, 10.0, Q, n_samples=100, seed=9)
    b = smeared_reference(20, 10.0, Q, n_samples=100, seed=9)
    np.testing.assert_array_equal(a.s, b.s)
    np.testing.assert_array_equal(a.sigma, b.sigma)
    with pytest.raises(ValueError):
        smeared_reference(20, 10.0, Q, n_samples=50)


def test_classify_identical_is_zero():
    ref = smeared_reference(20, 10.0, Q, n_samples=100)
    verdict, z = classify_snapshot(StructureFactorCurve(ref.q, ref.s.copy()), ref)
    assert verdict == "indistinguishable" and z == 0.0


def test_classify_grid_mismatch():
    ref = smeared_reference(20, 10.0, Q, n_samples=100)
    with pytest.raises(ValueError):
        classify_snapshot(StructureFactorCurve(Q[:-1], np.ones(len(Q) - 1)), ref)


def test_uniform_snapshots_mostly_indistinguishable():
    q = probe_window(20.0, 2.0, 32)
    ref = smeared_reference(60, 20.0, q, n_samples=200, seed=0, shell=0.3, n_shell=7)
    verdicts = []
    for i in range(30):
        pos = uniform_positions(60, 20.0, np.random.default_rng([5, i]))
        snap = structure_factor(pos, q, shell=0.3, n_shell=7)
        verdicts.append(classify_snapshot(snap, ref)[0] == "indistinguishable")
    assert np.mean(verdicts) >= 0.85


def test_uniform_positions_inside_disc():
    p = uniform_positions(500, 3.0, np.random.default_rng(0))
    assert np.hypot(*p.T).max() <= 3.0


def test_curve_csv(tmp_path):
    ref = smeared_reference(5, 10.0, Q, n_samples=100)
    ref.to_csv(tmp_path / "c.csv")
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "q,S_mean,S_sigma" and len(lines) == len(Q) + 1
