import numpy as np
import pytest

from noisy_ica_kit.exceptions import InsufficientDataError, InvalidInputError, InvalidParameterError
from noisy_ica_kit.linalg import pseudo_inverse, sample_covariance, symmetrize_dataset
from noisy_ica_kit.synth import Dataset, SourceSpec, generate_dataset, make_model


def test_covariance_hand_case():
    np.testing.assert_array_equal(sample_covariance(np.array([[0.0, 0.0], [2.0, 0.0]])), [[1.0, 0.0], [0.0, 0.0]])


def test_covariance_constant_rows():
    assert np.array_equal(sample_covariance(np.tile([1.0, 2.0, 3.0], (5, 1))), np.zeros((3, 3)))


def test_covariance_needs_two_rows():
    with pytest.raises(InsufficientDataError):
        sample_covariance(np.ones((1, 2)))


def test_covariance_gaussian_model(rng):
    model = make_model(3, 0.0, [SourceSpec.gaussian()] * 3, 1)
    X = generate_dataset(model, 100_000, rng)
    BBt = model.B @ model.B.T
    assert np.linalg.norm(sample_covariance(X) - BBt) / np.linalg.norm(BBt) < 0.05


def _penrose(M, P):
    tol = 1e-8 * max(np.linalg.norm(M), 1.0)
    assert np.linalg.norm(M @ P @ M - M) <= tol
    assert np.linalg.norm(P @ M @ P - P) <= 1e-8 * max(np.linalg.norm(P), 1.0)


def test_pinv_identity():
    r = pseudo_inverse(np.eye(4), 1e-12)
    assert r.rank == 4
    np.testing.assert_array_equal(r.matrix, np.eye(4))


def test_pinv_rank_one_diag():
    r = pseudo_inverse(np.diag([2.0, 0.0]), 1e-12)
    assert r.rank == 1
    np.testing.assert_allclose(r.matrix, np.diag([0.5, 0.0]))
    _penrose(np.diag([2.0, 0.0]), r.matrix)


def test_pinv_matches_inverse(rng):
    M = rng.standard_normal((4, 4))
    r = pseudo_inverse(M, 1e-12)
    np.testing.assert_allclose(r.matrix, np.linalg.solve(M, np.eye(4)), atol=1e-8)
    _penrose(M, r.matrix)


def test_pinv_symmetric_input_gives_symmetric_output(rng):
    A = rng.standard_normal((5, 3))
    M = A @ A.T  # rank 3, symmetric
    r = pseudo_inverse(M)
    assert r.rank == 3
    assert np.max(np.abs(r.matrix - r.matrix.T)) < 1e-10
    _penrose(M, r.matrix)


def test_pinv_validation():
    with pytest.raises(InvalidInputError):
        pseudo_inverse(np.array([[np.inf, 0.0], [0.0, 1.0]]))
    for cutoff in (0.0, 1.0, -1e-3):
        with pytest.raises(InvalidParameterError):
            pseudo_inverse(np.eye(2), cutoff)


def test_symmetrize_definition():
    out = symmetrize_dataset(np.array([[1.0, 2.0], [0.5, -1.0]]))
    np.testing.assert_array_equal(out.X, [[0.5, 3.0]])
    same = symmetrize_dataset(np.ones((6, 3)))
    assert same.n == 3 and not same.X.any()
    with pytest.raises(InsufficientDataError):
        symmetrize_dataset(np.ones((1, 2)))


def test_symmetrize_odd_moments(rng):
    z = SourceSpec.bernoulli(0.2).sample(100_000, rng)
    y = symmetrize_dataset(z[:, None]).X[:, 0]
    assert abs(np.mean(y**3)) < 0.05


def test_symmetrize_length_and_mean(rng):
    X = Dataset(rng.standard_normal((1001, 2)) * 2.0)
    Y = symmetrize_dataset(X)
    assert Y.n == 500
    bound = 3 * np.sqrt(2 * 8.0 / 500)  # k * var / (n/2) with var = 2 * 4
    assert np.all(np.abs(Y.mean) < bound)
