import numpy as np
import pytest

from covphase import DensityMatrix, make_density


def random_density(rng, d, rank=None):
    """Ginibre-style random density matrix (generally not phase-pure)."""
    rank = rank or d
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    mat = g @ g.conj().T
    mat = mat / np.real(np.trace(mat))
    mat = 0.5 * (mat + mat.conj().T)
    return mat


def cocycle_residual_oracle(mat, tol=1e-10):
    """Independent brute-force check: worst wrapped phase residual over all
    index triples whose three entries are above threshold."""
    d = mat.shape[0]
    worst = 0.0
    for n in range(d):
        for m in range(d):
            for l in range(d):
                if (
                    abs(mat[n, m]) > tol
                    and abs(mat[m, l]) > tol
                    and abs(mat[n, l]) > tol
                ):
                    r = np.angle(mat[n, m]) + np.angle(mat[m, l]) - np.angle(mat[n, l])
                    r = abs((r + np.pi) % (2 * np.pi) - np.pi)
                    worst = max(worst, r)
    return worst


def rephase(rho: DensityMatrix, theta) -> DensityMatrix:
    """Conjugate by diag(exp(i theta_n)) (stays a valid state)."""
    u = np.exp(1j * np.asarray(theta))
    return make_density(rho.spectrum, rho.matrix * u[:, None] * u.conj()[None, :])


@pytest.fixture
def rng():
    return np.random.default_rng(20260809)
