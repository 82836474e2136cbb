"""Shift operators, the optimal phase measurement, and uncertainty costs.

The estimation vectors are |e(phi)> = sum_n exp(i*(n*phi + chi_n)) |n>,
so for a phase-pure state the overlap <e(phi)|rho|e(phi)> depends only on
the coherence moduli and every shift-operator moment <e_+^k> is a real
number in [0, 1].  Phase uncertainty is any monotone function f of the
mean of a cost operator

    C = c0 - sum_k c_k (e_+^k + e_-^k),   c_k >= 0,

which for phase-pure states reduces to <C> = c0 - 2 sum_k c_k <e_+^k>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GridTooCoarseError, KTooLargeError
from .states import DensityMatrix, PhasePureDecomposition, Spectrum

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class ShiftOperator:
    """Phase-referenced raising operator e_+ on a finite ladder.

    (e_+)_{n+1,n} = exp(i*(chi_{n+1} - chi_n)); nilpotent (no wrap-around,
    also on the cyclic kind).  e_- is the adjoint.
    """

    spectrum: Spectrum
    chi: np.ndarray
    matrix: np.ndarray

    def power(self, k: int) -> np.ndarray:
        return shift_power(self.chi, k)

    @property
    def lowering(self) -> np.ndarray:
        return self.matrix.conj().T


def shift_power(chi: np.ndarray, k: int) -> np.ndarray:
    """e_+^k built directly: entries exp(i*(chi_{n+k} - chi_n)) at (n+k, n)."""
    d = len(chi)
    if k < 0 or k > d:
        raise KTooLargeError(f"power {k} out of range for {d} levels")
    mat = np.zeros((d, d), dtype=complex)
    if k == 0:
        np.fill_diagonal(mat, 1.0)
    elif k < d:
        mat[np.arange(k, d), np.arange(0, d - k)] = np.exp(1j * (chi[k:] - chi[:-k]))
    return mat


def shift_operator(spectrum: Spectrum, chi: np.ndarray | None = None) -> ShiftOperator:
    if chi is None:
        chi = np.zeros(spectrum.dim)
    chi = np.asarray(chi, dtype=float)
    if chi.shape != (spectrum.dim,):
        raise ValueError(f"chi must have {spectrum.dim} entries")
    return ShiftOperator(spectrum, chi, shift_power(chi, 1))


def modulus_moments(matrix: np.ndarray, kmax: int) -> np.ndarray:
    """[sum_l |rho_{l,l+k}| for k = 1..kmax]; equals <e_+^k> when phase-pure."""
    return np.array(
        [float(np.abs(matrix.diagonal(k)).sum()) for k in range(1, kmax + 1)]
    )


def moment(rho: DensityMatrix, decomp: PhasePureDecomposition, k: int) -> float:
    """<e_+^k> = Tr[rho e_+^k], real in [0, 1] for a phase-pure state."""
    d = rho.dim
    if k < 1:
        raise ValueError("moment order must be >= 1")
    if k > d - 1:
        raise KTooLargeError(f"moment order {k} exceeds d-1 = {d - 1}")
    chi = decomp.chi
    # Tr[rho e_+^k] = sum_n rho_{n,n+k} (e_+^k)_{n+k,n}
    val = complex(np.sum(rho.matrix.diagonal(k) * np.exp(1j * (chi[k:] - chi[:-k]))))
    if abs(val.imag) > 1e-12:
        raise ValueError(
            f"moment has imaginary residue {val.imag:.3e}; state and "
            "decomposition are inconsistent"
        )
    return float(val.real)


def phase_grid(m: int) -> np.ndarray:
    """m equally spaced points on [0, 2*pi)."""
    return np.arange(m) * (TWO_PI / m)


def phase_distribution(
    rho: DensityMatrix, decomp: PhasePureDecomposition, m: int | None = None
) -> np.ndarray:
    """Probability density of the estimated phase on a uniform grid.

    p(phi) = (1 + 2 sum_k <e_+^k> cos(k phi)) / (2 pi).  The density is a
    trigonometric polynomial of degree d-1, so a grid of m >= 2d points
    integrates it exactly; coarser grids alias the top mode and raise.
    """
    d = rho.dim
    if m is None:
        m = 8 * d
    if m < 2 * d:
        raise GridTooCoarseError(f"need at least {2 * d} grid points, got {m}")
    mu = modulus_moments(decomp.moduli, d - 1)
    phis = phase_grid(m)
    k = np.arange(1, d)
    p = (1.0 + 2.0 * (np.cos(np.outer(phis, k)) @ mu)) / TWO_PI
    return p


def overlap_distribution(rho: DensityMatrix, chi: np.ndarray, m: int) -> np.ndarray:
    """(1/2pi) <e(phi)|rho|e(phi)> on a uniform grid, for arbitrary rho.

    Used for measurement-completeness and covariance checks where the
    estimation vectors are held fixed while the state is transformed.
    """
    d = rho.dim
    chi = np.asarray(chi, dtype=float)
    phis = phase_grid(m)
    vec = np.exp(1j * (np.outer(phis, np.arange(d)) + chi[None, :]))
    p = np.real(np.einsum("jn,jn->j", vec.conj() @ rho.matrix, vec)) / TWO_PI
    return p


@dataclass(frozen=True)
class CostFunction:
    """Coefficients of the cost operator plus a monotone link map.

    kind 'phase_deviation': f(x) = 2*(1 - x^2/4), c0 = 0, c_1 = 1.
    kind 'rpl':             f(x) = -1/x, c0 = -1, all c_k = 1; the value is
                            the reciprocal of 2*pi times the peak density.
    kind 'affine':          f(x) = a + b*x with b > 0.
    """

    kind: str
    c0: float
    coeffs: np.ndarray
    a: float = 0.0
    b: float = 1.0
    name: str = ""

    @property
    def order(self) -> int:
        return len(self.coeffs)

    def f(self, x: float) -> float:
        if self.kind == "phase_deviation":
            return 2.0 * (1.0 - x * x / 4.0)
        if self.kind == "rpl":
            if x == 0.0:
                return math.inf
            return -1.0 / x
        return self.a + self.b * x


def _validate_cost(cost: CostFunction) -> CostFunction:
    coeffs = np.asarray(cost.coeffs, dtype=float)
    if len(coeffs) < 1:
        raise ValueError("cost needs at least one coefficient")
    if np.any(coeffs < 0):
        raise ValueError("cost coefficients must be non-negative")
    # f must be monotone increasing over the attainable <C> range
    lo = cost.c0 - 2.0 * float(coeffs.sum())
    hi = cost.c0
    xs = np.linspace(lo, hi, 33)
    ys = [cost.f(float(x)) for x in xs if x != 0.0 or cost.kind != "rpl"]
    if any(y2 < y1 - 1e-12 for y1, y2 in zip(ys, ys[1:])):
        raise ValueError("link map is not monotone increasing on the cost range")
    return cost


def phase_deviation_cost() -> CostFunction:
    return _validate_cost(
        CostFunction("phase_deviation", 0.0, np.ones(1), name="phase_deviation")
    )


def reciprocal_peak_likelihood_cost(k_max: int) -> CostFunction:
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    return _validate_cost(CostFunction("rpl", -1.0, np.ones(k_max), name="rpl"))


def affine_cost(
    coeffs, c0: float = 0.0, a: float = 0.0, b: float = 1.0, name: str = "affine"
) -> CostFunction:
    if b <= 0:
        raise ValueError("affine link needs slope b > 0")
    return _validate_cost(
        CostFunction("affine", c0, np.asarray(coeffs, dtype=float), a=a, b=b, name=name)
    )


def mean_cost_from_moments(cost: CostFunction, mu: np.ndarray) -> float:
    """<C> = c0 - 2 sum_k c_k mu_k (the adjoint moments double up)."""
    kk = cost.order
    return float(cost.c0 - 2.0 * np.dot(cost.coeffs, mu[:kk]))


def mean_cost(
    rho: DensityMatrix, decomp: PhasePureDecomposition, cost: CostFunction
) -> float:
    d = rho.dim
    if cost.order > d - 1:
        raise KTooLargeError(
            f"cost has {cost.order} coefficients, at most d-1 = {d - 1} act on "
            f"{d} levels"
        )
    mu = np.array([moment(rho, decomp, k) for k in range(1, cost.order + 1)])
    return mean_cost_from_moments(cost, mu)


def delta_phi_from_moments(cost: CostFunction, mu: np.ndarray) -> float:
    return cost.f(mean_cost_from_moments(cost, mu))


def phase_uncertainty(
    rho: DensityMatrix, decomp: PhasePureDecomposition, cost: CostFunction
) -> float:
    """delta_phi = f(<C>); +inf sentinel at the fully dephased singularity."""
    return cost.f(mean_cost(rho, decomp, cost))


def cost_operator(cost: CostFunction, chi: np.ndarray, dim: int) -> np.ndarray:
    """Assemble C = c0*I - sum_k c_k (e_+^k + e_-^k) as an explicit matrix."""
    if cost.order > dim - 1:
        raise KTooLargeError(
            f"cost has {cost.order} coefficients, at most d-1 = {dim - 1} act"
        )
    mat = cost.c0 * np.eye(dim, dtype=complex)
    for k, ck in enumerate(cost.coeffs, start=1):
        if ck == 0.0:
            continue
        p = shift_power(chi, k)
        mat -= ck * (p + p.conj().T)
    return mat
