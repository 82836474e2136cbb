"""Shift spectra, density matrices, and phase-pure decompositions.

A phase is always defined relative to a self-adjoint shift generator F
with nondegenerate integer-labelled spectrum.  Three spectrum kinds are
supported: a truncated half-infinite ladder (labels 0..d-1), a truncated
two-sided ladder (labels -L..L), and an exact finite ladder (labels
0..q-1).  Truncated kinds carry a tail-mass monitor: operations that
assume an unbounded ladder must check that the population near the
truncation edge stays below a configurable budget.

A state is *phase-pure* when every off-diagonal phase factorizes,
rho_nm = |rho_nm| * exp(i*(chi_n - chi_m)), so one phase sequence chi
describes all coherences.  Phase reconstruction walks the graph of
above-threshold entries breadth-first and then checks every remaining
entry against the assigned phases.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import (
    DimensionMismatchError,
    InconsistentPhasesError,
    NotHermitianError,
    NotPSDError,
    NotUnitTraceError,
    WrongSpectrumKindError,
)

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
MIN_EIG_TOL = -1e-10  # integrators introduce round-off at this scale
ENTRY_TOL = 1e-10
COCYCLE_TOL = 1e-8


class SpectrumKind(str, Enum):
    NATURALS = "naturals"
    INTEGERS = "integers"
    CYCLIC = "cyclic"


@dataclass(frozen=True)
class Spectrum:
    """Consecutive integer labels for the shift generator F.

    ``offset`` is the label of matrix position 0, so ``labels[i] = i + offset``.
    Cyclic spectra are exact; the other two kinds stand for infinite ladders
    truncated to a window, with a tail-mass budget on the edge populations.
    """

    kind: SpectrumKind
    dim: int
    offset: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dimension must be positive, got {self.dim}")

    @classmethod
    def naturals(cls, dim: int) -> "Spectrum":
        return cls(SpectrumKind.NATURALS, dim, 0)

    @classmethod
    def integers(cls, halfwidth: int) -> "Spectrum":
        if halfwidth < 0:
            raise ValueError("halfwidth must be >= 0")
        return cls(SpectrumKind.INTEGERS, 2 * halfwidth + 1, -halfwidth)

    @classmethod
    def cyclic(cls, q: int) -> "Spectrum":
        return cls(SpectrumKind.CYCLIC, q, 0)

    @classmethod
    def of_kind(cls, kind: SpectrumKind, dim: int) -> "Spectrum":
        if kind is SpectrumKind.INTEGERS:
            if dim % 2 == 0:
                raise ValueError("two-sided spectrum needs odd dimension (-L..L)")
            return cls.integers((dim - 1) // 2)
        if kind is SpectrumKind.NATURALS:
            return cls.naturals(dim)
        return cls.cyclic(dim)

    @property
    def labels(self) -> np.ndarray:
        return np.arange(self.dim) + self.offset

    @property
    def truncated(self) -> bool:
        return self.kind is not SpectrumKind.CYCLIC

    def tail_positions(self) -> np.ndarray:
        """Positions whose population counts as truncation tail mass."""
        if not self.truncated:
            return np.empty(0, dtype=int)
        width = -(-self.dim // 8)  # ceil(d/8)
        top = np.arange(self.dim - width, self.dim)
        if self.kind is SpectrumKind.INTEGERS:
            bottom = np.arange(0, width)
            return np.unique(np.concatenate([bottom, top]))
        return top


@dataclass(frozen=True)
class DensityMatrix:
    """A validated Hermitian, unit-trace, positive semidefinite matrix."""

    spectrum: Spectrum
    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.spectrum.dim


@dataclass(frozen=True)
class PhasePureDecomposition:
    """Moduli |rho_nm| plus the per-level phase sequence chi_n."""

    moduli: np.ndarray
    chi: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.chi)


def make_density(spectrum: Spectrum, entries) -> DensityMatrix:
    """Validate a raw matrix into a DensityMatrix.

    Raises NotHermitianError / NotUnitTraceError / NotPSDError with the
    measured violation magnitude.
    """
    mat = np.array(entries, dtype=complex)
    d = spectrum.dim
    if mat.shape != (d, d):
        raise DimensionMismatchError(
            f"expected a {d}x{d} matrix, got shape {mat.shape}"
        )
    herm = float(np.max(np.abs(mat - mat.conj().T)))
    if herm > HERMITIAN_TOL:
        raise NotHermitianError("matrix is not Hermitian", herm)
    trace_err = abs(complex(np.trace(mat)) - 1.0)
    if trace_err > TRACE_TOL:
        raise NotUnitTraceError("matrix does not have unit trace", trace_err)
    min_eig = float(np.linalg.eigvalsh(mat)[0])
    if min_eig < MIN_EIG_TOL:
        raise NotPSDError("matrix is not positive semidefinite", -min_eig)
    mat.setflags(write=False)
    return DensityMatrix(spectrum, mat)


def pure_state_density(spectrum: Spectrum, amplitudes) -> DensityMatrix:
    """Projector onto a normalized state vector."""
    psi = np.asarray(amplitudes, dtype=complex)
    if psi.shape != (spectrum.dim,):
        raise DimensionMismatchError(
            f"expected {spectrum.dim} amplitudes, got shape {psi.shape}"
        )
    norm = np.linalg.norm(psi)
    if norm == 0:
        raise ValueError("state vector is zero")
    psi = psi / norm
    return make_density(spectrum, np.outer(psi, psi.conj()))


def _wrap_angle(x):
    """Wrap angles to (-pi, pi]."""
    return -((-x + math.pi) % (2.0 * math.pi) - math.pi)


def is_phase_pure(
    rho: DensityMatrix, tol: float = ENTRY_TOL, phase_tol: float = COCYCLE_TOL
) -> PhasePureDecomposition:
    """Extract moduli and phases, or raise InconsistentPhasesError.

    Entries with |rho_nm| <= tol impose no constraint.  Phases are assigned
    by breadth-first propagation over the above-threshold entries; every
    above-threshold entry is then checked against the assigned phases and
    the worst residual beyond ``phase_tol`` raises.  The gauge is fixed by
    chi = 0 at the lowest populated level.
    """
    mat = rho.matrix
    d = rho.dim
    moduli = np.abs(mat)
    args = np.angle(mat)
    adj = moduli > tol
    np.fill_diagonal(adj, False)

    chi = np.zeros(d)
    visited = np.zeros(d, dtype=bool)
    for start in range(d):
        if visited[start]:
            continue
        visited[start] = True
        queue = deque([start])
        while queue:
            i = queue.popleft()
            for j in np.nonzero(adj[i])[0]:
                if not visited[j]:
                    # arg rho_ij = chi_i - chi_j
                    chi[j] = chi[i] - args[i, j]
                    visited[j] = True
                    queue.append(j)

    rows, cols = np.nonzero(adj)
    if len(rows):
        residuals = np.abs(_wrap_angle(args[rows, cols] - (chi[rows] - chi[cols])))
        max_residual = float(residuals.max())
    else:
        max_residual = 0.0
    if max_residual > phase_tol:
        raise InconsistentPhasesError(max_residual)

    populations = np.real(np.diag(mat))
    populated = np.nonzero(populations > tol)[0]
    anchor = int(populated[0]) if len(populated) else 0
    chi = _wrap_angle(chi - chi[anchor]) + 0.0  # no negative zeros
    chi.setflags(write=False)
    moduli.setflags(write=False)
    return PhasePureDecomposition(moduli, chi)


def gauge_fix(rho: DensityMatrix, decomp: PhasePureDecomposition) -> DensityMatrix:
    """Rotate the state by diag(exp(-i*chi_n)) so all coherences become real.

    The phase distribution is unchanged because the estimation vectors are
    built from the same chi.
    """
    if decomp.dim != rho.dim:
        raise DimensionMismatchError(
            f"decomposition has {decomp.dim} levels, state has {rho.dim}"
        )
    if float(np.max(np.abs(np.abs(rho.matrix) - decomp.moduli))) > 1e-9:
        raise ValueError("decomposition does not belong to this state")
    phase = np.exp(-1j * decomp.chi)
    fixed = rho.matrix * phase[:, None] * phase.conj()[None, :]
    return make_density(rho.spectrum, fixed)


def fock_state(spectrum: Spectrum, n: int) -> DensityMatrix:
    """Point mass on a single shift level, addressed by label."""
    labels = spectrum.labels
    if n < labels[0] or n > labels[-1]:
        raise ValueError(f"label {n} outside spectrum range {labels[0]}..{labels[-1]}")
    mat = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
    mat[n - spectrum.offset, n - spectrum.offset] = 1.0
    return make_density(spectrum, mat)


def uniform_phase_state(spectrum: Spectrum) -> DensityMatrix:
    """Equal-amplitude superposition over all levels; the sharpest-phase fixture."""
    d = spectrum.dim
    return make_density(spectrum, np.full((d, d), 1.0 / d, dtype=complex))


def coherent_state(spectrum: Spectrum, alpha: complex) -> DensityMatrix:
    """Truncated coherent state, amplitudes proportional to alpha^n / sqrt(n!)."""
    if spectrum.kind is not SpectrumKind.NATURALS:
        raise WrongSpectrumKindError(
            "coherent states need the half-infinite ladder (naturals kind)"
        )
    alpha = complex(alpha)
    n = np.arange(spectrum.dim)
    if alpha == 0:
        return fock_state(spectrum, 0)
    log_mag = n * math.log(abs(alpha)) - 0.5 * np.array(
        [math.lgamma(k + 1) for k in range(spectrum.dim)]
    )
    amps = np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))
    return pure_state_density(spectrum, amps)


def thermal_state(spectrum: Spectrum, nbar: float) -> DensityMatrix:
    """Geometric level populations with mean occupation nbar, renormalized."""
    if spectrum.kind is not SpectrumKind.NATURALS:
        raise WrongSpectrumKindError(
            "thermal states need the half-infinite ladder (naturals kind)"
        )
    if nbar < 0:
        raise ValueError("mean occupation must be >= 0")
    if nbar == 0:
        return fock_state(spectrum, 0)
    ratio = nbar / (1.0 + nbar)
    p = ratio ** np.arange(spectrum.dim)
    p = p / p.sum()
    return make_density(spectrum, np.diag(p.astype(complex)))


def standard_state(spectrum: Spectrum, which: str, **params) -> DensityMatrix:
    """Dispatch to the named standard state constructor.

    which: 'fock' (n), 'uniform', 'coherent' (alpha), 'thermal' (nbar).
    """
    if which == "fock":
        return fock_state(spectrum, int(params["n"]))
    if which == "uniform":
        return uniform_phase_state(spectrum)
    if which == "coherent":
        return coherent_state(spectrum, params["alpha"])
    if which == "thermal":
        return thermal_state(spectrum, float(params["nbar"]))
    raise ValueError(f"unknown standard state '{which}'")


def random_phase_pure(spectrum: Spectrum, seed: int, rank: int = 1) -> DensityMatrix:
    """Random mixture of non-negative-amplitude pure states.

    Amplitudes are uniform in [0,1) then normalized, mixed with uniform
    simplex weights, so the result has chi = 0 by construction and is
    exactly symmetric.  Deterministic per seed.
    """
    if rank < 1:
        raise ValueError("mixture rank must be >= 1")
    rng = np.random.default_rng(seed)
    d = spectrum.dim
    weights = rng.dirichlet(np.ones(rank))
    mat = np.zeros((d, d))
    for p in weights:
        psi = rng.uniform(0.0, 1.0, d)
        norm = np.linalg.norm(psi)
        if norm == 0:  # probability zero, but keep the sampler total
            psi = np.ones(d)
            norm = math.sqrt(d)
        psi = psi / norm
        mat = mat + p * np.outer(psi, psi)
    return make_density(spectrum, mat.astype(complex))


def tail_mass(rho: DensityMatrix) -> float:
    """Population sitting on the truncation-edge levels (0 for cyclic)."""
    positions = rho.spectrum.tail_positions()
    if len(positions) == 0:
        return 0.0
    return float(np.real(np.diag(rho.matrix))[positions].sum())


def tail_mass_of(spectrum: Spectrum, populations: np.ndarray) -> float:
    """Tail mass from a raw population vector (used inside integrators)."""
    positions = spectrum.tail_positions()
    if len(positions) == 0:
        return 0.0
    return float(np.real(populations[positions]).sum())
