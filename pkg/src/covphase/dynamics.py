"""Phase-covariant Lindblad generators and their phase-uncertainty flow.

Every generator is a sum of dissipators L[B] rho = B rho B^dag
- (B^dag B rho + rho B^dag B)/2 whose operators live in a single shift
sector: B = diag(w) e_+^m for m >= 0 (m = 0 is pure dephasing) or
B = diag(w) e_-^|m| for m < 0, with w an arbitrary complex weight per
level.  Operators of this form commute with phase rotations, so the
generated semigroup is phase-covariant regardless of the weights.

The central quantity is, per cost order k,

    T_k = -2 Re d<e_+^k>/dt,

which decomposes into sums of |rho_{l,l+k}| times squared weight
differences plus non-negative edge corrections at the truncation
boundary, so T_k >= 0 term by term: phase uncertainty cannot decrease
under forward evolution.  The sums here are exact for the finite ladder
(edge corrections included), which the trace oracle in
``cost_derivative_numeric`` verifies to round-off.

Weights are stored relative to the bare 0/1 shift.  For a state whose
phases chi are not zero the same operator has level-dependent rephased
weights relative to that state's dressed shift e_+(chi); the analytic
sums apply the rephasing so they hold for every phase-pure state, not
just gauge-fixed ones.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatchError,
    KTooLargeError,
    NegativeWeightError,
    NotCovariantFormError,
    StepUnstableError,
    TailOverflowError,
    WrongSpectrumKindError,
)
from .phase_stats import (
    CostFunction,
    cost_operator,
    delta_phi_from_moments,
    mean_cost_from_moments,
    modulus_moments,
    shift_power,
)
from .states import (
    DensityMatrix,
    PhasePureDecomposition,
    Spectrum,
    SpectrumKind,
    is_phase_pure,
    tail_mass_of,
)

ENTRY_CAP = 1e6  # integrator blow-up guard
DEFAULT_EPS_TAIL = 1e-8
NEG_EIG_REPORT = -1e-8


@dataclass(frozen=True)
class GeneratorTerm:
    """One shift sector: shift m and a complex weight per level (by position)."""

    shift: int
    weight: np.ndarray


@dataclass(frozen=True)
class CovariantGenerator:
    spectrum: Spectrum
    terms: tuple[GeneratorTerm, ...]

    @property
    def dim(self) -> int:
        return self.spectrum.dim

    def operators(self) -> list[np.ndarray]:
        return [_term_matrix(t, self.dim) for t in self.terms]


def covariant_generator(spectrum: Spectrum, terms) -> CovariantGenerator:
    """Build and validate a generator from (shift, weight) pairs."""
    d = spectrum.dim
    packed = []
    for shift, weight in terms:
        shift = int(shift)
        w = np.asarray(weight, dtype=complex).copy()
        if abs(shift) > d - 1:
            raise NotCovariantFormError(
                f"|shift| = {abs(shift)} exceeds d-1 = {d - 1}"
            )
        if w.shape != (d,):
            raise NotCovariantFormError(
                f"weight must hold {d} values, got shape {w.shape}"
            )
        w.setflags(write=False)
        packed.append(GeneratorTerm(shift, w))
    return CovariantGenerator(spectrum, tuple(packed))


def _term_matrix(term: GeneratorTerm, d: int) -> np.ndarray:
    m = term.shift
    w = term.weight
    if m >= 0:
        return np.diag(w[m:], -m)  # entry w[i+m] at (i+m, i)
    mm = -m
    return np.diag(w[: d - mm], mm)  # entry w[i] at (i, i+mm)


def _prepare(gen: CovariantGenerator) -> list[tuple[np.ndarray, np.ndarray]]:
    """Precompute (B, diag(B^dag B)) per term for fast repeated application."""
    d = gen.dim
    out = []
    for term in gen.terms:
        b = _term_matrix(term, d)
        q = np.sum(np.abs(b) ** 2, axis=0)
        out.append((b, q))
    return out


def _rhs_from_ops(ops, mat: np.ndarray) -> np.ndarray:
    """sum_i L[B_i] mat for explicit operator matrices (no structure assumed)."""
    out = np.zeros_like(mat)
    for b in ops:
        bdag = b.conj().T
        q = bdag @ b
        out += b @ mat @ bdag - 0.5 * (q @ mat + mat @ q)
    return out


def _rhs(prepared, mat: np.ndarray) -> np.ndarray:
    out = np.zeros_like(mat)
    for b, q in prepared:
        out += b @ mat @ b.conj().T
        out -= 0.5 * (q[:, None] * mat + mat * q[None, :])
    return out


def lindblad_apply(gen: CovariantGenerator, rho: DensityMatrix) -> np.ndarray:
    """d rho / dt at this state: sum over terms of L[B] rho."""
    if gen.dim != rho.dim:
        raise DimensionMismatchError(
            f"generator acts on {gen.dim} levels, state has {rho.dim}"
        )
    return _rhs(_prepare(gen), rho.matrix)


def check_covariance(gen_or_ops, rho: DensityMatrix, theta: float) -> float:
    """Max residual of L(U rho U^dag) - U L(rho) U^dag, U = exp(i F theta).

    Accepts a CovariantGenerator or an explicit list of Lindblad operator
    matrices (for counterexamples that mix shift sectors).
    """
    if isinstance(gen_or_ops, CovariantGenerator):
        ops = gen_or_ops.operators()
        labels = gen_or_ops.spectrum.labels
    else:
        ops = [np.asarray(b, dtype=complex) for b in gen_or_ops]
        labels = rho.spectrum.labels
    u = np.exp(1j * labels * theta)
    mat = rho.matrix
    rotated = mat * u[:, None] * u.conj()[None, :]
    left = _rhs_from_ops(ops, rotated)
    right = _rhs_from_ops(ops, mat) * u[:, None] * u.conj()[None, :]
    return float(np.max(np.abs(left - right)))


# ---------------------------------------------------------------------------
# cost derivatives
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CostDerivative:
    """d<C>/dt split per cost order: total = sum_k c_k * per_k[k]."""

    total: float
    per_k: dict[int, float]


def _dressed_raising(weight, chi, m):
    """Weights of the same operator relative to the chi-dressed shift."""
    if m == 0:
        return weight.copy()
    g = np.zeros(len(weight), dtype=complex)
    g[m:] = weight[m:] * np.exp(-1j * (chi[m:] - chi[:-m]))
    return g


def _dressed_lowering(weight, chi, mm):
    h = np.zeros(len(weight), dtype=complex)
    h[: len(weight) - mm] = weight[: len(weight) - mm] * np.exp(
        1j * (chi[mm:] - chi[:-mm])
    )
    return h


def _term_sum(term: GeneratorTerm, rk: np.ndarray, chi: np.ndarray, k: int) -> float:
    """Contribution of one generator term to T_k = -2 Re d<e_+^k>/dt.

    rk[l] = |rho_{l,l+k}|.  Bulk entries pick up squared differences of
    dressed weights; entries whose image or preimage leaves the ladder
    keep only the surviving weight (raising at the top, lowering at the
    bottom), which is what makes the sums exact on the finite window.
    """
    d = len(chi)
    m = term.shift
    total = 0.0
    if m >= 0:
        g = _dressed_raising(term.weight, chi, m)
        bulk = d - m - k  # l = 0 .. d-1-m-k
        if bulk > 0:
            diff = g[m : m + bulk] - g[m + k : m + k + bulk]
            total += float(np.dot(rk[:bulk], np.abs(diff) ** 2))
        lo = max(0, d - m - k)
        hi = min(d - 1 - m, d - 1 - k)
        if hi >= lo:
            idx = np.arange(lo, hi + 1)
            total += float(np.dot(rk[idx], np.abs(g[idx + m]) ** 2))
    else:
        mm = -m
        h = _dressed_lowering(term.weight, chi, mm)
        start = mm  # l = mm .. d-1-k
        if d - k - mm > 0:
            diff = h[: d - k - mm] - h[k : d - mm]
            total += float(np.dot(rk[start : d - k], np.abs(diff) ** 2))
        lo = max(0, mm - k)
        hi = min(mm - 1, d - 1 - k)
        if hi >= lo:
            idx = np.arange(lo, hi + 1)
            total += float(np.dot(rk[idx], np.abs(h[idx + k - mm]) ** 2))
    return total


def cost_derivative_analytic(
    gen: CovariantGenerator,
    rho: DensityMatrix,
    decomp: PhasePureDecomposition,
    cost: CostFunction,
) -> CostDerivative:
    """d<C>/dt from the explicit non-negative sums, split per cost order.

    Every per-k value is a sum of non-negative pieces, so both the
    breakdown and the total are >= 0 up to round-off; equality with the
    trace oracle is exact for the finite ladder.
    """
    d = gen.dim
    if gen.dim != rho.dim or decomp.dim != rho.dim:
        raise DimensionMismatchError("generator, state and decomposition disagree")
    if cost.order > d - 1:
        raise KTooLargeError(
            f"cost has {cost.order} coefficients, at most d-1 = {d - 1} act"
        )
    for term in gen.terms:
        if abs(term.shift) > d - 1 or term.weight.shape != (d,):
            raise NotCovariantFormError("generator term violates the sector form")
    chi = decomp.chi
    per_k: dict[int, float] = {}
    total = 0.0
    for k, ck in enumerate(cost.coeffs, start=1):
        if ck == 0.0:
            continue
        rk = decomp.moduli.diagonal(k)
        tk = 0.0
        for term in gen.terms:
            tk += _term_sum(term, rk, chi, k)
        per_k[k] = tk
        total += float(ck) * tk
    return CostDerivative(total, per_k)


def cost_term_numeric(
    gen: CovariantGenerator,
    rho: DensityMatrix,
    decomp: PhasePureDecomposition,
    k: int,
) -> float:
    """Oracle for one cost order: -2 Re Tr[(sum L[B] rho) e_+^k]."""
    drho = lindblad_apply(gen, rho)
    p = shift_power(decomp.chi, k)
    return -2.0 * float(np.real(np.trace(drho @ p)))


def cost_derivative_numeric(
    gen: CovariantGenerator,
    rho: DensityMatrix,
    cost: CostFunction,
    decomp: PhasePureDecomposition | None = None,
) -> float:
    """Oracle for the total: Tr[C * (sum L[B] rho)] with C built explicitly."""
    if decomp is None:
        decomp = is_phase_pure(rho)
    c = cost_operator(cost, decomp.chi, rho.dim)
    drho = lindblad_apply(gen, rho)
    return float(np.real(np.trace(c @ drho)))


# ---------------------------------------------------------------------------
# special generators
# ---------------------------------------------------------------------------


def build_preserving_generator(
    spectrum: Spectrum, u, v=None
) -> CovariantGenerator:
    """Constant-weight generator that leaves every phase moment flat.

    Raising rates u_m (m = 1..len(u)) give terms sqrt(u_m) e_+^m; lowering
    rates v_m (two-sided ladder only) give sqrt(v_m) e_-^m.  With constant
    weights all squared differences vanish, so phase moments are conserved
    exactly away from the truncation edge (up to tail mass) while the
    level distribution keeps spreading: decoherence without dephasing.
    On the finite window the dissipators keep their honest Lindblad form,
    so conservation is exact only while the state stays clear of the edge.
    """
    if spectrum.kind is SpectrumKind.CYCLIC:
        raise WrongSpectrumKindError(
            "moment-preserving generators need an unbounded ladder"
        )
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise NegativeWeightError(f"raising rates must be >= 0, got {u}")
    if v is not None:
        if spectrum.kind is not SpectrumKind.INTEGERS:
            raise WrongSpectrumKindError(
                "lowering rates need the two-sided ladder (integers kind)"
            )
        v = np.asarray(v, dtype=float)
        if np.any(v < 0):
            raise NegativeWeightError(f"lowering rates must be >= 0, got {v}")
    d = spectrum.dim
    terms = []
    for m, um in enumerate(u, start=1):
        if um == 0.0:
            continue
        if m > d - 1:
            raise NotCovariantFormError(f"shift {m} exceeds d-1 = {d - 1}")
        terms.append((m, np.full(d, math.sqrt(um), dtype=complex)))
    if v is not None:
        for m, vm in enumerate(v, start=1):
            if vm == 0.0:
                continue
            if m > d - 1:
                raise NotCovariantFormError(f"shift {m} exceeds d-1 = {d - 1}")
            terms.append((-m, np.full(d, math.sqrt(vm), dtype=complex)))
    return covariant_generator(spectrum, terms)


@dataclass(frozen=True)
class PurityCheck:
    preserving: bool
    max_spread: float


def check_phase_purity_preservation(gen: CovariantGenerator) -> PurityCheck:
    """Whether each weight has a constant argument over its active levels.

    A common phase per term factors out of the dissipator, so the verdict
    is 'preserving' iff every active weight argument is constant to
    1e-10; weights below 1e-12 in magnitude impose no constraint.  The
    check is relative to gauge-fixed states (all coherences real).
    """
    worst = 0.0
    d = gen.dim
    for term in gen.terms:
        if term.shift >= 0:
            active = term.weight[term.shift :]
        else:
            active = term.weight[: d + term.shift]
        active = active[np.abs(active) > 1e-12]
        if len(active) < 2:
            continue
        args = np.angle(active)
        diff = np.abs(_wrap(args[:, None] - args[None, :]))
        worst = max(worst, float(diff.max()))
    return PurityCheck(worst <= 1e-10, worst)


def _wrap(x):
    return -((-x + math.pi) % (2.0 * math.pi) - math.pi)


def random_covariant_generator(
    spectrum: Spectrum,
    seed: int,
    max_shift: int = 3,
    terms_per_shift: int = 2,
    preserving: bool = False,
) -> CovariantGenerator:
    """Seeded random generator over all shifts in [-max_shift, max_shift].

    Weight magnitudes are uniform in [0,1); phases uniform in [0,2pi)
    unless ``preserving`` restricts to real non-negative weights (the
    phase-purity-preserving subclass used for trajectory-level tests).
    """
    d = spectrum.dim
    if max_shift > d - 1:
        raise NotCovariantFormError(f"max_shift {max_shift} exceeds d-1 = {d - 1}")
    rng = np.random.default_rng(seed)
    terms = []
    for shift in range(-max_shift, max_shift + 1):
        for _ in range(terms_per_shift):
            mag = rng.uniform(0.0, 1.0, d)
            if preserving:
                w = mag.astype(complex)
            else:
                w = mag * np.exp(2j * math.pi * rng.uniform(0.0, 1.0, d))
            terms.append((shift, w))
    return covariant_generator(spectrum, terms)


# ---------------------------------------------------------------------------
# time evolution
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Sampled states plus per-sample diagnostics of a fixed-step run."""

    spectrum: Spectrum
    direction: str
    dt: float
    times: np.ndarray
    states: list
    trace_err: np.ndarray
    min_eig: np.ndarray
    tail_mass: np.ndarray
    number_mean: np.ndarray
    number_variance: np.ndarray
    moments: np.ndarray  # (samples, kmax), entry [i, k-1] = <e_+^k>(t_i)
    costs: dict
    delta_phi: dict
    sym_residue: float
    first_negative_time: float | None


def integrate(
    gen: CovariantGenerator,
    rho0: DensityMatrix,
    t_end: float,
    dt: float,
    direction: str = "forward",
    costs: dict[str, CostFunction] | None = None,
    max_moment: int | None = None,
    stride: int = 1,
    eps_tail: float = DEFAULT_EPS_TAIL,
) -> Trajectory:
    """Classical fixed-step RK4 on d rho/dt = +/- sum L[B] rho.

    The Hermitian part is enforced by symmetrization each step (residue
    logged); the trace is never renormalized, so trace drift is an honest
    diagnostic.  Raises StepUnstableError past the entry cap and
    TailOverflowError when edge population exceeds ``eps_tail`` on a
    truncated ladder.  Records the first sample time at which the minimum
    eigenvalue drops below -1e-8 (relevant for reversed runs).
    """
    if dt <= 0 or t_end <= 0:
        raise ValueError("need dt > 0 and t_end > 0")
    if direction not in ("forward", "reversed"):
        raise ValueError(f"unknown direction '{direction}'")
    if gen.dim != rho0.dim:
        raise DimensionMismatchError(
            f"generator acts on {gen.dim} levels, state has {rho0.dim}"
        )
    if stride < 1:
        raise ValueError("stride must be >= 1")
    costs = costs or {}
    d = rho0.dim
    kmax = max_moment if max_moment is not None else min(d - 1, 8)
    for cost in costs.values():
        kmax = max(kmax, cost.order)
    kmax = max(1, min(kmax, d - 1))

    n_steps = max(1, round(t_end / dt))
    h = t_end / n_steps
    sign = 1.0 if direction == "forward" else -1.0
    prepared = _prepare(gen)
    spectrum = gen.spectrum
    labels = spectrum.labels.astype(float)

    times = []
    states = []
    trace_err = []
    min_eig = []
    tails = []
    nmean = []
    nvar = []
    moments = []
    cost_rows = {name: [] for name in costs}
    dphi_rows = {name: [] for name in costs}
    sym_residue = 0.0
    first_negative = None

    mat = rho0.matrix.astype(complex).copy()

    def record(t, m):
        nonlocal first_negative
        times.append(t)
        states.append(m.copy())
        pops = np.real(np.diag(m))
        trace_err.append(abs(pops.sum() - 1.0))
        eig = float(np.linalg.eigvalsh(m)[0])
        min_eig.append(eig)
        if eig < NEG_EIG_REPORT and first_negative is None:
            first_negative = t
        tails.append(tail_mass_of(spectrum, pops))
        mean = float(np.dot(labels, pops))
        nmean.append(mean)
        nvar.append(float(np.dot(labels * labels, pops)) - mean * mean)
        mu = modulus_moments(m, kmax)
        moments.append(mu)
        for name, cost in costs.items():
            cost_rows[name].append(mean_cost_from_moments(cost, mu))
            dphi_rows[name].append(delta_phi_from_moments(cost, mu))

    record(0.0, mat)
    for step in range(1, n_steps + 1):
        k1 = sign * _rhs(prepared, mat)
        k2 = sign * _rhs(prepared, mat + 0.5 * h * k1)
        k3 = sign * _rhs(prepared, mat + 0.5 * h * k2)
        k4 = sign * _rhs(prepared, mat + h * k3)
        mat = mat + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        sym = 0.5 * (mat + mat.conj().T)
        sym_residue = max(sym_residue, float(np.max(np.abs(mat - sym))))
        mat = sym
        t = step * h
        peak = float(np.max(np.abs(mat)))
        if peak > ENTRY_CAP:
            raise StepUnstableError(t, peak)
        if spectrum.truncated:
            tm = tail_mass_of(spectrum, np.real(np.diag(mat)))
            if tm > eps_tail:
                raise TailOverflowError(t, tm, eps_tail)
        if step % stride == 0 or step == n_steps:
            record(t, mat)

    return Trajectory(
        spectrum=spectrum,
        direction=direction,
        dt=h,
        times=np.array(times),
        states=states,
        trace_err=np.array(trace_err),
        min_eig=np.array(min_eig),
        tail_mass=np.array(tails),
        number_mean=np.array(nmean),
        number_variance=np.array(nvar),
        moments=np.array(moments),
        costs={k: np.array(vals) for k, vals in cost_rows.items()},
        delta_phi={k: np.array(vals) for k, vals in dphi_rows.items()},
        sym_residue=sym_residue,
        first_negative_time=first_negative,
    )


def step_halving_error(
    gen: CovariantGenerator,
    rho0: DensityMatrix,
    t_end: float,
    dt: float,
    direction: str = "forward",
) -> float:
    """Convergence probe: entrywise change of the final state when dt halves."""
    a = integrate(gen, rho0, t_end, dt, direction, stride=10**9)
    b = integrate(gen, rho0, t_end, dt / 2.0, direction, stride=10**9)
    return float(np.max(np.abs(a.states[-1] - b.states[-1])))
