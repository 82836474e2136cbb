"""Experiment runners with deterministic CSV output.

Every CSV starts with a '#' header block recording tool version, config
digest and seed.  Floats are serialized with 17 significant digits so
double precision round-trips exactly and repeated runs are byte-identical.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentConfig
from .dynamics import (
    Trajectory,
    cost_derivative_analytic,
    cost_derivative_numeric,
    cost_term_numeric,
    integrate,
    random_covariant_generator,
)
from .errors import ConfigError
from .phase_stats import (
    affine_cost,
    modulus_moments,
    phase_deviation_cost,
    phase_distribution,
    reciprocal_peak_likelihood_cost,
)
from .states import (
    Spectrum,
    SpectrumKind,
    is_phase_pure,
    make_density,
    random_phase_pure,
)

MISMATCH_FLOOR = 1e-4  # |a-n|/max(|n|, floor) <= 1e-8 encodes rel 1e-8 / abs 1e-12
DERIVATIVE_TOL = -1e-10
MISMATCH_TOL = 1e-8


def fmt(x: float) -> str:
    """17-significant-digit scientific notation (exact float64 round-trip)."""
    return f"{x:.16e}"


def _header_lines(seed, digest: str | None, extra: dict | None = None) -> list[str]:
    lines = [f"# covphase {__version__}"]
    lines.append(f"# config_sha256 = {digest if digest else 'none'}")
    lines.append(f"# seed = {seed}")
    for key, value in (extra or {}).items():
        lines.append(f"# {key} = {value}")
    return lines


def _write_csv(path: Path, header: list[str], columns: list[str], rows) -> None:
    with open(path, "w", newline="\n") as fh:
        for line in header:
            fh.write(line + "\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _trajectory_rows(traj: Trajectory, costs) -> tuple[list[str], list[list[str]]]:
    kmax = traj.moments.shape[1]
    columns = ["t", "trace_err", "min_eig", "tail_mass", "number_mean", "number_variance"]
    columns += [f"moment_k{k}" for k in range(1, kmax + 1)]
    for name in costs:
        columns.append(f"cost_{name}")
        columns.append(f"delta_phi_{name}")
    rows = []
    for i, t in enumerate(traj.times):
        row = [
            fmt(t),
            fmt(traj.trace_err[i]),
            fmt(traj.min_eig[i]),
            fmt(traj.tail_mass[i]),
            fmt(traj.number_mean[i]),
            fmt(traj.number_variance[i]),
        ]
        row += [fmt(v) for v in traj.moments[i]]
        for name in costs:
            row.append(fmt(traj.costs[name][i]))
            row.append(fmt(traj.delta_phi[name][i]))
        rows.append(row)
    return columns, rows


def _phase_rows(traj: Trajectory, m: int) -> tuple[list[str], list[list[str]]]:
    columns = [f"phi_{j}" for j in range(m)]
    kmax_full = traj.spectrum.dim - 1
    phis = np.arange(m) * (2.0 * np.pi / m)
    kk = np.arange(1, kmax_full + 1)
    cos_table = np.cos(np.outer(phis, kk))
    rows = []
    for state in traj.states:
        mu = modulus_moments(state, kmax_full)
        p = (1.0 + 2.0 * (cos_table @ mu)) / (2.0 * np.pi)
        rows.append([fmt(v) for v in p])
    return columns, rows


def run_simulate(config: ExperimentConfig) -> dict[str, Path]:
    """Integrate the configured run; write trajectory.csv and phase_dist.csv."""
    config.out_dir.mkdir(parents=True, exist_ok=True)
    traj = integrate(
        config.generator,
        config.state,
        config.t_end,
        config.dt,
        direction=config.direction,
        costs=config.costs,
        max_moment=config.max_moment,
        stride=config.stride,
        eps_tail=config.eps_tail,
    )
    header = _header_lines(
        config.seed,
        config.digest,
        {"direction": traj.direction, "dt": fmt(traj.dt), "sym_residue": fmt(traj.sym_residue)},
    )
    out = {}
    columns, rows = _trajectory_rows(traj, config.costs)
    out["trajectory"] = config.out_dir / "trajectory.csv"
    _write_csv(out["trajectory"], header, columns, rows)

    columns, rows = _phase_rows(traj, config.grid_points)
    out["phase_dist"] = config.out_dir / "phase_dist.csv"
    _write_csv(out["phase_dist"], header, columns, rows)

    if config.svg:
        from .svgplot import render_simulation_svg

        out["plot"] = config.out_dir / "plot.svg"
        render_simulation_svg(out["trajectory"], out["phase_dist"], out["plot"])
    return out


def run_phase_dist(config: ExperimentConfig) -> Path:
    """Dump p(phi) of the configured initial state (single row)."""
    config.out_dir.mkdir(parents=True, exist_ok=True)
    decomp = is_phase_pure(config.state)
    p = phase_distribution(config.state, decomp, config.grid_points)
    header = _header_lines(config.seed, config.digest, {"grid_points": config.grid_points})
    path = config.out_dir / "phase_dist.csv"
    _write_csv(path, header, [f"phi_{j}" for j in range(len(p))], [[fmt(v) for v in p]])
    return path


def run_reverse_demo(config: ExperimentConfig) -> dict[str, Path]:
    """Forward-evolve for t_pre, then integrate the sign-flipped equation.

    The report tracks the per-step decrease of each phase uncertainty, the
    recovery error against the forward states at matching times, and the
    first time past t_pre at which positivity breaks (empty if it never
    does within the run).
    """
    if config.t_pre <= 0:
        raise ConfigError("reverse demo needs run.t_pre > 0", field="run.t_pre")
    config.out_dir.mkdir(parents=True, exist_ok=True)
    fwd = integrate(
        config.generator,
        config.state,
        config.t_pre,
        config.dt,
        direction="forward",
        costs=config.costs,
        max_moment=config.max_moment,
        stride=config.stride,
        eps_tail=config.eps_tail,
    )
    turn_state = make_density(config.spectrum, fwd.states[-1])
    rev = integrate(
        config.generator,
        turn_state,
        config.t_pre + config.t_extra,
        config.dt,
        direction="reversed",
        costs=config.costs,
        max_moment=config.max_moment,
        stride=config.stride,
        eps_tail=config.eps_tail,
    )

    fwd_by_time = {round(t / rev.dt): s for t, s in zip(fwd.times, fwd.states)}
    columns = ["t"]
    for name in config.costs:
        columns += [f"delta_phi_{name}", f"decrease_{name}"]
    columns.append("recovery_err")
    rows = []
    for i, t in enumerate(rev.times):
        row = [fmt(t)]
        for name in config.costs:
            dphi = rev.delta_phi[name]
            row.append(fmt(dphi[i]))
            row.append(fmt(dphi[i - 1] - dphi[i] if i > 0 else 0.0))
        back_step = round((config.t_pre - t) / rev.dt)
        match = fwd_by_time.get(back_step)
        if match is not None and t <= config.t_pre + 1e-12:
            row.append(fmt(float(np.max(np.abs(rev.states[i] - match)))))
        else:
            row.append("nan")
        rows.append(row)

    first_neg = rev.first_negative_time
    header = _header_lines(
        config.seed,
        config.digest,
        {
            "t_pre": fmt(config.t_pre),
            "t_extra": fmt(config.t_extra),
            "first_negative_eig_time": fmt(first_neg) if first_neg is not None else "none",
        },
    )
    path = config.out_dir / "reversal_report.csv"
    _write_csv(path, header, columns, rows)

    traj_columns, traj_rows = _trajectory_rows(rev, config.costs)
    traj_path = config.out_dir / "trajectory.csv"
    _write_csv(traj_path, header, traj_columns, traj_rows)
    return {"reversal_report": path, "trajectory": traj_path}


# ---------------------------------------------------------------------------
# randomized verification of the monotonicity statement
# ---------------------------------------------------------------------------


@dataclass
class VerificationReport:
    seed: int
    trials_per_kind: int
    dims: list[int]
    kinds: list[SpectrumKind]
    attempted: int = 0
    passed: int = 0
    worst_total: float = float("inf")
    worst_term: float = float("inf")
    worst_mismatch: float = 0.0
    per_kind: dict = field(default_factory=dict)
    counterexamples: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.passed == self.attempted and not self.counterexamples

    def summary_line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (
            f"verify: {status} {self.passed}/{self.attempted} trials; "
            f"worst total derivative {self.worst_total:.3e}; "
            f"worst per-k term {self.worst_term:.3e}; "
            f"worst oracle mismatch {self.worst_mismatch:.3e}"
        )

    def write_csv(self, path) -> Path:
        path = Path(path)
        header = _header_lines(
            self.seed,
            None,
            {
                "trials_per_kind": self.trials_per_kind,
                "dims": ",".join(str(d) for d in self.dims),
                "kinds": ",".join(k.value for k in self.kinds),
                "status": "pass" if self.ok else "fail",
            },
        )
        columns = ["kind", "attempted", "passed", "worst_total", "worst_term", "worst_mismatch"]
        rows = []
        for kind in self.kinds:
            agg = self.per_kind[kind.value]
            rows.append(
                [
                    kind.value,
                    str(agg["attempted"]),
                    str(agg["passed"]),
                    fmt(agg["worst_total"]),
                    fmt(agg["worst_term"]),
                    fmt(agg["worst_mismatch"]),
                ]
            )
        rows.append(
            [
                "overall",
                str(self.attempted),
                str(self.passed),
                fmt(self.worst_total),
                fmt(self.worst_term),
                fmt(self.worst_mismatch),
            ]
        )
        trailer = [f"# counterexample {json.dumps(ce, sort_keys=True)}" for ce in self.counterexamples]
        with open(path, "w", newline="\n") as fh:
            for line in header:
                fh.write(line + "\n")
            fh.write(",".join(columns) + "\n")
            for row in rows:
                fh.write(",".join(row) + "\n")
            for line in trailer:
                fh.write(line + "\n")
        return path


def _complex_listed(arr) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(arr).ravel()]


def _random_cost(rng, dim):
    pick = rng.integers(0, 3)
    if pick == 0:
        return phase_deviation_cost()
    if pick == 1:
        return reciprocal_peak_likelihood_cost(dim - 1)
    order = int(rng.integers(1, dim))
    return affine_cost(
        rng.uniform(0.0, 1.0, order),
        c0=float(rng.uniform(-1.0, 1.0)),
        b=float(rng.uniform(0.5, 2.0)),
    )


def _verify_trial(kind, dims, trial_seed, inject_sign_flip):
    """One (state, generator, cost) triple; returns measured stats + failures."""
    rng = np.random.default_rng(trial_seed)
    if kind is SpectrumKind.INTEGERS:
        candidates = [d for d in dims if d % 2 == 1 and d >= 3]
    else:
        candidates = list(dims)
    d = int(candidates[rng.integers(0, len(candidates))])
    spectrum = Spectrum.of_kind(kind, d)
    rank = int(rng.integers(1, 5))
    rho = random_phase_pure(spectrum, int(rng.integers(0, 2**63)), rank)
    if rng.integers(0, 2):  # exercise nonzero-phase decompositions too
        phase = np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, d))
        rho = make_density(spectrum, rho.matrix * phase[:, None] * phase.conj()[None, :])
    decomp = is_phase_pure(rho)
    gen = random_covariant_generator(
        spectrum,
        int(rng.integers(0, 2**63)),
        max_shift=min(3, d - 1),
        terms_per_shift=2,
    )
    cost = _random_cost(rng, d)

    deriv = cost_derivative_analytic(gen, rho, decomp, cost)
    total_num = cost_derivative_numeric(gen, rho, cost, decomp)
    sign = -1.0 if inject_sign_flip else 1.0
    total = sign * deriv.total
    per_k = {k: sign * v for k, v in deriv.per_k.items()}

    failures = []
    min_term = min(per_k.values()) if per_k else 0.0
    if total < DERIVATIVE_TOL:
        failures.append(f"total derivative {total:.3e} below {DERIVATIVE_TOL:.0e}")
    for k, v in per_k.items():
        if v < DERIVATIVE_TOL:
            failures.append(f"term k={k} value {v:.3e} below {DERIVATIVE_TOL:.0e}")
    mismatch = abs(total - total_num) / max(abs(total_num), MISMATCH_FLOOR)
    for k in per_k:
        num_k = cost_term_numeric(gen, rho, decomp, k)
        mismatch = max(
            mismatch, abs(per_k[k] - num_k) / max(abs(num_k), MISMATCH_FLOOR)
        )
    if mismatch > MISMATCH_TOL:
        failures.append(f"oracle mismatch {mismatch:.3e} above {MISMATCH_TOL:.0e}")

    dump = None
    if failures:
        dump = {
            "kind": kind.value,
            "dim": d,
            "trial_seed": int(trial_seed),
            "rank": rank,
            "cost": {
                "kind": cost.kind,
                "c0": cost.c0,
                "coeffs": list(map(float, cost.coeffs)),
                "a": cost.a,
                "b": cost.b,
            },
            "state": _complex_listed(rho.matrix),
            "generator": [
                {"shift": t.shift, "weight": _complex_listed(t.weight)}
                for t in gen.terms
            ],
            "total_analytic": total,
            "total_numeric": total_num,
            "per_k": {str(k): v for k, v in per_k.items()},
            "failures": failures,
        }
    return total, min_term, mismatch, failures, dump


def run_verify(
    trials: int = 1000,
    dims=tuple(range(2, 17)),
    kinds=(SpectrumKind.NATURALS, SpectrumKind.INTEGERS, SpectrumKind.CYCLIC),
    seed: int = 0,
    inject_sign_flip: bool = False,
) -> VerificationReport:
    """Fuzz the non-negativity of the cost derivative and its oracle match.

    Per spectrum kind, ``trials`` random (phase-pure state, covariant
    generator, cost) triples are drawn with per-trial seeds seed XOR index.
    ``inject_sign_flip`` flips the analytic values so the harness can prove
    it detects violations (self-test hook, never used in real runs).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    kinds = [k if isinstance(k, SpectrumKind) else SpectrumKind(k) for k in kinds]
    report = VerificationReport(
        seed=seed, trials_per_kind=trials, dims=list(dims), kinds=list(kinds)
    )
    index = 0
    for kind in kinds:
        agg = {
            "attempted": 0,
            "passed": 0,
            "worst_total": float("inf"),
            "worst_term": float("inf"),
            "worst_mismatch": 0.0,
        }
        for _ in range(trials):
            trial_seed = seed ^ index
            index += 1
            total, min_term, mismatch, failures, dump = _verify_trial(
                kind, dims, trial_seed, inject_sign_flip
            )
            agg["attempted"] += 1
            report.attempted += 1
            agg["worst_total"] = min(agg["worst_total"], total)
            agg["worst_term"] = min(agg["worst_term"], min_term)
            agg["worst_mismatch"] = max(agg["worst_mismatch"], mismatch)
            if failures:
                report.counterexamples.append(dump)
            else:
                agg["passed"] += 1
                report.passed += 1
        report.per_kind[kind.value] = agg
        report.worst_total = min(report.worst_total, agg["worst_total"])
        report.worst_term = min(report.worst_term, agg["worst_term"])
        report.worst_mismatch = max(report.worst_mismatch, agg["worst_mismatch"])
    return report
