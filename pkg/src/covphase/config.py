"""Flat key-value experiment configs.

One `key = value` pair per line, '#' comments, dotted section keys one
level deep (spectrum.dim, state.which, generator.kind, run.dt, ...).
Weight specs for explicit generators are ';'-separated, one per shift:
'linear' (the level labels), 'const:<c>', or a comma list of complex
values.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .dynamics import (
    CovariantGenerator,
    build_preserving_generator,
    covariant_generator,
    random_covariant_generator,
)
from .errors import ConfigError, CovphaseError
from .phase_stats import (
    CostFunction,
    affine_cost,
    phase_deviation_cost,
    reciprocal_peak_likelihood_cost,
)
from .states import (
    DensityMatrix,
    Spectrum,
    SpectrumKind,
    random_phase_pure,
    standard_state,
)

_KIND_ALIASES = {
    "nat": SpectrumKind.NATURALS,
    "naturals": SpectrumKind.NATURALS,
    "int": SpectrumKind.INTEGERS,
    "integers": SpectrumKind.INTEGERS,
    "cyclic": SpectrumKind.CYCLIC,
}

_KNOWN_KEYS = {
    "spectrum.kind",
    "spectrum.dim",
    "state.which",
    "state.n",
    "state.alpha",
    "state.nbar",
    "state.rank",
    "state.seed",
    "generator.kind",
    "generator.shifts",
    "generator.weights",
    "generator.u",
    "generator.v",
    "generator.seed",
    "generator.max_shift",
    "generator.terms_per_shift",
    "generator.preserving",
    "costs",
    "run.seed",
    "run.t_end",
    "run.dt",
    "run.stride",
    "run.direction",
    "run.t_pre",
    "run.t_extra",
    "run.eps_tail",
    "run.max_moment",
    "grid.points",
    "output.dir",
    "output.svg",
}


def parse_kind(token: str) -> SpectrumKind:
    try:
        return _KIND_ALIASES[token.strip().lower()]
    except KeyError:
        raise ConfigError(f"unknown spectrum kind '{token}'", field="spectrum.kind")


def _parse_pairs(text: str) -> dict[str, tuple[str, int]]:
    pairs: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not key:
            raise ConfigError("empty key", line=lineno)
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"unknown key '{key}'", line=lineno, field=key)
        if key in pairs:
            raise ConfigError(f"duplicate key '{key}'", line=lineno, field=key)
        pairs[key] = (value, lineno)
    return pairs


class _Reader:
    def __init__(self, pairs):
        self.pairs = pairs

    def has(self, key):
        return key in self.pairs

    def raw(self, key, default=None, required=False):
        if key not in self.pairs:
            if required:
                raise ConfigError(f"missing required key '{key}'", field=key)
            return default
        return self.pairs[key][0]

    def _typed(self, key, conv, typename, default=None, required=False):
        raw = self.raw(key, None, required)
        if raw is None:
            return default
        try:
            return conv(raw)
        except (ValueError, TypeError):
            raise ConfigError(
                f"cannot parse '{raw}' as {typename}",
                line=self.pairs[key][1],
                field=key,
            )

    def get_int(self, key, default=None, required=False):
        return self._typed(key, int, "integer", default, required)

    def get_float(self, key, default=None, required=False):
        return self._typed(key, float, "number", default, required)

    def get_bool(self, key, default=False):
        raw = self.raw(key)
        if raw is None:
            return default
        token = raw.lower()
        if token in ("true", "yes", "1"):
            return True
        if token in ("false", "no", "0"):
            return False
        raise ConfigError(
            f"cannot parse '{raw}' as boolean", line=self.pairs[key][1], field=key
        )

    def get_floats(self, key, default=None):
        raw = self.raw(key)
        if raw is None:
            return default
        try:
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(
                f"cannot parse '{raw}' as a number list",
                line=self.pairs[key][1],
                field=key,
            )


def _parse_weight_spec(spec: str, spectrum: Spectrum, key: str) -> np.ndarray:
    spec = spec.strip()
    d = spectrum.dim
    if spec == "linear":
        return spectrum.labels.astype(complex)
    if spec.startswith("const:"):
        try:
            return np.full(d, complex(spec[len("const:") :]), dtype=complex)
        except ValueError:
            raise ConfigError(f"bad constant weight '{spec}'", field=key)
    try:
        values = [complex(tok) for tok in spec.split(",") if tok.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse weight spec '{spec}'", field=key)
    if len(values) != d:
        raise ConfigError(
            f"weight list has {len(values)} entries, spectrum needs {d}", field=key
        )
    return np.array(values, dtype=complex)


def _parse_cost_token(token: str, dim: int) -> CostFunction:
    token = token.strip()
    if token == "phase_deviation":
        return phase_deviation_cost()
    if token in ("rpl", "reciprocal_peak_likelihood"):
        return reciprocal_peak_likelihood_cost(dim - 1)
    if token.startswith("affine:"):
        parts = token.split(":")
        if len(parts) != 4:
            raise ConfigError(
                f"affine cost needs 'affine:<a>:<b>:<K>', got '{token}'", field="costs"
            )
        try:
            a, b, kk = float(parts[1]), float(parts[2]), int(parts[3])
        except ValueError:
            raise ConfigError(f"bad affine cost '{token}'", field="costs")
        if kk < 1 or kk > dim - 1:
            raise ConfigError(
                f"affine cost order {kk} out of range 1..{dim - 1}", field="costs"
            )
        return affine_cost(np.ones(kk), a=a, b=b, name=f"affine_{kk}")
    raise ConfigError(f"unknown cost '{token}'", field="costs")


@dataclass
class ExperimentConfig:
    """Everything needed to run one experiment, plus raw text for digests."""

    spectrum: Spectrum
    state: DensityMatrix
    generator: CovariantGenerator
    costs: dict[str, CostFunction]
    seed: int
    t_end: float
    dt: float
    stride: int
    direction: str
    t_pre: float
    t_extra: float
    eps_tail: float
    max_moment: int | None
    grid_points: int
    out_dir: Path
    svg: bool
    raw_text: str

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.raw_text.encode()).hexdigest()

    @classmethod
    def from_path(cls, path) -> "ExperimentConfig":
        path = Path(path)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}")
        return cls.from_text(text)

    @classmethod
    def from_text(cls, text: str) -> "ExperimentConfig":
        reader = _Reader(_parse_pairs(text))
        kind = parse_kind(reader.raw("spectrum.kind", required=True))
        dim = reader.get_int("spectrum.dim", required=True)
        try:
            spectrum = Spectrum.of_kind(kind, dim)
        except ValueError as exc:
            raise ConfigError(str(exc), field="spectrum.dim")

        seed = reader.get_int("run.seed", default=0)
        state = _build_state(reader, spectrum, seed)
        generator = _build_generator(reader, spectrum, seed)

        cost_raw = reader.raw("costs", default="phase_deviation")
        costs: dict[str, CostFunction] = {}
        for token in cost_raw.split(","):
            if not token.strip():
                continue
            try:
                cost = _parse_cost_token(token, spectrum.dim)
            except ValueError as exc:
                raise ConfigError(str(exc), field="costs")
            if cost.name in costs:
                raise ConfigError(f"duplicate cost '{cost.name}'", field="costs")
            costs[cost.name] = cost
        if not costs:
            raise ConfigError("no costs configured", field="costs")

        dt = reader.get_float("run.dt", required=True)
        if dt <= 0:
            raise ConfigError("run.dt must be > 0", field="run.dt")
        t_end = reader.get_float("run.t_end", default=0.0)
        t_pre = reader.get_float("run.t_pre", default=0.0)
        if t_end <= 0 and t_pre <= 0:
            raise ConfigError("need run.t_end > 0 or run.t_pre > 0", field="run.t_end")
        stride = reader.get_int("run.stride", default=1)
        if stride < 1:
            raise ConfigError("run.stride must be >= 1", field="run.stride")
        direction = reader.raw("run.direction", default="forward")
        if direction not in ("forward", "reversed"):
            raise ConfigError(
                f"unknown direction '{direction}'", field="run.direction"
            )

        grid_points = reader.get_int("grid.points", default=8 * spectrum.dim)
        if grid_points < 2 * spectrum.dim:
            raise ConfigError(
                f"grid.points must be >= {2 * spectrum.dim}", field="grid.points"
            )

        return cls(
            spectrum=spectrum,
            state=state,
            generator=generator,
            costs=costs,
            seed=seed,
            t_end=t_end,
            dt=dt,
            stride=stride,
            direction=direction,
            t_pre=t_pre,
            t_extra=reader.get_float("run.t_extra", default=0.0),
            eps_tail=reader.get_float("run.eps_tail", default=1e-8),
            max_moment=reader.get_int("run.max_moment", default=None),
            grid_points=grid_points,
            out_dir=Path(reader.raw("output.dir", default=".")),
            svg=reader.get_bool("output.svg", default=False),
            raw_text=text,
        )


def _build_state(reader: _Reader, spectrum: Spectrum, seed: int) -> DensityMatrix:
    which = reader.raw("state.which", required=True)
    try:
        if which == "random":
            rank = reader.get_int("state.rank", default=1)
            state_seed = reader.get_int("state.seed", default=seed)
            return random_phase_pure(spectrum, state_seed, rank)
        params = {}
        if reader.has("state.n"):
            params["n"] = reader.get_int("state.n")
        if reader.has("state.alpha"):
            raw = reader.raw("state.alpha")
            try:
                params["alpha"] = complex(raw)
            except ValueError:
                raise ConfigError(
                    f"cannot parse '{raw}' as complex", field="state.alpha"
                )
        if reader.has("state.nbar"):
            params["nbar"] = reader.get_float("state.nbar")
        return standard_state(spectrum, which, **params)
    except ConfigError:
        raise
    except (CovphaseError, ValueError, KeyError) as exc:
        raise ConfigError(f"cannot build state: {exc}", field="state.which")


def _build_generator(
    reader: _Reader, spectrum: Spectrum, seed: int
) -> CovariantGenerator:
    kind = reader.raw("generator.kind", required=True)
    try:
        if kind == "explicit":
            shift_list = reader.raw("generator.shifts", required=True)
            weight_list = reader.raw("generator.weights", required=True)
            shifts = [int(tok) for tok in shift_list.split(",") if tok.strip()]
            specs = [s for s in weight_list.split(";") if s.strip()]
            if len(shifts) != len(specs):
                raise ConfigError(
                    f"{len(shifts)} shifts but {len(specs)} weight specs",
                    field="generator.weights",
                )
            terms = [
                (shift, _parse_weight_spec(spec, spectrum, "generator.weights"))
                for shift, spec in zip(shifts, specs)
            ]
            return covariant_generator(spectrum, terms)
        if kind == "preserving":
            u = reader.get_floats("generator.u")
            if u is None:
                raise ConfigError(
                    "preserving generator needs generator.u", field="generator.u"
                )
            v = reader.get_floats("generator.v")
            return build_preserving_generator(spectrum, u, v)
        if kind == "random":
            return random_covariant_generator(
                spectrum,
                reader.get_int("generator.seed", default=seed),
                max_shift=reader.get_int(
                    "generator.max_shift", default=min(3, spectrum.dim - 1)
                ),
                terms_per_shift=reader.get_int("generator.terms_per_shift", default=2),
                preserving=reader.get_bool("generator.preserving", default=False),
            )
        raise ConfigError(f"unknown generator kind '{kind}'", field="generator.kind")
    except ConfigError:
        raise
    except (CovphaseError, ValueError) as exc:
        raise ConfigError(f"cannot build generator: {exc}", field="generator.kind")
