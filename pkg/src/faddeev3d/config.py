"""Run configuration: flat ``key = value`` files with dotted sections.

Example (bound mode):

    mode = bound
    masses.values = 938.272 939.565 938.272
    masses.unit = MeV
    potential.shared.family = yamaguchi
    potential.shared.beta = 230.0
    potential.shared.bind = 2.2246
    grids.n_q = 32
    bound.window = -40 -3
    bound.tolerance = 1e-8

Momenta may be given in fm^-1 (converted with hbar c); energies are MeV.
Defaults are filled at parse time and recorded as explicit values in the
resolved echo, so a run manifest pins the full input.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .errors import ValidationError
from .masses import SPECTATOR_PAIR, MassSet
from .twobody import (
    SeparablePotential,
    make_form_factor,
    yamaguchi_strength_for_binding,
)

HBARC_MEV_FM = 197.3269804  # conversion constant, MeV * fm

MODES = ("bound", "twobody", "singularity-map", "scatter-drive")

_GRID_DEFAULTS = {"n_q": 32, "n_x": 32, "n_phi": 16, "scale": 300.0}
_SCATTER_GRID_DEFAULTS = {
    "n_p": 6,
    "n_xp": 4,
    "n_xd": 4,
    "n_xq": 4,
    "n_q5": 6,
    "n_qpp": 16,
    "n_xpp": 16,
    "n_phipp": 8,
    "p_scale": 300.0,
}


@dataclass
class PotentialSpec:
    family: str
    rank: int
    params: dict[str, float]


@dataclass
class RunConfig:
    mode: str
    masses: MassSet
    potentials: dict[int, PotentialSpec]
    grids: dict[str, float]
    mode_params: dict[str, object]
    out_dir: Path | None
    seed: int
    workers: int
    resolved: dict[str, str] = field(default_factory=dict)


def _parse_lines(text: str) -> dict[str, str]:
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValidationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not key or not value:
            raise ValidationError(f"line {lineno}: empty key or value in {raw!r}")
        if key in values:
            raise ValidationError(f"line {lineno}: duplicate key {key!r}")
        values[key] = value
    return values


def _floats(raw: str, key: str, count: int | None = None) -> list[float]:
    try:
        vals = [float(tok) for tok in raw.split()]
    except ValueError:
        raise ValidationError(f"{key}: could not parse {raw!r} as numbers") from None
    if count is not None and len(vals) != count:
        raise ValidationError(f"{key}: expected {count} values, got {len(vals)}")
    return vals


def _momentum_unit_factor(tag: str, key: str) -> float:
    if tag == "MeV":
        return 1.0
    if tag in ("fm^-1", "fm-1", "1/fm"):
        return HBARC_MEV_FM
    raise ValidationError(f"{key}: unit tag must be MeV or fm^-1, got {tag!r}")


def parse_config(path: str | Path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise ValidationError(f"config file not found: {path}")
    kv = _parse_lines(path.read_text())
    used: set[str] = set()

    def take(key: str, default: str | None = None) -> str | None:
        used.add(key)
        return kv.get(key, default)

    mode = take("mode")
    if mode not in MODES:
        raise ValidationError(f"mode: must be one of {MODES}, got {mode!r}")

    mass_unit = take("masses.unit", "MeV")
    mass_factor = _momentum_unit_factor(mass_unit, "masses.unit")
    raw_masses = take("masses.values")
    if raw_masses is None:
        raise ValidationError("masses.values: missing required field")
    mass_vals = _floats(raw_masses, "masses.values", 3)
    for i, mv in enumerate(mass_vals):
        if mv <= 0.0:
            raise ValidationError(f"masses[{i}]: mass must be positive, got {mv!r}")
    masses = MassSet(*(mv * mass_factor for mv in mass_vals))

    potentials = _parse_potentials(kv, take)

    grids: dict[str, float] = {}
    for name, default in _GRID_DEFAULTS.items():
        raw = take(f"grids.{name}")
        grids[name] = type(default)(raw) if raw is not None else default
    scale_unit = take("grids.scale_unit", "MeV")
    grids["scale"] *= _momentum_unit_factor(scale_unit, "grids.scale_unit")
    seg = take("grids.segments")
    seg_counts = take("grids.segment_counts")
    if seg is not None:
        factor = _momentum_unit_factor(scale_unit, "grids.scale_unit")
        grids["segments"] = [v * factor for v in _floats(seg, "grids.segments")]
        if seg_counts is None:
            raise ValidationError("grids.segment_counts: required when grids.segments is given")
        grids["segment_counts"] = [int(float(v)) for v in seg_counts.split()]
    for name, default in _SCATTER_GRID_DEFAULTS.items():
        raw = take(f"grids.{name}")
        grids[name] = type(default)(raw) if raw is not None else default

    mode_params = _parse_mode_params(mode, take)

    out_raw = take("output.dir")
    out_dir = Path(out_raw) if out_raw else None
    seed = int(take("run.seed", "0"))
    workers = int(take("run.workers", "1"))
    if workers < 1:
        raise ValidationError(f"run.workers: must be >= 1, got {workers}")

    unknown = set(kv) - used
    if unknown:
        raise ValidationError(f"unknown config keys: {sorted(unknown)}")

    cfg = RunConfig(mode, masses, potentials, grids, mode_params, out_dir, seed, workers)
    cfg.resolved = _resolve_echo(cfg)
    return cfg


def _parse_potentials(kv: dict[str, str], take) -> dict[int, PotentialSpec]:
    specs: dict[int, PotentialSpec] = {}
    sections = ["shared", "1", "2", "3"]
    found: dict[str, dict[str, str]] = {}
    for sec in sections:
        prefix = f"potential.{sec}."
        entries = {k[len(prefix) :]: v for k, v in kv.items() if k.startswith(prefix)}
        for k in kv:
            if k.startswith(prefix):
                take(k)
        if entries:
            found[sec] = entries

    def build(entries: dict[str, str], where: str) -> PotentialSpec:
        family = entries.get("family", "yamaguchi")
        rank = int(entries.get("rank", "1"))
        params: dict[str, float] = {}
        for key, val in entries.items():
            if key in ("family", "rank"):
                continue
            try:
                params[key] = float(val)
            except ValueError:
                raise ValidationError(f"potential.{where}.{key}: not a number: {val!r}") from None
        if family == "yamaguchi":
            if "beta" not in params:
                raise ValidationError(f"potential.{where}.beta: missing Yamaguchi range")
            if ("strength" in params) == ("bind" in params):
                raise ValidationError(
                    f"potential.{where}: give exactly one of 'strength' or 'bind'"
                )
        return PotentialSpec(family, rank, params)

    shared = build(found["shared"], "shared") if "shared" in found else None
    for i in (1, 2, 3):
        sec = str(i)
        if sec in found:
            specs[i] = build(found[sec], sec)
        elif shared is not None:
            specs[i] = PotentialSpec(shared.family, shared.rank, dict(shared.params))
    return specs


def _parse_mode_params(mode: str, take) -> dict[str, object]:
    params: dict[str, object] = {}
    if mode == "bound":
        window = take("bound.window", "-50 -0.1")
        params["window"] = tuple(_floats(window, "bound.window", 2))
        params["tolerance"] = float(take("bound.tolerance", "1e-8"))
        params["surface_points"] = int(take("bound.surface_points", "40"))
    elif mode == "twobody":
        params["pair"] = int(take("twobody.pair", "1"))
        window = take("twobody.window", "-20 -0.01")
        params["window"] = tuple(_floats(window, "twobody.window", 2))
    elif mode == "singularity-map":
        params["energy"] = float(take("map.energy", "1.0"))
        params["variant"] = int(take("map.variant", "1"))
        params["samples"] = int(take("map.samples", "256"))
        if not 1 <= int(params["variant"]) <= 6:
            raise ValidationError(f"map.variant: must be 1..6, got {params['variant']}")
    elif mode == "scatter-drive":
        params["energy"] = float(take("scatter.energy", "-8.0"))
        params["q0"] = float(take("scatter.q0", "20.0"))
        params["max_order"] = int(take("scatter.max_order", "12"))
        params["tolerance"] = float(take("scatter.tol", "1e-8"))
    return params


def _resolve_echo(cfg: RunConfig) -> dict[str, str]:
    echo: dict[str, str] = {"mode": cfg.mode}
    echo["masses.values"] = " ".join(f"{m:.17g}" for m in cfg.masses.as_tuple())
    echo["masses.unit"] = "MeV"
    for i, spec in sorted(cfg.potentials.items()):
        echo[f"potential.{i}.family"] = spec.family
        echo[f"potential.{i}.rank"] = str(spec.rank)
        for key, val in sorted(spec.params.items()):
            echo[f"potential.{i}.{key}"] = f"{val:.17g}"
    for key, val in sorted(cfg.grids.items()):
        if isinstance(val, list):
            echo[f"grids.{key}"] = " ".join(f"{v:.17g}" if isinstance(v, float) else str(v) for v in val)
        else:
            echo[f"grids.{key}"] = f"{val:.17g}" if isinstance(val, float) else str(val)
    for key, val in sorted(cfg.mode_params.items()):
        if isinstance(val, tuple):
            echo[f"{cfg.mode}.{key}"] = " ".join(f"{v:.17g}" for v in val)
        elif isinstance(val, float):
            echo[f"{cfg.mode}.{key}"] = f"{val:.17g}"
        else:
            echo[f"{cfg.mode}.{key}"] = str(val)
    echo["run.seed"] = str(cfg.seed)
    echo["run.workers"] = str(cfg.workers)
    return echo


def build_potentials(cfg: RunConfig) -> dict[int, SeparablePotential]:
    """Materialise the per-pair separable potentials with pair reduced masses."""
    if sorted(cfg.potentials) != [1, 2, 3] and cfg.mode in ("bound", "scatter-drive"):
        raise ValidationError("bound/scatter modes need potentials for all three pairs")
    out: dict[int, SeparablePotential] = {}
    for i, spec in cfg.potentials.items():
        j, k = SPECTATOR_PAIR[i]
        mu = cfg.masses.mu(j, k)
        if spec.family != "yamaguchi" or spec.rank != 1:
            raise ValidationError(
                f"potential.{i}: config builder supports rank-1 yamaguchi; register "
                f"custom factors programmatically"
            )
        beta = spec.params["beta"]
        if "bind" in spec.params:
            strength = yamaguchi_strength_for_binding(beta, mu, spec.params["bind"])
        else:
            strength = spec.params["strength"]
        ff = make_form_factor("yamaguchi", beta=beta)
        out[i] = SeparablePotential(1, [ff], [[strength]], mu, channel=f"pair{i}")
    return out
