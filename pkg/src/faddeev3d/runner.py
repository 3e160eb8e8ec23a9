"""Run orchestration: dispatch a parsed config, emit artifacts and a manifest.

Artifact files are byte-deterministic for a fixed config and version (all
floats printed with 17 significant digits, no timestamps inside).  The
manifest records the resolved config, content hashes of every emitted file
and the convergence diagnostics.
"""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, atlas, kernels
from .config import RunConfig, build_potentials
from .errors import ValidationError
from .faddeev import find_binding_energy, reconstruct_components, wavefunction_surface
from .grids import (
    QuadratureGrid,
    azimuthal_grid,
    cosine_grid,
    gauss_legendre,
    momentum_grid,
    segmented_grid,
)
from .kinematics import SphericalMomentum
from .scattering import (
    Axes5D,
    table_axes,
    ScatteringModel,
    apply_kernel,
    channel_energy,
    driving_term,
    elastic_amplitude,
    neumann_pade_solve,
)
from .twobody import find_two_body_bound_state


@dataclass
class RunManifest:
    config: dict[str, str]
    version: str
    backend: str
    started_utc: str
    finished_utc: str
    files: dict[str, str]  # name -> sha256
    diagnostics: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "config": self.config,
                "version": self.version,
                "kernel_backend": self.backend,
                "started_utc": self.started_utc,
                "finished_utc": self.finished_utc,
                "files": self.files,
                "diagnostics": self.diagnostics,
            },
            indent=2,
            sort_keys=True,
        )


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    h.update(path.read_bytes())
    return h.hexdigest()


def _write_csv(path: Path, header: list[str], rows) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in row])
    return path


def _write_json(path: Path, payload: dict) -> Path:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    return path


def _momentum_grid_from(cfg: RunConfig) -> QuadratureGrid:
    if "segments" in cfg.grids:
        return segmented_grid(cfg.grids["segments"], cfg.grids["segment_counts"])
    return momentum_grid(int(cfg.grids["n_q"]), float(cfg.grids["scale"]))


def run(cfg: RunConfig, out_dir: Path | None = None) -> RunManifest:
    out = Path(out_dir or cfg.out_dir or ".")
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    dispatch = {
        "bound": _run_bound,
        "twobody": _run_twobody,
        "singularity-map": _run_map,
        "scatter-drive": _run_scatter,
    }
    files, diagnostics = dispatch[cfg.mode](cfg, out)
    finished = datetime.now(timezone.utc).isoformat()
    manifest = RunManifest(
        config=cfg.resolved,
        version=__version__,
        backend=kernels.BACKEND,
        started_utc=started,
        finished_utc=finished,
        files={f.name: _sha256(f) for f in files},
        diagnostics=diagnostics,
    )
    (out / "manifest.json").write_text(manifest.to_json() + "\n")
    return manifest


def _run_bound(cfg: RunConfig, out: Path):
    potentials = build_potentials(cfg)
    q_grid = _momentum_grid_from(cfg)
    x_grid = cosine_grid(int(cfg.grids["n_x"]))
    phi_grid = azimuthal_grid(int(cfg.grids["n_phi"]))
    sol = find_binding_energy(
        cfg.mode_params["window"],
        cfg.mode_params["tolerance"],
        q_grid=q_grid,
        x_grid=x_grid,
        phi_grid=phi_grid,
        masses=cfg.masses,
        potentials=potentials,
        workers=cfg.workers,
    )
    comp = reconstruct_components(sol)

    n_s = int(cfg.mode_params["surface_points"])
    p_pts = np.linspace(0.0, 3.0 * float(cfg.grids["scale"]), n_s)
    q_lo, q_hi = q_grid.nodes[0], min(q_grid.nodes[-1], 3.0 * float(cfg.grids["scale"]))
    q_pts = np.linspace(q_lo, q_hi, n_s)
    surf1 = wavefunction_surface(comp, p_pts, q_pts, component=1)
    total = surf1.copy()
    for i in (2, 3):
        total += wavefunction_surface(comp, p_pts, q_pts, component=i)

    files = [
        _write_json(
            out / "result.json",
            {
                "binding_energy_MeV": sol.e_b,
                "eta": sol.eta,
                "residual": sol.residual,
                "eta_trace": [[e, eta] for e, eta in sol.trace],
                "grid": {"mapping": q_grid.mapping, "size": q_grid.size},
                "spectator_amplitudes": {
                    "q_MeV": sol.q_grid.nodes.tolist(),
                    "phi1": sol.phi1.tolist(),
                    "phi2": sol.phi2.tolist(),
                    "phi3": sol.phi3.tolist(),
                },
            },
        ),
        _surface_csv(out / "psi1_surface.csv", p_pts, q_pts, surf1),
        _surface_csv(out / "total_surface.csv", p_pts, q_pts, total),
    ]
    diag = {"binding_energy_MeV": sol.e_b, "eta": sol.eta, "evaluations": len(sol.trace)}
    return files, diag


def _surface_csv(path: Path, p_pts, q_pts, surface) -> Path:
    rows = []
    for a, p in enumerate(p_pts):
        for b, q in enumerate(q_pts):
            rows.append([float(p), float(q), float(surface[a, b])])
    return _write_csv(path, ["p_MeV", "q_MeV", "psi"], rows)


def _run_twobody(cfg: RunConfig, out: Path):
    pair = int(cfg.mode_params["pair"])
    if pair not in cfg.potentials:
        raise ValidationError(f"twobody.pair: no potential configured for pair {pair}")
    potentials = build_potentials(cfg)
    pot = potentials[pair]
    bs = find_two_body_bound_state(pot, cfg.mode_params["window"])
    p_pts = np.linspace(0.0, 4.0 * float(cfg.grids["scale"]), 200)
    rows = [
        [float(p), float(bs.vertex(p)), float(bs.wave_function(p))] for p in p_pts
    ]
    files = [
        _write_json(
            out / "twobody.json",
            {
                "pair": pair,
                "binding_energy_MeV": bs.energy,
                "vertex_coefficients": bs.coefficients.tolist(),
                "reduced_mass_MeV": pot.reduced_mass,
            },
        ),
        _write_csv(out / "twobody_wave.csv", ["p_MeV", "vertex", "wave"], rows),
    ]
    return files, {"binding_energy_MeV": bs.energy}


def _run_map(cfg: RunConfig, out: Path):
    spec = atlas.GreenFunctionSpec(
        int(cfg.mode_params["variant"]), cfg.masses, float(cfg.mode_params["energy"])
    )
    region = atlas.boundary_curves(spec, int(cfg.mode_params["samples"]))
    files = [atlas.emit_region(region, out / "singularity_region.csv")]
    diag = {
        "q_vee_MeV": region.q_vee,
        "q_wedge_MeV": region.q_wedge,
        "band_width_MeV": atlas.band_width(region),
        "band_area_MeV2": atlas.band_area(region),
    }
    return files, diag


def _scatter_axes(cfg: RunConfig) -> Axes5D:
    q_max = 3.0 * float(cfg.grids["p_scale"])
    return table_axes(
        int(cfg.grids["n_p"]),
        int(cfg.grids["n_xp"]),
        int(cfg.grids["n_xd"]),
        int(cfg.grids["n_xq"]),
        int(cfg.grids["n_q5"]),
        p_max=2.0 * q_max,
        q_max=q_max,
    )


def _run_scatter(cfg: RunConfig, out: Path):
    potentials = build_potentials(cfg)
    bound_states = {
        i: find_two_body_bound_state(pot, (-50.0, -1e-3)) for i, pot in potentials.items()
    }
    q_max = 3.0 * float(cfg.grids["p_scale"])
    model = ScatteringModel(
        masses=cfg.masses,
        potentials=potentials,
        energy=float(cfg.mode_params["energy"]),
        q0=float(cfg.mode_params["q0"]),
        axes=_scatter_axes(cfg),
        qpp_grid=gauss_legendre(int(cfg.grids["n_qpp"]), 0.0, q_max),
        xpp_grid=cosine_grid(int(cfg.grids["n_xpp"])),
        phipp_grid=azimuthal_grid(int(cfg.grids["n_phipp"])),
    )
    files = []
    for row in (1, 2, 3):
        d = driving_term(model, row, bound_states)
        rows = []
        for e, q in enumerate(model.axes.q):
            for dd, x_q in enumerate(model.axes.x_q):
                for a, p in enumerate(model.axes.p):
                    rows.append([float(q), float(x_q), float(p), float(d.values[a, 0, 0, dd, e])])
        files.append(
            _write_csv(out / f"driving_row{row}.csv", ["q_MeV", "x_q", "p_MeV", "value"], rows)
        )

    t1, t2, t3, diag = neumann_pade_solve(
        model,
        bound_states,
        max_order=int(cfg.mode_params["max_order"]),
        tol=float(cfg.mode_params["tolerance"]),
    )
    probe = apply_kernel(model, 1, {2: t2, 3: t3})
    residual = float(
        np.max(np.abs(t1.values - driving_term(model, 1, bound_states).values - probe.values))
    )
    files.append(
        _write_json(
            out / "iterations.json",
            {
                "orders": diag["orders"],
                "increments": diag["increments"],
                "acceleration_residuals": diag["acceleration_residuals"],
                "probe_sequence": diag["probe"],
                "fixed_point_residual": residual,
            },
        )
    )

    elastic_energy = channel_energy(cfg.masses, bound_states[1], model.q0)
    amp_rows = []
    for x_q in np.linspace(-1.0, 1.0, 21):
        amp = elastic_amplitude(model, t2, t3, SphericalMomentum(model.q0, float(x_q), 0.0), bound_states)
        amp_rows.append([float(x_q), float(amp.real), float(amp.imag)])
    files.append(_write_csv(out / "elastic_amplitude.csv", ["x_q", "re", "im"], amp_rows))
    diagnostics = {
        "orders": diag["orders"],
        "fixed_point_residual": residual,
        "onshell_channel_energy_MeV": elastic_energy,
    }
    return files, diagnostics
