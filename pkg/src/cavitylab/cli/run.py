"""Task dispatch for configuration-driven runs."""

import csv
import hashlib
import json
import math
import os
import platform
import time
from importlib import metadata

import numpy as np

from .. import _kernels
from ..core.hamiltonians import (
    TimeDependentHamiltonian,
    build_hamiltonian,
    total_dipole_operator,
)
from ..core.models import build_tavis_cummings, emitter_operator, excitation_number, sector
from ..core.operators import mode_operator
from ..core.types import (
    ExternalDrive,
    Grid,
    LengthGauge,
    MatterModel,
    Mode,
    ModeSet,
    Species,
    VelocityGauge,
    harmonic_potential,
    sin2_pulse,
)
from ..errors import CavityLabError, ConfigError, InvalidArgumentError
from ..oracle import collective_mode_shift, instability_scan
from ..solver.eigen import solve
from ..solver.gauge import check_gauge_invariance
from ..solver.propagate import kick, propagate
from ..solver.spectra import absorption_spectrum
from ..surfaces import cavity_bo_surface, nonadiabatic_couplings, polaritonic_surface, refine_scan
from ..thermo import thermal_sweep


def _clean(obj):
    """JSON-safe copy: numpy scalars/arrays to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def write_json(path, obj):
    with open(path, "w") as fh:
        json.dump(_clean(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


class RunContext:
    def __init__(self, config, output=None):
        self.config = config
        self.outdir = output or config.output.directory
        os.makedirs(self.outdir, exist_ok=True)
        self.files = []

    def path(self, name):
        self.files.append(name)
        return os.path.join(self.outdir, name)

    @property
    def solver_kwargs(self):
        n = self.config.numerics
        kw = {"tol": n.tol, "dense_limit": n.dense_limit}
        # iterative-only options
        kw["seed"] = int(self.config.seed % 2**32)
        kw["max_iter"] = n.max_iter
        if n.block_size:
            kw["block_size"] = n.block_size
        return kw


def _solve(ctx, h, k):
    kw = ctx.solver_kwargs
    if h.dim <= kw["dense_limit"]:
        return solve(h, k, dense_limit=kw["dense_limit"])
    return solve(h, k, **kw)


# -- model construction -------------------------------------------------------

def build_modes(config, n_max=None):
    modes = tuple(Mode(m.omega, m.g, tuple(m.polarization), m.n_max) for m in config.modes)
    ms = ModeSet(modes)
    return ms if n_max is None else ms.with_n_max(n_max)


def build_matter(config):
    c = config
    species = tuple(Species(s.name, s.mass, s.charge, s.quantum, s.count, tuple(s.positions)) for s in c.species)
    pot = c.model.potential
    v = None
    if pot.kind == "harmonic":
        mass = pot.mass or next((s.mass for s in species if s.quantum), 1.0)
        v = harmonic_potential(pot.omega, pot.center, mass)
    grid = Grid(c.grid.x_min, c.grid.x_max, c.grid.n_points)
    return MatterModel(species, grid, c.model.softening, v, c.model.kinetic)


def gauge_form(config):
    g = config.gauge
    return LengthGauge(g.self_polarization) if g.form == "length" else VelocityGauge(g.diamagnetic)


def build_model_hamiltonian(config):
    """``(H, matter or None)`` for the configured model."""
    c = config
    if c.model.kind == "tavis_cummings":
        m = c.modes[0]
        h = build_tavis_cummings(c.model.n_emitters, m.omega, c.model.omega_a, m.g, rwa=c.model.rwa, n_max=m.n_max,
                                 max_dim=c.numerics.max_dim)
        return h, None
    matter = build_matter(c)
    return build_hamiltonian(matter, build_modes(c), gauge_form(c), max_dim=c.numerics.max_dim), matter


def named_operator(name, h, matter, modes):
    basis = h.basis
    if name == "dipole":
        if matter is None:
            return emitter_operator(basis, "sx")
        return total_dipole_operator(matter, basis)
    if name in ("sx", "ee"):
        if matter is not None:
            raise ConfigError(f"observable {name!r} needs a tavis_cummings model", key="task.observables")
        return emitter_operator(basis, name)
    if name[0] in "qpn" and name[1:].isdigit():
        a = int(name[1:])
        if a >= basis.n_modes:
            raise ConfigError(f"observable {name!r} refers to a missing mode", key="task.observables")
        return mode_operator(basis, a, name[0], modes[a].omega)
    raise ConfigError(f"unknown observable {name!r}", key="task.observables")


# -- tasks ----------------------------------------------------------------------

def task_spectrum(ctx):
    c = ctx.config
    h, _ = build_model_hamiltonian(c)
    k = None if c.task.k is None else min(c.task.k, h.dim - 1 if h.dim > c.numerics.dense_limit else h.dim)
    spectrum = _solve(ctx, h, k)
    write_csv(ctx.path("eigenvalues.csv"), ["index", "energy", "gap", "residual"],
              [(i, float(e), float(e - spectrum.eigenvalues[0]), float(r))
               for i, (e, r) in enumerate(zip(spectrum.eigenvalues, spectrum.residuals))])
    summary = {"method": spectrum.method, "dim": h.dim, "label": h.label, "k": len(spectrum),
               "multiplets": spectrum.multiplets(), "eigenvalues": spectrum.eigenvalues}
    write_json(ctx.path("spectrum.json"), summary)
    if c.task.vectors:
        v = spectrum.eigenvectors
        write_csv(ctx.path("eigenvectors.csv"), ["basis_index", *[f"v{i}" for i in range(v.shape[1])]],
                  [(i, *[float(x) for x in np.real_if_close(row)]) for i, row in enumerate(v)])
    if c.output.write_matrix:
        h.to_coo_text(ctx.path("hamiltonian.coo"))
    return summary


def _initial_state(ctx, h):
    c = ctx.config
    if c.task.initial == "ground":
        return np.asarray(_solve(ctx, h, 1).vector(0), dtype=complex)
    if c.model.kind != "tavis_cummings":
        raise ConfigError("initial = 'excited' needs a tavis_cummings model", key="task.initial")
    basis = h.basis
    exc = excitation_number(basis)
    ee = np.diag(emitter_operator(basis, "ee", 0).toarray())
    idx = np.nonzero((exc == 1) & (ee > 0.5))[0]
    psi = np.zeros(h.dim, dtype=complex)
    psi[idx[0]] = 1.0
    return psi


def task_propagate(ctx):
    c = ctx.config
    t = c.task
    h, matter = build_model_hamiltonian(c)
    modes = None if matter is None else build_modes(c)
    psi = _initial_state(ctx, h)
    if t.kick_operator and t.kick_strength:
        psi = kick(psi, named_operator(t.kick_operator, h, matter, modes or build_modes(c)), t.kick_strength)
        psi = psi / np.linalg.norm(psi)
    target = h
    if t.pulse is not None:
        if matter is None or c.gauge.form != "length":
            raise ConfigError("pulses need a grid model in the length gauge", key="task.pulse")
        f = sin2_pulse(t.pulse.amplitude, t.pulse.duration, t.pulse.t0)
        if t.pulse.target == "current":
            if t.pulse.mode >= len(modes.modes):
                raise ConfigError("pulse mode out of range", key="task.pulse.mode")
            currents = [None] * len(modes.modes)
            currents[t.pulse.mode] = f
            drive = ExternalDrive(j_alpha=tuple(currents))
        else:
            x = matter.grid.points
            drive = ExternalDrive(phi_ext=lambda tt: f(tt) * x)
        target = TimeDependentHamiltonian(matter, modes, drive, gauge_form(c), max_dim=c.numerics.max_dim)
    obs = {name: named_operator(name, h, matter, modes or build_modes(c)) for name in t.observables}
    traj = propagate(target, psi, t.dt, t.t_end, obs, record_every=t.record_every)
    traj.to_csv(ctx.path("trajectory.csv"))
    summary = {
        "steps": int(round(t.t_end / t.dt)),
        "max_norm_drift": float(np.max(np.abs(traj.state_norm - 1.0))),
        "energy_drift": float(np.ptp(traj.observables["energy"])),
    }
    if t.spectrum_observable:
        if t.spectrum_observable not in traj.observables:
            raise ConfigError("spectrum_observable must be one of the recorded observables",
                              key="task.spectrum_observable")
        peaks = absorption_spectrum(traj, t.spectrum_observable, window=t.window)
        summary["spectrum"] = peaks.to_dict()
    write_json(ctx.path("propagation.json"), summary)
    return summary


def _axis_values(values):
    if isinstance(values, list):
        return np.asarray(values, dtype=float)
    return np.linspace(values.start, values.stop, values.num)


def task_surface(ctx):
    c = ctx.config
    t = c.task
    if c.model.kind != "grid":
        raise ConfigError("surface scans need a grid model", key="model.kind")
    matter = build_matter(c)
    modes = build_modes(c)
    axes = {name: _axis_values(v) for name, v in t.axes.items()}
    if t.kind == "cavity_bo":
        scan = cavity_bo_surface
        kw = {"fixed": t.fixed, "include_self_polarization": c.gauge.self_polarization}
    else:
        scan = polaritonic_surface
        kw = {"fixed": t.fixed, "gauge": LengthGauge(c.gauge.self_polarization)}
    if t.refine:
        surface = refine_scan(scan, matter, modes, axes, k=t.k, **kw)
    else:
        surface = scan(matter, modes, axes, k=t.k, **kw)
    surface.to_csv(ctx.path("surface.csv"))
    for axis in t.couplings:
        nonadiabatic_couplings(surface, axis)
    if t.couplings:
        surface.couplings_to_csv(ctx.path("couplings.csv"))
    summary = {"kind": surface.kind, "shape": surface.shape, "k": surface.k,
               "failed_nodes": surface.failed, "degenerate_nodes": surface.degenerate}
    write_json(ctx.path("surface.json"), summary)
    return summary


def task_thermal_sweep(ctx):
    c = ctx.config
    h, matter = build_model_hamiltonian(c)
    if matter is None:
        raise ConfigError("thermal sweeps need a grid model", key="model.kind")
    spectrum = _solve(ctx, h, c.task.n_levels)
    sweep = thermal_sweep(spectrum, build_modes(c), c.task.temperatures)
    sweep.to_csv(ctx.path("thermal.csv"))
    return {"n_temperatures": len(sweep.temperatures), "max_truncation_bound": float(np.max(sweep.truncation_bound))}


def task_gauge_check(ctx):
    c = ctx.config
    if c.model.kind != "grid":
        raise ConfigError("gauge checks need a grid model", key="model.kind")
    report = check_gauge_invariance(build_matter(c), build_modes(c), c.task.ladder, gap_tol=c.task.gap_tol,
                                    include_diamagnetic=c.gauge.diamagnetic, tol=c.numerics.tol)
    write_json(ctx.path("gauge.json"), report.to_dict())
    return {"consistent": report.consistent, "final_gap": report.final_gap}


def task_instability_scan(ctx):
    c = ctx.config
    if c.model.kind != "grid":
        raise ConfigError("instability scans need a grid model", key="model.kind")
    matter, modes = build_matter(c), build_modes(c)
    rows, verdicts = [], {}
    for branch in c.task.branches:
        table = instability_scan(matter, modes, c.task.ladder, branch == "on", tol=c.numerics.tol,
                                 cauchy_tol=c.task.cauchy_tol)
        verdicts[branch] = table.to_dict()
        for r in table.rows:
            rows.append((branch, r["level"], r["half_width"], r["n_points"], r["n_max"], r["dim"], r["E0"], r["dE"]))
    write_csv(ctx.path("instability.csv"), ["self_polarization", "level", "half_width", "n_points", "n_max", "dim",
                                            "E0", "dE"], rows)
    write_json(ctx.path("instability.json"), verdicts)
    return {b: v["verdict"] for b, v in verdicts.items()}


def task_collective_scan(ctx):
    c = ctx.config
    t = c.task
    mode = c.modes[0]
    rows = []
    for n in t.n_values:
        shift = collective_mode_shift(n, t.omega0, mode.omega, mode.g, c.gauge.self_polarization)
        tc = float("nan")
        if t.tavis_cummings and n >= 1:
            h = build_tavis_cummings(n, mode.omega, t.omega0, mode.g, rwa=True, n_max=1)
            block, _ = sector(h, 1)
            e = np.linalg.eigvalsh(block)
            tc = float(e[-1] - e[0])
        rows.append((n, shift.lower, shift.upper, shift.splitting, shift.dressed_frequency, shift.shift,
                     int(shift.exceeds_double), tc))
    write_csv(ctx.path("collective.csv"), ["N", "lower", "upper", "splitting", "dressed_frequency", "shift",
                                           "exceeds_double", "tc_splitting"], rows)
    return {"n_values": list(t.n_values)}


TASK_RUNNERS = {
    "spectrum": task_spectrum,
    "propagate": task_propagate,
    "surface": task_surface,
    "thermal_sweep": task_thermal_sweep,
    "gauge_check": task_gauge_check,
    "instability_scan": task_instability_scan,
    "collective_scan": task_collective_scan,
}


def _versions():
    out = {"python": platform.python_version(), "backend": _kernels.backend()}
    for pkg in ("cavitylab", "numpy", "scipy", "numba", "pydantic"):
        try:
            out[pkg] = metadata.version(pkg if pkg != "cavitylab" else "artifact")
        except metadata.PackageNotFoundError:
            out[pkg] = None
    return out


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def run(config, output=None, threads=None):
    """Run the configured task; returns the manifest dict (also written to disk)."""
    if threads:
        _kernels.set_threads(threads)
    ctx = RunContext(config, output)
    np.random.seed(config.seed % 2**32)
    start = time.perf_counter()
    try:
        summary = TASK_RUNNERS[config.task.name](ctx)
    except CavityLabError as exc:
        exc.args = (f"task {config.task.name}: {exc}",) + exc.args[1:]
        raise
    except (ValueError, ArithmeticError) as exc:
        raise InvalidArgumentError(f"task {config.task.name}: {exc}") from exc
    wall = time.perf_counter() - start
    # values are stored converted, so the echo is re-runnable in atomic units
    resolved = config.model_dump(mode="json")
    input_units = resolved["units"]
    resolved["units"] = {"energy": "hartree", "temperature": "hartree"}
    manifest = {
        "task": config.task.name,
        "config": resolved,
        "input_units": input_units,
        "seed": config.seed,
        "versions": _versions(),
        "wall_time_s": wall,
        "summary": summary,
        "files": [{"name": f, "sha256": _sha256(os.path.join(ctx.outdir, f))} for f in ctx.files],
    }
    write_json(os.path.join(ctx.outdir, "manifest.json"), manifest)
    return manifest
