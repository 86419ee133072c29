"""Command-line front end: task orchestration and result persistence.

Usage::

    breit-lab <task> --config <path> [--set key=value]... [--out <path>]

with ``task`` one of ``spectrum``, ``perturb``, ``dynamics``, ``verify``,
``converge``.  The config file is flat ``key = value`` text (see
``config._SCHEMA``); ``--set`` overrides are applied after parsing and
re-validated; ``--out`` overrides ``output_path``.

Every run writes a single JSON record embedding the full effective
configuration, a results payload, library versions, wall time, and the
declared tolerance outcomes.  The exit status is a pure function of those
outcomes: 0 iff all hold, 1 otherwise (partial results are still written).
The results payload is deterministic for a fixed request — timings live
outside it — so two identical invocations differ only in ``wall_time_s``.

File formats:
  * results: JSON (sorted keys, 2-space indent);
  * trajectories (``dynamics``) and study tables (``converge``): CSV next
    to the JSON record, same stem;
  * eigenvectors (``spectrum`` with ``save_vectors=<path>``): flat binary,
    header (grid_n, 16) as little-endian uint32 followed by little-endian
    float64 (re, im) pairs in C order over the (n, n, n, 4, 4) field.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from . import __version__, darwin, derivation
from .config import TASKS, Config, ConfigError, apply_overrides, load_config
from .oracle import HydrogenicState, breit_shift_matrix, dirac_coulomb_reference
from .solver import ALL_TERMS, HamiltonianSpec, save_field, solve_spectrum


@dataclass(frozen=True)
class TaskRequest:
    """One CLI invocation: task name, config source, and overrides."""

    task: str
    config_path: str
    output_path: str | None = None
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ConfigError(f"task must be one of {TASKS}, got {self.task!r}")


@dataclass
class RunRecord:
    """Everything a run emits: config echo, payload, and outcomes."""

    task: str
    config: dict
    results: dict
    versions: dict
    wall_time_s: float
    tolerances: dict

    @property
    def exit_status(self) -> int:
        return 0 if all(self.tolerances.values()) else 1

    def as_dict(self) -> dict:
        return {
            "task": self.task,
            "config": self.config,
            "results": self.results,
            "versions": self.versions,
            "wall_time_s": self.wall_time_s,
            "tolerances": self.tolerances,
            "exit_status": self.exit_status,
        }


def _versions() -> dict:
    return {
        "breitlab": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": ".".join(map(str, sys.version_info[:3])),
    }


def _terms_from_config(cfg: Config) -> frozenset:
    raw = cfg.extras.get("terms", "coulomb,gaunt,retardation")
    terms = frozenset(t.strip() for t in raw.split(",") if t.strip())
    unknown = terms - ALL_TERMS
    if unknown:
        raise ConfigError(
            f"unknown interaction terms {sorted(unknown)}; "
            f"valid: {sorted(ALL_TERMS)}"
        )
    return terms


def _sidecar(cfg: Config, suffix: str) -> Path:
    return Path(cfg.output_path).with_suffix(suffix)


# ---------------------------------------------------------------------------
# task runners: each returns (results payload, tolerance outcomes)
# ---------------------------------------------------------------------------


def _run_spectrum(cfg: Config):
    spec = HamiltonianSpec(
        particle1=cfg.particle1,
        particle2=cfg.particle2,
        coupling=cfg.coupling,
        grid=cfg.grid,
        terms=_terms_from_config(cfg),
        projection=cfg.extras.get("projection", "positive_energy"),
    )
    vec_path = cfg.extras.get("save_vectors", "")
    res = solve_spectrum(
        spec,
        n_states=int(cfg.extras.get("n_states", 1)),
        tol=float(cfg.extras.get("tol", 1e-8)),
        seed=int(cfg.extras.get("seed", 0)),
        keep_vectors=bool(vec_path),
    )
    if vec_path:
        save_field(res.eigenvectors[0], vec_path)
    results = res.as_dict()
    # Timing is reported at the record level only; the payload stays
    # byte-identical across repeated identical requests.
    results.pop("wall_time", None)
    if vec_path:
        results["eigenvector_file"] = vec_path
    return results, {"eigensolver_converged": bool(res.converged)}


def _run_perturb(cfg: Config):
    m2 = cfg.particle2.mass
    mu = m2 / (1.0 + m2)
    alpha = cfg.coupling.alpha_eff
    if alpha <= 0:
        raise ConfigError("perturb task needs an attractive coupling (alpha_eff > 0)")
    state = HydrogenicState(n=1, l=0, m=0, mu=mu, alpha_eff=alpha)
    mat = breit_shift_matrix(
        state, cfg.grid, alpha, m1=1.0, m2=m2, parts=("gaunt", "retardation")
    )
    evals = np.linalg.eigvalsh(mat)
    anti_hermitian = float(
        np.linalg.norm(mat - mat.conj().T) / max(np.linalg.norm(mat), 1e-300)
    )
    results = {
        "orbital": {"n": 1, "l": 0, "m": 0, "mu": mu},
        "unperturbed_binding": state.energy,
        "shift_matrix_real": np.real(mat).tolist(),
        "shift_matrix_imag": np.imag(mat).tolist(),
        "shift_eigenvalues": [float(v) for v in evals],
        "predicted_lowest_binding": state.energy + float(evals[0]),
        "dirac_point_reference": float(
            dirac_coulomb_reference(alpha, 1, -1, mass=mu) - mu
        ),
    }
    tolerances = {
        "shift_matrix_hermitian": anti_hermitian <= 1e-10,
        "shifts_finite": bool(np.all(np.isfinite(evals))),
    }
    return results, tolerances


def _run_dynamics(cfg: Config):
    system = darwin.DarwinSystem(
        particles=(cfg.particle1, cfg.particle2),
        light_speed=float(cfg.extras.get("light_speed", 1.0)),
    )
    radius = float(cfg.extras.get("orbit_radius", 1.0))
    state0 = darwin.circular_initial_state(system, radius)
    dt = float(cfg.extras.get("dt", 0.0))
    if dt <= 0:
        dt = darwin.suggest_timestep(system, state0)
    n_steps = int(cfg.extras.get("n_steps", 1000))
    traj = darwin.integrate(system, state0, dt, n_steps)

    csv_path = _sidecar(cfg, ".csv")
    traj.write_csv(csv_path)

    e_bind = darwin.binding_energy(system, state0)
    energy_drift = float(np.max(np.abs(traj.energies - traj.energies[0])))
    momentum_drift = float(
        np.max(np.linalg.norm(traj.total_momenta - traj.total_momenta[0], axis=1))
    )
    tol = float(cfg.extras.get("tol", 1e-8))
    omega, omega_k = darwin.circular_orbit(system, radius)
    results = {
        "dt": dt,
        "n_steps": n_steps,
        "orbit_radius": radius,
        "light_speed": system.light_speed,
        "initial_binding_energy": float(e_bind),
        "energy_drift": energy_drift,
        "momentum_drift": momentum_drift,
        "orbital_frequency": float(omega),
        "kepler_frequency": float(omega_k),
        "trajectory_file": str(csv_path),
    }
    tolerances = {
        "energy_drift_below_tol": energy_drift <= tol * abs(e_bind),
        "momentum_drift_below_tol": momentum_drift <= tol,
    }
    return results, tolerances


def default_verification_packets(box_length: float):
    """Deterministic pair of wavepackets used by the ``verify`` task.

    Momenta scale as 1/box so the packets stay localized well inside the
    box; sidelobes reaching the minimum-image seams of the |x-y| kernels
    would otherwise put a floor under the integration-by-parts residual.
    """
    p1 = derivation.FreeWavepacket.gaussian(
        box_length,
        center_momentum=(6.0 / box_length, 0.0, 0.0),
        sigma_modes=1.9,
        mode_cutoff=11,
        spin=(1.0, 0.0),
    )
    p2 = derivation.FreeWavepacket.gaussian(
        box_length,
        center_momentum=(-4.0 / box_length, 2.0 / box_length, 0.0),
        sigma_modes=1.9,
        mode_cutoff=11,
        spin=(0.0, 1.0),
    )
    return p1, p2


def _run_verify(cfg: Config):
    box = cfg.grid.box_length
    p1, p2 = default_verification_packets(box)
    retard = derivation.FreeWavepacket.gaussian(
        box,
        center_momentum=(4.8 / box, 2.0 / box, 0.0),
        sigma_modes=1.9,
        mode_cutoff=7,
        max_terms=64,
    )
    reports = [
        derivation.continuity_substitution_check(p1, p2, box),
        derivation.integration_by_parts_check(p1, p2, box, levels=(48, 96, 192)),
        derivation.retardation_expansion_check(
            derivation.CurrentDensity(retard),
            separations=tuple(
                box * f for f in (0.01, 0.015, 0.0225, 0.035, 0.05, 0.075, 0.1)
            ),
        ),
        derivation.neglected_term_estimate(),
    ]
    results = {"reports": [r.as_dict() for r in reports]}
    tolerances = {r.name: bool(r.passed) for r in reports}
    return results, tolerances


_STUDY_AXES = ("grid_n", "box_length", "softening")


def _fit_order(xs, values):
    """Convergence order p and Richardson limit from the last three levels.

    Model value(x) = limit + C x^p on the small-parameter axis x; solved
    from the two successive differences (bisection in p), then the limit
    follows by eliminating C.  Returns (p, limit), or (None, None) when the
    differences do not shrink.
    """
    x1, x2, x3 = xs[-3:]
    v1, v2, v3 = values[-3:]
    d12, d23 = v2 - v1, v3 - v2
    if d23 == 0 or d12 == 0 or abs(d23) >= abs(d12) or d12 * d23 < 0:
        return None, None
    target = d12 / d23

    def mismatch(p):
        return (x1**p - x2**p) / (x2**p - x3**p) - target

    lo, hi = 1e-3, 16.0
    if mismatch(lo) * mismatch(hi) > 0:
        return None, None
    from scipy.optimize import brentq

    p = float(brentq(mismatch, lo, hi, xtol=1e-10))
    c = d23 / (x3**p - x2**p)
    limit = v3 - c * x3**p
    return p, float(limit)


def limit_estimate(bindings, richardson):
    """Best estimate of the converged value from a finished study.

    The fitted power-law extrapolation is only trusted when its jump beyond
    the finest level does not exceed the last observed increment; a larger
    jump means the levels are not yet in the model's asymptotic regime (the
    error need not even be monotone in the level parameter), and then the
    finest level itself is the defensible estimate.  Returns
    (estimate, uncertainty) with the last increment as the uncertainty.
    """
    if len(bindings) < 2:
        return (bindings[-1] if bindings else None), None
    last_increment = abs(bindings[-1] - bindings[-2])
    if richardson is not None and abs(richardson - bindings[-1]) <= last_increment:
        return float(richardson), float(last_increment)
    return float(bindings[-1]), float(last_increment)


def convergence_study(cfg: Config):
    """Run the spectrum task per level of one numerical axis.

    Emits binding energy vs level, the fitted convergence order, and the
    Richardson-extrapolated limit; per-level failures are recorded and the
    study continues.
    """
    axis = cfg.extras.get("converge_axis", "softening")
    if axis not in _STUDY_AXES:
        raise ConfigError(f"converge_axis must be one of {_STUDY_AXES}, got {axis!r}")
    raw = cfg.extras.get("converge_levels", "")
    if raw:
        levels = [
            int(v) if axis == "grid_n" else float(v)
            for v in str(raw).split(";")
            if v.strip()
        ]
    elif axis == "softening":
        a = cfg.grid.softening
        levels = [a, a / 2, a / 4]
    elif axis == "grid_n":
        levels = [cfg.grid.n, 3 * cfg.grid.n // 2, 2 * cfg.grid.n]
    else:
        levels = [cfg.grid.box_length * f for f in (1.0, 1.5, 2.0)]
    if len(levels) < 3:
        raise ConfigError(f"convergence study needs >= 3 levels, got {levels}")

    rows = []
    for level in levels:
        level_cfg = apply_overrides(cfg, {axis: str(level), "task": "spectrum"})
        try:
            payload, _ = _run_spectrum(level_cfg)
            rows.append(
                {
                    "level": level,
                    "binding": payload["binding_energies"][0],
                    "converged": payload["converged"],
                    "error": "",
                }
            )
        except Exception as exc:  # noqa: BLE001 - recorded, study continues
            rows.append(
                {"level": level, "binding": None, "converged": False,
                 "error": f"{type(exc).__name__}: {exc}"}
            )

    good = [r for r in rows if r["binding"] is not None]
    order = limit = None
    if len(good) >= 3:
        # Small parameter: 1/n for grid_n, 1/L for box_length, a itself.
        xs = [
            1.0 / r["level"] if axis in ("grid_n", "box_length") else r["level"]
            for r in good
        ]
        order, limit = _fit_order(xs, [r["binding"] for r in good])
    return axis, rows, order, limit


def _run_converge(cfg: Config):
    axis, rows, order, limit = convergence_study(cfg)
    csv_path = _sidecar(cfg, ".csv")
    with open(csv_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([axis, "binding", "converged", "error"])
        for r in rows:
            w.writerow(
                [
                    r["level"],
                    "" if r["binding"] is None else repr(r["binding"]),
                    r["converged"],
                    r["error"],
                ]
            )
    bindings = [r["binding"] for r in rows if r["binding"] is not None]
    monotone = len(bindings) >= 2 and (
        all(a <= b for a, b in zip(bindings, bindings[1:]))
        or all(a >= b for a, b in zip(bindings, bindings[1:]))
    )
    estimate, uncertainty = limit_estimate(bindings, limit)
    results = {
        "axis": axis,
        "levels": [r["level"] for r in rows],
        "table": rows,
        "fitted_order": order,
        "extrapolated_binding": limit,
        "limit_estimate": estimate,
        "limit_uncertainty": uncertainty,
        "monotone": monotone,
        "table_file": str(csv_path),
    }
    tolerances = {
        "all_levels_completed": all(not r["error"] for r in rows),
        "all_levels_converged": all(r["converged"] for r in rows),
    }
    return results, tolerances


_RUNNERS = {
    "spectrum": _run_spectrum,
    "perturb": _run_perturb,
    "dynamics": _run_dynamics,
    "verify": _run_verify,
    "converge": _run_converge,
}


# ---------------------------------------------------------------------------
# orchestration
# ---------------------------------------------------------------------------


def run(request: TaskRequest) -> RunRecord:
    """Execute one task and persist its RunRecord as JSON.

    Exceptions inside the task runner are converted into a failing record
    with diagnostics; config/IO errors before dispatch propagate.
    """
    cfg = load_config(request.config_path)
    overrides = dict(request.overrides)
    overrides["task"] = request.task
    if request.output_path:
        overrides["output_path"] = request.output_path
    cfg = apply_overrides(cfg, overrides)

    start = time.perf_counter()
    try:
        results, tolerances = _RUNNERS[cfg.task](cfg)
    except Exception as exc:  # noqa: BLE001 - reported as a failing record
        results = {"error": f"{type(exc).__name__}: {exc}"}
        tolerances = {"task_completed": False}
    record = RunRecord(
        task=cfg.task,
        config=cfg.as_dict(),
        results=results,
        versions=_versions(),
        wall_time_s=time.perf_counter() - start,
        tolerances=tolerances,
    )
    out = Path(cfg.output_path)
    if out.parent and not out.parent.exists():
        out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(record.as_dict(), indent=2, sort_keys=True) + "\n")
    return record


def _parse_overrides(pairs) -> dict:
    overrides = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise ConfigError(f"--set expects key=value, got {pair!r}")
        key, _, value = pair.partition("=")
        overrides[key.strip()] = value.strip()
    return overrides


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="breit-lab",
        description="Two-fermion relativistic bound-state laboratory.",
    )
    parser.add_argument("task", choices=TASKS)
    parser.add_argument("--config", required=True, help="flat key=value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    parser.add_argument("--out", help="output JSON path (overrides output_path)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        request = TaskRequest(
            task=args.task,
            config_path=args.config,
            output_path=args.out,
            overrides=_parse_overrides(args.overrides),
        )
        record = run(request)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if record.task == "verify" and "reports" in record.results:
        header = f"{'check':<26} {'final residual':>15} {'order':>8}  status"
        print(header)
        print("-" * len(header))
        for rep in record.results["reports"]:
            resid = rep["residuals"][-1] if rep["residuals"] else float("nan")
            order = rep.get("fitted_order")
            order_s = "-" if order is None else f"{order:.3f}"
            status = "pass" if rep["passed"] else "FAIL"
            print(f"{rep['name']:<26} {resid:>15.3e} {order_s:>8}  {status}")
    for name, ok in record.tolerances.items():
        print(f"{name}: {'pass' if ok else 'FAIL'}")
    if "error" in record.results:
        print(f"error: {record.results['error']}", file=sys.stderr)
    print(f"wrote {record.config['output_path']}")
    return record.exit_status


if __name__ == "__main__":
    sys.exit(main())
