"""Command-line front end: ``pairgen {evolve,sweep,project,estimate}``.

Exit codes: 0 success, 1 computation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import cmath
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import lab, oracle
from .fock import (
    DensityMatrix,
    FockLattice,
    StateVector,
    coherent_vacuum_state,
    fock_state,
    minimum_coherent_cutoff,
)
from .lindblad import (
    EvolveConfig,
    IntegratorError,
    evolve,
    no_jump_evolve,
)
from .observables import ModeMoments, ellipse_from_moments, jump_rate_expectation, mode_moments
from .projection import (
    AbsorptionStrength,
    absorbable_state,
    absorption_probability,
    project_no_absorption,
    unabsorbable_state,
)


class UsageError(Exception):
    pass


def fmt(x: float) -> str:
    return format(float(x), ".16e")


def to_json(value, indent: int = 2, _level: int = 0) -> str:
    """Deterministic JSON with fixed 17-significant-digit floats; NaN/inf become null."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if value is None:
        return "null"
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return fmt(value) if math.isfinite(value) else "null"
    if isinstance(value, complex):
        return to_json([value.real, value.imag], indent, _level)
    if isinstance(value, str):
        return json.dumps(value, ensure_ascii=False)
    if isinstance(value, dict):
        if not value:
            return "{}"
        items = [f"{pad}{to_json(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in value.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple)) for v in value):
            return "[" + ", ".join(to_json(v, indent, _level + 1) for v in value) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in value]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialize {type(value).__name__}")


def parse_alpha(text: str) -> complex:
    parts = text.split(",")
    if len(parts) != 2:
        raise UsageError(f"--alpha expects 're,im', got {text!r}")
    try:
        re_, im = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--alpha expects two numbers, got {text!r}") from None
    return complex(re_, im)


def parse_alpha_polar(text: str) -> complex:
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"--alpha-polar expects 'mod:arg', got {text!r}")
    try:
        mod, arg = (float(p) for p in parts)
    except ValueError:
        raise UsageError(f"--alpha-polar expects two numbers, got {text!r}") from None
    if mod < 0:
        raise UsageError("--alpha-polar modulus must be non-negative")
    return cmath.rect(mod, arg)


def parse_grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"--time-grid expects start:stop:count, got {text!r}")
    try:
        start, stop = float(parts[0]), float(parts[1])
        count = int(parts[2])
    except ValueError:
        raise UsageError(f"--time-grid malformed: {text!r}") from None
    if not (math.isfinite(start) and math.isfinite(stop)):
        raise UsageError("--time-grid bounds must be finite")
    if start < 0:
        raise UsageError("--time-grid start must be non-negative")
    if stop < start:
        raise UsageError("--time-grid: grid stop < start")
    if count < 1:
        raise UsageError("--time-grid count must be at least 1")
    if count == 1:
        return [start]
    return [float(t) for t in np.linspace(start, stop, count)]


def _alpha_from(args) -> complex:
    if args.alpha_polar is not None:
        return parse_alpha_polar(args.alpha_polar)
    if args.alpha is not None:
        return parse_alpha(args.alpha)
    raise UsageError("one of --alpha or --alpha-polar is required")


def _lattice_for(alpha: complex, cutoff: int | None) -> tuple[FockLattice, bool]:
    need = max(2, minimum_coherent_cutoff(alpha))
    if cutoff is None:
        return FockLattice(need), True
    if cutoff < 2:
        raise UsageError("--cutoff must be at least 2")
    if cutoff < need:
        print(
            f"warning: --cutoff {cutoff} is below the adequate cutoff {need} for |alpha| = {abs(alpha):.6g}",
            file=sys.stderr,
        )
        return FockLattice(cutoff), False
    return FockLattice(cutoff), True


def _initial_state(alpha: complex, cutoff: int | None) -> DensityMatrix:
    lattice, adequate = _lattice_for(alpha, cutoff)
    return DensityMatrix.from_state(coherent_vacuum_state(lattice, alpha, strict=adequate))


def _mode_report(mom: ModeMoments) -> dict:
    phi_min, vmin, vmax = mom.var_extrema()
    return {
        "mean_n": mom.n,
        "mean_a": mom.a,
        "mean_a2": mom.a2,
        "mean_a2dag_a2": mom.a2dag_a2,
        "g2": mom.a2dag_a2 / mom.n**2 if mom.n > 1e-30 else None,
        "varX_min": vmin,
        "varX_max": vmax,
        "phi_min": phi_min,
        "ellipse": ellipse_from_moments(mom).to_dict(),
    }


def _write(path: Path, text: str):
    path.write_text(text if text.endswith("\n") else text + "\n", encoding="utf-8")


def run_evolve(args) -> int:
    alpha = _alpha_from(args)
    if not math.isfinite(args.time) or args.time < 0:
        raise UsageError("--time: time must be non-negative")
    if args.record_every is not None and not args.record_every > 0:
        raise UsageError("--record-every must be positive")
    if not 0 < args.tol <= 1e-3:
        raise UsageError("--tol must lie in (0, 1e-3]")
    out = Path(args.out)
    if out.parent and not out.parent.exists():
        raise UsageError(f"--out: directory {out.parent} does not exist")
    record_every = args.record_every
    if record_every is None and args.time > 0:
        record_every = args.time / 100
    rho0 = _initial_state(alpha, args.cutoff)
    config = EvolveConfig(total_time=args.time, tol_step=args.tol, record_every=record_every)
    try:
        result = evolve(rho0, config)
    except IntegratorError as exc:
        print(f"error: integrator failure: {exc}", file=sys.stderr)
        return 1
    rho = result.state
    moments = {m: mode_moments(rho, m) for m in ("H", "V")}
    report = {
        "alpha": alpha,
        "time": args.time,
        "cutoff": rho.lattice.cutoff,
        "tol_step": args.tol,
        "steps": result.steps,
        "diagnostics": {
            "max_trace_drift": result.max_trace_drift,
            "max_hermiticity_drift": result.max_hermiticity_drift,
            "min_eigenvalue": result.min_eigenvalue,
        },
        "jump_rate": jump_rate_expectation(rho),
        "modes": {m: _mode_report(mom) for m, mom in moments.items()},
    }
    polyline = io.StringIO()
    writer = csv.writer(polyline, lineterminator="\n")
    writer.writerow(["mode", "x", "y"])
    for m, mom in moments.items():
        for x, y in ellipse_from_moments(mom).polyline(64):
            writer.writerow([m, fmt(x), fmt(y)])
    _write(out.with_name(out.name + ".csv"), result.snapshot_csv())
    _write(out.with_name(out.name + ".json"), to_json(report))
    _write(out.with_name(out.name + ".ellipse.csv"), polyline.getvalue())
    print(f"wrote {out}.csv, {out}.json, {out}.ellipse.csv", file=sys.stderr)
    return 0


SWEEP_MOMENTS = (
    ("n_H", "H", "n"),
    ("a_H", "H", "a"),
    ("a2_H", "H", "a2"),
    ("a2dag_a2_H", "H", "a2dag_a2"),
    ("n_V", "V", "n"),
    ("a2_V", "V", "a2"),
    ("a2dag_a2_V", "V", "a2dag_a2"),
)


def _sweep_header(with_oracle: bool) -> list[str]:
    cols = ["T", "status"]
    for name, _, attr in SWEEP_MOMENTS:
        cols += [f"{name}_re", f"{name}_im"] if attr in ("a", "a2") else [name]
    cols += ["g2_H", "g2_V", "varX_H_min", "varX_H_max", "varX_V_min", "varX_V_max", "trace_err"]
    if with_oracle:
        oracle_cols = [c for c in cols[2:] if not c.startswith("trace")]
        cols += [f"oracle_{c}" for c in oracle_cols]
        cols += [f"reldev_{c}" for c in oracle_cols]
    return cols


def _sweep_values(mh: ModeMoments | oracle.PerturbativePrediction, mv) -> list[float]:
    def get(m, attr):
        if isinstance(m, ModeMoments):
            return getattr(m, attr)
        return {"n": m.mean_n, "a": m.mean_a, "a2": m.mean_a2, "a2dag_a2": m.mean_a2dag_a2}[attr]

    values: list[float] = []
    for _, mode, attr in SWEEP_MOMENTS:
        v = get(mh if mode == "H" else mv, attr)
        values += [complex(v).real, complex(v).imag] if attr in ("a", "a2") else [float(v)]

    def g2(m):
        n = get(m, "n")
        return get(m, "a2dag_a2") / n**2 if n > 1e-30 else math.nan

    def var_range(m):
        if isinstance(m, ModeMoments):
            return m.var_extrema()[1:]
        return (m.var_constant - m.var_amplitude, m.var_constant + m.var_amplitude)

    values += [g2(mh), g2(mv), *var_range(mh), *var_range(mv)]
    return values


def _sweep_point(alpha: complex, T: float, cutoff: int | None, tol: float, with_oracle: bool) -> list[str]:
    width = len(_sweep_header(with_oracle)) - 2
    rho0 = _initial_state(alpha, cutoff)
    try:
        rho = evolve(rho0, EvolveConfig(total_time=T, tol_step=tol)).state
    except IntegratorError:
        return [fmt(T), "failed"] + ["nan"] * width
    mh, mv = mode_moments(rho, "H"), mode_moments(rho, "V")
    numeric = _sweep_values(mh, mv)
    row = numeric + [abs(complex(np.trace(rho.entries)) - 1)]
    if with_oracle:
        predicted = _sweep_values(oracle.predict_h_mode(alpha, T), oracle.predict_v_mode(alpha, T))
        dev = []
        for got, want in zip(numeric, predicted):
            if math.isnan(got) or math.isnan(want):
                dev.append(math.nan)
            elif want == 0:
                dev.append(abs(got) if got != 0 else 0.0)
            else:
                dev.append(abs(got - want) / abs(want))
        row += predicted + dev
    return [fmt(T), "ok"] + [fmt(v) for v in row]


def sweep_threads() -> int:
    raw = os.environ.get("PAIRGEN_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise UsageError(f"PAIRGEN_THREADS must be an integer, got {raw!r}") from None
        if n < 1:
            raise UsageError("PAIRGEN_THREADS must be at least 1")
        return n
    return os.cpu_count() or 1


def run_sweep(args) -> int:
    alpha = _alpha_from(args)
    if args.time_grid is None:
        raise UsageError("--time-grid is required")
    grid = parse_grid(args.time_grid)
    if not 0 < args.tol <= 1e-3:
        raise UsageError("--tol must lie in (0, 1e-3]")
    if args.with_oracle:
        worst = abs(alpha) ** 2 * max(grid)
        if worst > oracle.MAX_STRENGTH:
            raise UsageError(
                f"--time-grid: |alpha|^2 T reaches {worst:.4g} > {oracle.MAX_STRENGTH}, outside the oracle regime"
            )
    threads = sweep_threads()
    _lattice_for(alpha, args.cutoff)  # validate the cutoff before any work
    with ThreadPoolExecutor(max_workers=min(threads, len(grid))) as pool:
        rows = list(
            pool.map(lambda T: _sweep_point(alpha, T, args.cutoff, args.tol, args.with_oracle), grid)
        )
    rows.sort(key=lambda r: float(r[0]))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(_sweep_header(args.with_oracle))
    writer.writerows(rows)
    if args.out in (None, "-"):
        sys.stdout.write(buf.getvalue())
    else:
        _write(Path(args.out), buf.getvalue())
    failed = sum(r[1] == "failed" for r in rows)
    if failed:
        print(f"error: {failed} sweep point(s) failed", file=sys.stderr)
        return 1
    return 0


NAMED_STATES = {"psi_a": absorbable_state, "psi_u": unabsorbable_state}


def _project_input(args, lattice: FockLattice) -> StateVector:
    if args.state in NAMED_STATES:
        return NAMED_STATES[args.state](lattice)
    try:
        n_h, n_v = (int(p) for p in args.state.split(","))
    except ValueError:
        raise UsageError(f"--state expects 'h,v', psi_a or psi_u, got {args.state!r}") from None
    try:
        return fock_state(lattice, n_h, n_v)
    except IndexError as exc:
        raise UsageError(f"--state: {exc}") from None


def _state_summary(psi: StateVector) -> dict:
    sector = {}
    for n_h, n_v in ((2, 0), (1, 1), (0, 2)):
        sector[f"{n_h},{n_v}"] = psi.amplitude(n_h, n_v)
    return {"norm2": psi.norm2(), "two_photon_amplitudes": sector, "state": psi.to_dict()}


def run_project(args) -> int:
    if args.cutoff < 2:
        raise UsageError("--cutoff must be at least 2")
    if (args.epsilon is None) == (args.tau is None):
        raise UsageError("give exactly one of --epsilon or --tau")
    if args.epsilon is not None:
        if not 0 <= args.epsilon <= 1:
            raise UsageError("--epsilon must lie in [0, 1]")
        strength = AbsorptionStrength(args.epsilon)
    else:
        if not args.tau >= 0:
            raise UsageError("--tau must be non-negative")
        strength = AbsorptionStrength.from_time(args.tau)
    lattice = FockLattice(args.cutoff)
    psi = _project_input(args, lattice)
    out = project_no_absorption(psi, strength)
    report = {
        "epsilon": strength.epsilon,
        "absorption_probability": absorption_probability(psi, strength),
        "input": _state_summary(psi),
        "output": _state_summary(out),
    }
    if args.tau is not None:
        dyn = no_jump_evolve(psi, args.tau)
        report["no_jump"] = _state_summary(dyn)
        report["max_deviation"] = float(np.max(np.abs(dyn.amplitudes - out.amplitudes)))
    sys.stdout.write(to_json(report) + "\n")
    return 0


def run_estimate(args) -> int:
    if (args.preset is None) == (args.scenario is None):
        raise UsageError("give exactly one of --preset or --scenario")
    if not args.threshold > 0:
        raise UsageError("--threshold must be positive")
    try:
        if args.preset is not None:
            scenario = lab.preset(args.preset)
            name = args.preset
        else:
            scenario = lab.load_scenario(args.scenario)
            name = str(args.scenario)
    except lab.ScenarioError as exc:
        raise UsageError(f"{exc} (key: {exc.key})") from None
    except OSError as exc:
        raise UsageError(f"--scenario: {exc}") from None
    report = lab.discrimination_ratio(scenario, threshold=args.threshold)
    units = lab.normalized_units(scenario)
    payload = {
        "scenario": name,
        **report.to_dict(),
        "photon_energy": scenario.energy,
        "normalized": {
            "transit_time": units.transit_time,
            "photon_number": units.photon_number,
            "interaction_time": units.interaction_time,
        },
    }
    sys.stdout.write(to_json(payload) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pairgen", description="Polarization-selective two-photon absorption simulator"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_alpha(p):
        g = p.add_mutually_exclusive_group()
        g.add_argument("--alpha", help="coherent amplitude as re,im")
        g.add_argument("--alpha-polar", help="coherent amplitude as mod:arg (radians)")
        p.add_argument("--cutoff", type=int, default=None, help="photons per mode (default: auto)")
        p.add_argument("--tol", type=float, default=1e-9, help="per-step relative tolerance")

    p = sub.add_parser("evolve", help="integrate the master equation from |alpha, 0>")
    add_alpha(p)
    p.add_argument("--time", type=float, required=True, help="normalized interaction time T")
    p.add_argument("--record-every", type=float, default=None)
    p.add_argument("--out", required=True, help="output prefix (writes .csv, .json, .ellipse.csv)")
    p.set_defaults(func=run_evolve)

    p = sub.add_parser("sweep", help="observables on a grid of interaction times")
    add_alpha(p)
    p.add_argument("--time-grid", help="start:stop:count")
    p.add_argument("--with-oracle", action="store_true")
    p.add_argument("--out", default=None, help="CSV path (default: stdout)")
    p.set_defaults(func=run_sweep)

    p = sub.add_parser("project", help="conditional no-absorption projection of a two-photon state")
    p.add_argument("--state", default="2,0", help="'h,v', psi_a or psi_u")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--tau", type=float, default=None, help="use epsilon = 1 - exp(-tau) and compare dynamics")
    p.add_argument("--cutoff", type=int, default=2)
    p.set_defaults(func=run_project)

    p = sub.add_parser("estimate", help="laboratory pair-rate estimate")
    p.add_argument("--preset", help=", ".join(sorted(lab.PRESETS)))
    p.add_argument("--scenario", type=Path)
    p.add_argument("--threshold", type=float, default=lab.EXTINCTION_THRESHOLD)
    p.set_defaults(func=run_estimate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.exit(2, f"pairgen {args.command}: error: {exc}\n")


if __name__ == "__main__":
    raise SystemExit(main())
