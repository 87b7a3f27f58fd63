"""Master-equation and no-jump integration for two-photon absorption.

Normalized time: d rho/d tau = 2 O rho O^dag - O^dag O rho - rho O^dag O.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable

import numpy as np
import scipy.sparse as sp

from .fock import (
    DensityMatrix,
    DimensionError,
    FockLattice,
    StateVector,
    _jump_matrix,
)
from .observables import G2_FLOOR, mode_moments_array

MIN_STEP = 1e-12
EIGEN_CHECK_EVERY = 10

SNAPSHOT_COLUMNS = (
    "tau",
    "n_H",
    "n_V",
    "g2_H",
    "g2_V",
    "varX_H_min",
    "varX_H_max",
    "varX_V_min",
    "varX_V_max",
    "trace_err",
)


class IntegratorError(RuntimeError):
    pass


class StiffnessError(IntegratorError):
    def __init__(self, message: str, worst_error: float):
        super().__init__(message)
        self.worst_error = worst_error


class IntegratorFailure(IntegratorError):
    pass


@dataclass(frozen=True)
class EvolveConfig:
    total_time: float
    step_init: float | None = None
    tol_step: float = 1e-9
    record_every: float | None = None
    keep_states: bool = False

    def __post_init__(self):
        if not self.total_time >= 0:
            raise ValueError("total_time must be non-negative")
        if self.step_init is not None and not self.step_init > 0:
            raise ValueError("step_init must be positive")
        if not 0 < self.tol_step <= 1e-3:
            raise ValueError("tol_step must lie in (0, 1e-3]")
        if self.record_every is not None and not self.record_every > 0:
            raise ValueError("record_every must be positive")


def default_step(lattice: FockLattice) -> float:
    return min(1e-3, 0.1 / (lattice.cutoff**2 + 1))


@dataclass(frozen=True)
class _Operators:
    o: sp.csr_matrix
    o_conj: sp.csr_matrix
    odo: sp.csr_matrix


@lru_cache(maxsize=None)
def _operators(cutoff: int) -> _Operators:
    o = _jump_matrix(cutoff)
    return _Operators(o=o, o_conj=sp.csr_matrix(o.conj()), odo=sp.csr_matrix(o.conj().T @ o))


def _rhs(ops: _Operators, rho: np.ndarray) -> np.ndarray:
    o_rho = ops.o @ rho
    # (O rho) O^dag == (O* (O rho)^T)^T, keeping the sparse factor on the left
    jump = (ops.o_conj @ o_rho.T).T
    return 2 * jump - ops.odo @ rho - (ops.odo.T @ rho.T).T


def lindblad_rhs(rho: DensityMatrix, lattice: FockLattice | None = None) -> np.ndarray:
    """Right-hand side of the master equation for rho.

    Passing ``lattice`` asserts which lattice the caller's operators were built for.
    """
    if lattice is not None and lattice != rho.lattice:
        raise DimensionError(
            f"rho has cutoff {rho.lattice.cutoff}, operators built for cutoff {lattice.cutoff}"
        )
    rho.lattice.require_two_photon()
    return _rhs(_operators(rho.lattice.cutoff), rho.entries)


def _rk4(f: Callable[[np.ndarray], np.ndarray], y: np.ndarray, h: float, k1=None):
    if k1 is None:
        k1 = f(y)
    k2 = f(y + 0.5 * h * k1)
    k3 = f(y + 0.5 * h * k2)
    k4 = f(y + h * k3)
    return y + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t_end: float,
    h0: float,
    tol: float,
    stops: tuple[float, ...] = (),
    on_accept: Callable[[float, np.ndarray], None] | None = None,
    on_stop: Callable[[float, np.ndarray], None] | None = None,
) -> np.ndarray:
    """Adaptive classical RK4 with step doubling.

    One step of size h is compared with two of size h/2; the difference/15 is the
    local error estimate, accepted when below ``tol * max(1, |y|)`` (max norm).
    The accepted value is the Richardson-extrapolated one. The integrator lands
    exactly on every time in ``stops`` and calls ``on_stop`` there.
    """
    y = np.array(y0, dtype=complex)
    t = 0.0
    h = h0
    targets = sorted({s for s in stops if 0 < s < t_end} | {t_end}) if t_end > 0 else []
    worst = 0.0
    for target in targets:
        while t < target:
            last = target - t <= h * (1 + 1e-12)
            step = target - t if last else h
            if step < MIN_STEP and not last:
                raise StiffnessError(
                    f"step size {step:.3e} below {MIN_STEP:g} at tau={t:.6g}; "
                    f"worst local error {worst:.3e}",
                    worst,
                )
            k1 = f(y)
            full = _rk4(f, y, step, k1)
            half = _rk4(f, y, step / 2, k1)
            double = _rk4(f, half, step / 2)
            diff = double - full
            scale = max(1.0, float(np.max(np.abs(double))))
            err = float(np.max(np.abs(diff))) / 15.0 / scale
            if not np.isfinite(err):
                raise IntegratorFailure(f"non-finite state at tau={t:.6g}")
            if err <= tol:
                y = double + diff / 15.0
                t = target if last else t + step
                if on_accept is not None:
                    on_accept(t, y)
                grow = 2.0 if err == 0 else min(2.0, 0.9 * (tol / err) ** 0.2)
                if not last:
                    h = step * max(1.0, grow)
            else:
                worst = max(worst, err)
                h = step * max(0.2, 0.9 * (tol / err) ** 0.2)
                if h < MIN_STEP:
                    raise StiffnessError(
                        f"required step {h:.3e} below {MIN_STEP:g} at tau={t:.6g}; "
                        f"worst local error {worst:.3e}",
                        worst,
                    )
        if on_stop is not None:
            on_stop(t, y)
    return y


@dataclass(frozen=True)
class Snapshot:
    tau: float
    n_H: float
    n_V: float
    g2_H: float
    g2_V: float
    varX_H_min: float
    varX_H_max: float
    varX_V_min: float
    varX_V_max: float
    trace_err: float
    parity_H: float
    parity_V: float
    jump_rate: float  # <O^dag O>
    hermiticity_err: float
    min_eigenvalue: float | None = None

    @property
    def n_total(self) -> float:
        return self.n_H + self.n_V

    def row(self) -> list[float]:
        return [getattr(self, c) for c in SNAPSHOT_COLUMNS]


def _g2(mom) -> float:
    return mom.a2dag_a2 / mom.n**2 if mom.n > G2_FLOOR else math.nan


def take_snapshot(lattice: FockLattice, tau: float, rho: np.ndarray, eigen: bool = False) -> Snapshot:
    mh = mode_moments_array(lattice, rho, "H")
    mv = mode_moments_array(lattice, rho, "V")
    _, h_min, h_max = mh.var_extrema()
    _, v_min, v_max = mv.var_extrema()
    n_h, n_v = lattice.occupations()
    diag = np.real(np.diagonal(rho))
    jump_rate = float(np.real(_trace_odo(_operators(lattice.cutoff), rho)))
    herm = rho - rho.conj().T
    min_eig = None
    if eigen:
        min_eig = float(np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0])
    return Snapshot(
        tau=tau,
        n_H=mh.n,
        n_V=mv.n,
        g2_H=_g2(mh),
        g2_V=_g2(mv),
        varX_H_min=h_min,
        varX_H_max=h_max,
        varX_V_min=v_min,
        varX_V_max=v_max,
        trace_err=float(abs(np.trace(rho) - 1)),
        parity_H=float(np.dot((-1.0) ** n_h, diag)),
        parity_V=float(np.dot((-1.0) ** n_v, diag)),
        jump_rate=jump_rate,
        hermiticity_err=float(np.max(np.abs(herm))) if herm.size else 0.0,
        min_eigenvalue=min_eig,
    )


def _trace_odo(ops: _Operators, rho: np.ndarray) -> complex:
    coo = ops.odo.tocoo()
    return np.sum(coo.data * rho[coo.col, coo.row])


@dataclass
class Evolution:
    state: DensityMatrix
    snapshots: list[Snapshot] = field(default_factory=list)
    states: list[tuple[float, DensityMatrix]] = field(default_factory=list)
    max_trace_drift: float = 0.0
    max_hermiticity_drift: float = 0.0
    min_eigenvalue: float = math.inf
    steps: int = 0

    def snapshot_csv(self) -> str:
        return snapshots_to_csv(self.snapshots)


def _record_times(config: EvolveConfig) -> list[float]:
    if config.record_every is None or config.total_time == 0:
        return []
    count = int(math.floor(config.total_time / config.record_every + 1e-9))
    times = [k * config.record_every for k in range(1, count + 1)]
    return [t for t in times if t < config.total_time * (1 - 1e-12)]


def evolve(rho0: DensityMatrix, config: EvolveConfig) -> Evolution:
    """Integrate the master equation from rho0 to config.total_time."""
    lattice = rho0.lattice
    lattice.require_two_photon()
    if problems := rho0.violations():
        raise ValueError("invalid initial state: " + "; ".join(problems))
    ops = _operators(lattice.cutoff)
    result = Evolution(state=rho0)
    h0 = config.step_init if config.step_init is not None else default_step(lattice)

    def record(tau: float, rho: np.ndarray, final: bool = False):
        eigen = final or len(result.snapshots) % EIGEN_CHECK_EVERY == 0
        snap = take_snapshot(lattice, tau, rho, eigen=eigen)
        if snap.min_eigenvalue is not None:
            result.min_eigenvalue = min(result.min_eigenvalue, snap.min_eigenvalue)
            if snap.min_eigenvalue < -DensityMatrix.POSITIVITY_TOL:
                raise IntegratorFailure(
                    f"negative eigenvalue {snap.min_eigenvalue:.3e} at tau={tau:.6g}"
                )
        result.snapshots.append(snap)
        if config.keep_states:
            result.states.append((tau, DensityMatrix(lattice, rho, validate=False)))

    def check(tau: float, rho: np.ndarray):
        result.steps += 1
        trace = float(abs(np.trace(rho) - 1))
        herm = float(np.max(np.abs(rho - rho.conj().T)))
        result.max_trace_drift = max(result.max_trace_drift, trace)
        result.max_hermiticity_drift = max(result.max_hermiticity_drift, herm)
        if trace > DensityMatrix.TRACE_TOL or herm > DensityMatrix.HERMITIAN_TOL:
            raise IntegratorFailure(
                f"invariant violated at tau={tau:.6g}: trace drift {trace:.3e}, "
                f"Hermiticity drift {herm:.3e}"
            )

    rho_init = np.array(rho0.entries)
    result.max_trace_drift = float(abs(np.trace(rho_init) - 1))
    result.max_hermiticity_drift = rho0.hermiticity_error()
    stops = _record_times(config)
    stop_set = set(stops)

    def on_stop(tau: float, rho: np.ndarray):
        if tau in stop_set:
            record(tau, rho)

    record(0.0, rho_init, final=config.total_time == 0)
    final = integrate(
        lambda r: _rhs(ops, r),
        rho_init,
        config.total_time,
        h0,
        config.tol_step,
        stops=tuple(stops),
        on_accept=check,
        on_stop=on_stop,
    )
    if config.total_time > 0:
        record(config.total_time, final, final=True)
    result.state = DensityMatrix(lattice, final, validate=False)
    return result


def no_jump_evolve(psi0: StateVector, tau: float, tol_step: float = 1e-12) -> StateVector:
    """exp(-O^dag O tau)|psi0>, integrated with the same adaptive RK4 controller."""
    if not tau >= 0:
        raise ValueError("tau must be non-negative")
    lattice = psi0.lattice
    lattice.require_two_photon()
    odo = _operators(lattice.cutoff).odo
    final = integrate(
        lambda psi: -(odo @ psi),
        np.array(psi0.amplitudes),
        float(tau),
        default_step(lattice),
        tol_step,
    )
    return StateVector(lattice, final)


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def snapshots_to_csv(snapshots: list[Snapshot]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SNAPSHOT_COLUMNS)
    for snap in snapshots:
        writer.writerow([_fmt(v) for v in snap.row()])
    return buf.getvalue()
