"""First-order-in-T closed forms for a coherent H mode meeting an empty V mode.

Valid while |alpha|^2 T is small; predictions refuse to run above ``MAX_STRENGTH``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

MAX_STRENGTH = 0.2


class OutOfRegimeError(ValueError):
    pass


@dataclass(frozen=True)
class PerturbativePrediction:
    mean_a: complex
    mean_a2: complex
    mean_n: float
    mean_a2dag_a2: float
    # var X(phi) = var_constant - var_amplitude * cos 2(var_phase - phi)
    var_constant: float
    var_amplitude: float
    var_phase: float

    def var_X(self, phi: float) -> float:
        return self.var_constant - self.var_amplitude * math.cos(2 * (self.var_phase - phi))

    @property
    def g2(self) -> float:
        if self.mean_n == 0:
            raise ZeroDivisionError("g2 undefined for an empty mode")
        return self.mean_a2dag_a2 / self.mean_n**2

    def variance_coefficients(self) -> tuple[float, float, float]:
        return (self.var_constant, self.var_amplitude, self.var_phase)


def _arg(alpha: complex) -> float:
    return 0.0 if alpha == 0 else cmath.phase(alpha)


def _check(alpha: complex, T: float) -> float:
    if not T >= 0:
        raise OutOfRegimeError(f"interaction time must be non-negative, got {T}")
    strength = abs(alpha) ** 2 * T
    if strength > MAX_STRENGTH:
        raise OutOfRegimeError(
            f"|alpha|^2 T = {strength:.4g} exceeds {MAX_STRENGTH}: first-order formulas invalid"
        )
    return strength


def predict_h_mode(alpha: complex, T: float) -> PerturbativePrediction:
    x = _check(alpha, T)
    alpha = complex(alpha)
    r2 = abs(alpha) ** 2
    return PerturbativePrediction(
        mean_a=alpha - x * alpha / 2,
        mean_a2=alpha**2 - x * alpha**2 - alpha**2 * T / 2,
        mean_n=r2 - r2 * x,
        mean_a2dag_a2=r2**2 - 2 * r2**2 * x - r2**2 * T,
        var_constant=1.0,
        var_amplitude=x,
        var_phase=_arg(alpha),
    )


def predict_v_mode(alpha: complex, T: float) -> PerturbativePrediction:
    x = _check(alpha, T)
    alpha = complex(alpha)
    pairs = x * x / 8
    return PerturbativePrediction(
        mean_a=0j,
        mean_a2=-(alpha**2) * T / 2,
        mean_n=pairs,
        mean_a2dag_a2=pairs,
        var_constant=1.0,
        var_amplitude=x,
        var_phase=_arg(alpha),
    )


def v_mode_g2(alpha: complex, T: float) -> float:
    """8 / (|alpha|^2 T)^2."""
    x = _check(alpha, T)
    if x == 0:
        raise ZeroDivisionError("g2 of the V mode is undefined at T = 0")
    return 8 / (x * x)
