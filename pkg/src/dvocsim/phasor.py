"""Stationary-frame (alpha/beta) phasor arithmetic and impedance helpers.

A balanced three-phase signal is represented by its two-axis stationary-frame
components, identified with the complex number ``alpha + j*beta``.  Complex
multiplication is then a rotation-scaling of the 2-vector, which is how
impedances and admittances act on voltage and current phasors throughout the
package.  Impedances/admittances are plain Python ``complex`` values (ohm / S).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

SQRT3_OVER_2 = math.sqrt(3.0) / 2.0


class ZeroImpedanceError(ValueError):
    """Raised when a zero impedance would have to be inverted."""


class ThreePhase(NamedTuple):
    """Instantaneous three-phase values (same unit as the source phasor)."""

    a: float
    b: float
    c: float


@dataclass(frozen=True)
class Phasor:
    """An alpha/beta-frame signal value, identified with ``alpha + j*beta``."""

    alpha: float
    beta: float

    @classmethod
    def from_complex(cls, z: complex) -> "Phasor":
        return cls(z.real, z.imag)

    @property
    def as_complex(self) -> complex:
        return complex(self.alpha, self.beta)

    def norm(self) -> float:
        return math.hypot(self.alpha, self.beta)


def complex_mul(p: Phasor, z: complex) -> Phasor:
    """Multiply a phasor by a complex gain (rotation-scaling of the 2-vector)."""
    return Phasor(p.alpha * z.real - p.beta * z.imag,
                  p.alpha * z.imag + p.beta * z.real)


def admittance(z: complex, label: str = "impedance") -> complex:
    """Complex reciprocal of an impedance.

    ``label`` names the branch in the error raised for a zero impedance.
    """
    if z == 0:
        raise ZeroImpedanceError(f"{label} is zero and cannot be inverted")
    return 1.0 / z


def branch_impedance_at(r_f: float, l_f: float, r_v: float, x_v: float,
                        omega: float) -> complex:
    """Quasi-static series branch impedance (line + virtual) at frequency omega.

    Z = (r_f + r_v) + j*(omega*l_f + x_v), with r in ohm, l_f in H and the
    virtual reactance x_v already in ohm.
    """
    if omega <= 0:
        raise ValueError(f"omega must be > 0, got {omega}")
    return complex(r_f + r_v, omega * l_f + x_v)


def inv_clarke(p: Phasor) -> ThreePhase:
    """Amplitude-invariant inverse Clarke transform (alpha equals phase-a)."""
    a = p.alpha
    b = -0.5 * p.alpha + SQRT3_OVER_2 * p.beta
    c = -0.5 * p.alpha - SQRT3_OVER_2 * p.beta
    return ThreePhase(a, b, c)
