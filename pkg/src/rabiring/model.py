"""Parameter and state types, angle conventions and ring symmetries.

All quantities are dimensionless.  Energies are measured in units of the
cavity frequency ``omega`` and order parameters are the rescaled
real/imaginary parts of the coherent amplitude (quantum Rabi ring in the
classical-oscillator limit) or the normalized in-plane spin components
(LMG ring).
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError

#: Largest site length still classified as the normal / paramagnetic phase.
NORMAL_THRESHOLD = 1e-6
#: Tolerance used when deciding that two states coincide.
STATE_TOL = 1e-9


class Functional(str, enum.Enum):
    """Which mean-field energy functional to minimize."""

    QRR_CO = "qrr"
    LMGR = "lmgr"


class PhaseKind(str, enum.Enum):
    NORMAL = "normal"
    FERRO = "ferro"
    ANTIFERRO = "antiferro"
    CHIRAL = "chiral"


@dataclass(frozen=True)
class PhaseLabel:
    kind: PhaseKind
    chirality_sign: int = 0

    def __post_init__(self):
        if self.chirality_sign not in (-1, 0, 1):
            raise ValueError("chirality_sign must be -1, 0 or +1")
        if self.kind is PhaseKind.CHIRAL and self.chirality_sign == 0:
            raise ValueError("a chiral phase needs a nonzero chirality sign")

    def __str__(self):
        if self.kind is PhaseKind.CHIRAL:
            return f"chiral{'+' if self.chirality_sign > 0 else '-'}"
        return self.kind.value


def canonicalize_theta(theta: float) -> tuple[float, bool]:
    """Fold an arbitrary hopping phase into ``[0, pi]``.

    Returns ``(theta_folded, mirrored)``.  When ``mirrored`` is true the
    physical phase is ``-theta_folded`` (mod 2 pi) and solutions obtained at
    ``theta_folded`` map back through ``y -> -y``.
    """
    theta = float(theta)
    if not math.isfinite(theta):
        raise DomainError(f"theta must be finite, got {theta!r}")
    t = math.remainder(theta, 2.0 * math.pi)  # in [-pi, pi]
    if t == -math.pi:
        t = math.pi
    if t < 0.0:
        return -t, True
    return t, False


@dataclass(frozen=True)
class ModelParams:
    """Ring size, couplings and energy functional.

    ``theta`` is stored folded into ``[0, pi]``; ``mirrored`` records whether
    the physical phase is its negative (see :func:`canonicalize_theta`).
    """

    n_sites: int
    g1: float
    j_ratio: float = 0.05
    theta: float = 0.0
    functional: Functional = Functional.QRR_CO
    omega: float = 1.0
    mirrored: bool = False

    def __post_init__(self):
        n = int(self.n_sites)
        if n != self.n_sites or n < 3:
            raise DomainError(f"n_sites must be an integer >= 3, got {self.n_sites!r}")
        object.__setattr__(self, "n_sites", n)
        for name in ("g1", "j_ratio", "omega"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite")
            object.__setattr__(self, name, value)
        if self.g1 < 0:
            raise DomainError("g1 must be nonnegative")
        if self.j_ratio < 0:
            raise DomainError("j_ratio must be nonnegative")
        if self.omega <= 0:
            raise DomainError("omega must be positive")
        if self.j_ratio > 0.2:
            warnings.warn(
                f"j_ratio={self.j_ratio} is outside the small-hopping regime "
                "where the effective Hamiltonian holds",
                stacklevel=3,
            )
        folded, flip = canonicalize_theta(self.theta)
        object.__setattr__(self, "theta", folded)
        object.__setattr__(self, "mirrored", bool(self.mirrored) ^ flip)
        object.__setattr__(self, "functional", Functional(self.functional))

    @property
    def physical_theta(self) -> float:
        """The hopping phase actually entering the energy functionals."""
        return -self.theta if self.mirrored else self.theta

    def with_(self, **changes) -> "ModelParams":
        if "theta" in changes and "mirrored" not in changes:
            changes["mirrored"] = False
        return replace(self, **changes)


@dataclass(frozen=True, eq=False)
class MeanFieldState:
    """Per-site order parameters ``(x_n, y_n)``, indices taken modulo N."""

    x: np.ndarray
    y: np.ndarray = field(default=None)

    def __post_init__(self):
        x = np.array(self.x, dtype=float)
        y = np.zeros_like(x) if self.y is None else np.array(self.y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("x and y must be 1-d arrays of equal length")
        x += 0.0  # drop negative zeros
        y += 0.0
        x.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "y", y)

    @classmethod
    def zeros(cls, n: int) -> "MeanFieldState":
        return cls(np.zeros(n), np.zeros(n))

    @classmethod
    def from_vector(cls, v) -> "MeanFieldState":
        v = np.asarray(v, dtype=float)
        n = v.size // 2
        return cls(v[:n], v[n:])

    @property
    def n_sites(self) -> int:
        return self.x.size

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.y])

    @property
    def site_lengths(self) -> np.ndarray:
        return np.hypot(self.x, self.y)

    def rotated(self, k: int = 1) -> "MeanFieldState":
        """Cyclic relabelling ``n -> n + k``."""
        return MeanFieldState(np.roll(self.x, k), np.roll(self.y, k))

    def flipped(self) -> "MeanFieldState":
        return MeanFieldState(-self.x, -self.y)

    def mirrored(self) -> "MeanFieldState":
        return MeanFieldState(self.x, -self.y)

    def close_to(self, other: "MeanFieldState", tol: float = STATE_TOL) -> bool:
        return bool(
            np.max(np.abs(self.as_vector() - other.as_vector()), initial=0.0) <= tol
        )

    def __eq__(self, other):
        if not isinstance(other, MeanFieldState):
            return NotImplemented
        return np.array_equal(self.x, other.x) and np.array_equal(self.y, other.y)

    __hash__ = None

    def __repr__(self):
        return f"MeanFieldState(x={self.x.tolist()}, y={self.y.tolist()})"


def momentum_grid(n_sites: int) -> np.ndarray:
    """Allowed ring momenta ``2 pi k / N`` mapped into ``(-pi, pi]``."""
    k = np.arange(n_sites)
    q = 2.0 * np.pi * k / n_sites
    return np.where(q > np.pi, q - 2.0 * np.pi, q)


def unique_states(states, tol: float = STATE_TOL) -> list[MeanFieldState]:
    out: list[MeanFieldState] = []
    for s in states:
        if not any(s.close_to(t, tol) for t in out):
            out.append(s)
    return out


def symmetry_orbit(state: MeanFieldState, params: ModelParams | None = None,
                   tol: float = STATE_TOL) -> list[MeanFieldState]:
    """All images of ``state`` under global sign flip and cyclic rotation.

    ``params`` is accepted for interface symmetry; the group (Z2 x C_N) does
    not depend on the couplings.
    """
    images = []
    for k in range(state.n_sites):
        r = state.rotated(k)
        images.append(r)
        images.append(r.flipped())
    return unique_states(images, tol)


def canonical_representative(states, tol: float = STATE_TOL) -> MeanFieldState:
    """Pick the member maximizing ``x_1``, ties broken by ``y_1``, ``x_2``, ..."""
    candidates = list(states)
    if not candidates:
        raise ValueError("empty state collection")
    n = candidates[0].n_sites
    for i in range(n):
        for comp in ("x", "y"):
            vals = np.array([getattr(s, comp)[i] for s in candidates])
            best = vals.max()
            candidates = [s for s, v in zip(candidates, vals) if v >= best - tol]
            if len(candidates) == 1:
                return candidates[0]
    return candidates[0]
