"""Core state types for the two-slit eraser model.

The model lives on a one-dimensional detection coordinate ``x`` (the screen)
and a two-level which-way tag (a spin-1/2 carried by the particle).  Slit
wavefunctions are closed-form envelopes times a plane-wave phase; the slit-b
amplitude differs from slit-a by a linear phase gradient, which is what tilts
the two paths against each other and produces fringes when they interfere.

Two composite states are used throughout:

* the *untagged* superposition ``alpha*psi_a + beta*psi_b`` — its position
  density carries interference cross terms (fringes);
* the *tagged* state ``alpha*psi_a|up> + beta*psi_b|down>`` — the orthogonal
  spin labels kill the cross terms, so its position density is fringeless.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import ConfigurationError, ValidationError

_NORM_TOL = 1e-12

ENVELOPE_FAMILIES = ("lorentzian", "gaussian")


@dataclass(frozen=True)
class Grid:
    """Uniform grid on ``[x_min, x_max]`` with ``n_points`` points.

    All quadrature in this package is composite trapezoid on such a grid.
    """

    x_min: float
    x_max: float
    n_points: int

    def __post_init__(self):
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max)):
            raise ConfigurationError("grid bounds must be finite")
        if self.x_max <= self.x_min:
            raise ConfigurationError(
                f"grid needs x_max > x_min, got [{self.x_min}, {self.x_max}]")
        if self.n_points < 2:
            raise ConfigurationError(
                f"grid needs at least 2 points, got {self.n_points}")

    @cached_property
    def points(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.n_points)

    @cached_property
    def spacing(self) -> float:
        return (self.x_max - self.x_min) / (self.n_points - 1)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    @classmethod
    def default(cls) -> "Grid":
        """Screen window used by the reference figures: [-20, 20], 4001 points."""
        return cls(-20.0, 20.0, 4001)

    @classmethod
    def wide(cls) -> "Grid":
        """Wide window for high-accuracy quadrature of slowly decaying tails."""
        return cls(-2000.0, 2000.0, 400001)


@dataclass(frozen=True)
class SlitAmplitude:
    """Closed-form single-slit wavefunction on the screen coordinate.

    The amplitude is ``envelope(x) * exp(-i*(k*x + phase_gradient*x - omega*t))``.
    The default envelope is the unit-width Lorentzian ``1/sqrt(pi*(1+x^2))``,
    normalized over the whole real line; a Gaussian family is available for
    tests where fast-decaying tails are convenient.  ``phase_gradient`` is the
    extra linear phase that distinguishes the second slit from the first: it
    controls the fringe spacing of the interference pattern.

    Parameters
    ----------
    envelope : {"lorentzian", "gaussian"}
    width : float
        Envelope scale parameter (Lorentzian half-width or Gaussian sigma).
    k, omega, t : float
        Plane-wave parameters.  They only contribute phases, so every density
        built from a single amplitude is independent of them.
    phase_gradient : float
        Slope of the extra linear phase (0 for slit a, pi for slit b).
    """

    envelope: str = "lorentzian"
    width: float = 1.0
    k: float = 1.0
    phase_gradient: float = 0.0
    omega: float = 0.0
    t: float = 0.0

    def __post_init__(self):
        if self.envelope not in ENVELOPE_FAMILIES:
            raise ValidationError(
                f"unknown envelope family {self.envelope!r}; "
                f"expected one of {ENVELOPE_FAMILIES}")
        if not (self.width > 0 and math.isfinite(self.width)):
            raise ValidationError(f"envelope width must be positive, got {self.width}")
        for name in ("k", "phase_gradient", "omega", "t"):
            if not math.isfinite(getattr(self, name)):
                raise ValidationError(f"{name} must be finite")

    @classmethod
    def slit_a(cls, **kwargs) -> "SlitAmplitude":
        """Amplitude with no extra phase gradient."""
        return cls(phase_gradient=0.0, **kwargs)

    @classmethod
    def slit_b(cls, **kwargs) -> "SlitAmplitude":
        """Amplitude with a pi phase gradient (fringes of period 2 in x)."""
        return cls(phase_gradient=math.pi, **kwargs)

    def _envelope(self, x: np.ndarray) -> np.ndarray:
        if self.envelope == "lorentzian":
            return np.sqrt(self.width / (np.pi * (self.width**2 + x**2)))
        # gaussian: |env|^2 = exp(-x^2/width^2) / (width*sqrt(pi))
        return (np.pi * self.width**2) ** -0.25 * np.exp(-(x**2) / (2 * self.width**2))

    def __call__(self, x):
        """Complex amplitude at ``x`` (scalar or array)."""
        x = _check_finite_x(x)
        phase = -(self.k + self.phase_gradient) * x + self.omega * self.t
        return self._envelope(x) * np.exp(1j * phase)

    def modulus_squared(self, x):
        """``|psi(x)|^2`` — phase-free, so independent of k, omega, t."""
        x = _check_finite_x(x)
        return self._envelope(x) ** 2


def _check_finite_x(x):
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValidationError("x must be finite")
    return x if x.ndim else x[()]


def eval_amplitude(psi: SlitAmplitude, x):
    """Functional form of ``psi(x)``."""
    return psi(x)


@dataclass(frozen=True)
class Spinor:
    """Normalized state of the two-level which-way tag.

    Components are stored in the {up, down} tagging basis.  ``name`` is a
    display label only and does not participate in comparisons.
    """

    up: complex
    down: complex
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = abs(self.up) ** 2 + abs(self.down) ** 2
        if not math.isfinite(n) or abs(n - 1.0) > _NORM_TOL:
            raise ValidationError(
                f"spinor must be normalized: |up|^2+|down|^2 = {n!r}")

    @classmethod
    def spin_up(cls) -> "Spinor":
        return cls(1.0, 0.0, name="up")

    @classmethod
    def spin_down(cls) -> "Spinor":
        return cls(0.0, 1.0, name="down")

    @classmethod
    def spin_plus(cls) -> "Spinor":
        s = 1.0 / math.sqrt(2.0)
        return cls(s, s, name="plus")

    @classmethod
    def spin_minus(cls) -> "Spinor":
        s = 1.0 / math.sqrt(2.0)
        return cls(s, -s, name="minus")

    @classmethod
    def from_axis(cls, theta: float, phi: float) -> "Spinor":
        """Spinor pointing along the (theta, phi) axis of the Bloch sphere."""
        return cls(math.cos(theta / 2.0),
                   complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2.0),
                   name=f"axis({theta:.6g},{phi:.6g})")

    def inner(self, other: "Spinor") -> complex:
        """``<self|other>``."""
        return np.conj(self.up) * other.up + np.conj(self.down) * other.down

    def orthogonal(self) -> "Spinor":
        """The unique (up to phase) spinor orthogonal to this one."""
        return Spinor(-np.conj(self.down), np.conj(self.up),
                      name=f"{self.name}_perp" if self.name else "")


PRESET_SPINORS = {
    "up": Spinor.spin_up,
    "down": Spinor.spin_down,
    "plus": Spinor.spin_plus,
    "minus": Spinor.spin_minus,
}


@dataclass(frozen=True)
class EraserState:
    """Which-way-tagged superposition ``alpha*psi_a|up> + beta*psi_b|down>``.

    Coefficients must satisfy ``|alpha|^2 + |beta|^2 = 1`` (within 1e-12);
    nothing here renormalizes silently.
    """

    alpha: complex
    beta: complex
    psi_a: SlitAmplitude
    psi_b: SlitAmplitude

    def __post_init__(self):
        n = abs(self.alpha) ** 2 + abs(self.beta) ** 2
        if not math.isfinite(n) or abs(n - 1.0) > _NORM_TOL:
            raise ValidationError(
                f"slit coefficients must satisfy |alpha|^2+|beta|^2 = 1, got {n!r}")

    @classmethod
    def balanced(cls, alpha: complex | None = None, beta: complex | None = None,
                 **amplitude_kwargs) -> "EraserState":
        """Symmetric two-slit state (alpha = beta = 1/sqrt(2)) with the
        standard slit pair; pass alpha/beta to override the coefficients."""
        s = 1.0 / math.sqrt(2.0)
        if alpha is None:
            alpha = s
        if beta is None:
            beta = s
        return cls(alpha, beta,
                   SlitAmplitude.slit_a(**amplitude_kwargs),
                   SlitAmplitude.slit_b(**amplitude_kwargs))


def inner_product(f: SlitAmplitude, g: SlitAmplitude, grid: Grid) -> complex:
    """Trapezoid quadrature of ``<f|g>`` over the grid window.

    Conjugate-symmetric by construction.  Accuracy depends on how much of the
    integrand's mass the window captures: for the unit Lorentzian pair the
    norm integrand leaves ~0.032 outside [-20, 20] while the oscillatory
    slit-overlap integrand leaves only ~1.6e-5 there.
    """
    x = grid.points
    values = np.conj(f(x)) * g(x)
    return complex(np.dot(grid.weights, values))


def psi1_density(alpha: complex, beta: complex, psi_a: SlitAmplitude,
                 psi_b: SlitAmplitude, x):
    """Position density of the untagged superposition — fringes included.

    ``|alpha*psi_a(x) + beta*psi_b(x)|^2``; the cross terms between the two
    slit amplitudes are what modulate the envelope.
    """
    n = abs(alpha) ** 2 + abs(beta) ** 2
    if abs(n - 1.0) > _NORM_TOL:
        raise ValidationError(
            f"slit coefficients must satisfy |alpha|^2+|beta|^2 = 1, got {n!r}")
    amp = alpha * psi_a(x) + beta * psi_b(x)
    return np.abs(amp) ** 2


def psi2_density(state: EraserState, x):
    """Position density of the tagged state — fringeless.

    The which-way tag is orthogonal between the slits, so the cross terms
    drop and the density is the plain mixture
    ``|alpha|^2 |psi_a|^2 + |beta|^2 |psi_b|^2``.
    """
    return (abs(state.alpha) ** 2 * state.psi_a.modulus_squared(x)
            + abs(state.beta) ** 2 * state.psi_b.modulus_squared(x))
