"""Continuous-pointer model of a weak position measurement.

A Gaussian pointer is coupled to the projector onto one screen bin through
H = g * Pi_bin (x) P_q (hbar = 1, P_q the pointer momentum), so the
propagator over an interaction time t is

    U = exp(-i * lam * Pi_bin (x) P_q),    lam = g * t

Because Pi_bin is a projector this exponential is exactly

    U = I + Pi_bin (x) (T_lam - I)

with T_lam the pointer translation by lam: the pointer slides by lam when
the particle is in the bin and stays put otherwise.  Reading out the mean
pointer position conditioned on a spin post-selection and dividing by
lam * bin_width infers the conditional position density at the bin — the
weak value of the bin projector per unit width.  The module implements both
the exact propagator and its first-order expansion (I - i*lam*Pi (x) P_q,
renormalized), the conditional readout, and the back-action ("disturbance")
on the particle's state.

States live in a low-rank product form: a joint state is a sum of a few
(system, pointer) product terms.  Bin-projector evolution adds at most one
term per existing term, so ranks stay tiny while the system grid can be
made very wide — which matters, because the inferred/reference agreement is
limited by how much probability the grid window misses.

The pointer grid uses plain Riemann sums (weight dq everywhere); the FFT
translation is exactly unitary under that inner product.  The system grid
keeps the trapezoid weights used everywhere else.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (ConfigurationError, DegeneratePostSelectionError,
                     ValidationError)
from .hilbert import EraserState, Grid, Spinor
from .weak_values import weak_value_exact

ORDER_EXACT = "exact"
ORDER_FIRST = "first-order"

#: lam/sigma values for the standard weak-coupling sweep (largest first).
WEAK_SWEEP_COUPLINGS = (1e-1, 1e-2, 1e-3)

#: Fraction of the pointer-grid span a translation may use before the
#: periodic (FFT) shift would wrap tails back into the window.
_MAX_SHIFT_FRACTION = 0.25

_ALIGN_TOL = 1e-6


@dataclass(frozen=True)
class PointerState:
    """Pointer wavefunction on its own grid.

    ``sigma`` records the position-space standard deviation of the initial
    Gaussian; it is carried along because coupling strengths are usually
    quoted as lam/sigma.
    """

    grid: Grid
    amplitude: np.ndarray = field(compare=False)
    sigma: float = 1.0

    def __post_init__(self):
        amp = np.asarray(self.amplitude, dtype=complex)
        if amp.shape != self.grid.points.shape:
            raise ValidationError("pointer amplitude shape does not match grid")
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise ValidationError("pointer width sigma must be positive")
        object.__setattr__(self, "amplitude", amp)
        norm = self.grid.spacing * np.sum(np.abs(amp) ** 2)
        if abs(norm - 1.0) > 1e-8:
            raise ValidationError(
                f"pointer amplitude is not normalized on its grid (norm^2={norm!r})")

    @classmethod
    def gaussian(cls, sigma: float = 1.0, half_width: float = 8.0,
                 n_points: int = 1024) -> "PointerState":
        """Gaussian of position std ``sigma`` on a grid of ±half_width*sigma.

        The amplitude is renormalized discretely, so the state is exactly
        unit under the dq-weighted sum even though the grid clips the tails.
        """
        grid = Grid(-half_width * sigma, half_width * sigma, n_points)
        q = grid.points
        amp = (2.0 * np.pi * sigma ** 2) ** (-0.25) * np.exp(-q ** 2 / (4.0 * sigma ** 2))
        amp = amp.astype(complex)
        amp /= np.sqrt(grid.spacing * np.sum(np.abs(amp) ** 2))
        return cls(grid=grid, amplitude=amp, sigma=sigma)


@dataclass(frozen=True)
class CouplingConfig:
    """Coupling of the pointer momentum to one screen bin's projector.

    ``coupling`` (g) and ``duration`` (t) only ever enter as the product
    lam = g*t, exposed as ``shift``.  The bin is ``bin_width`` wide and
    centered on ``bin_center``; it must line up with the system grid (see
    ``bin_indices``).  ``order`` picks the exact propagator or its
    normalized first-order expansion.
    """

    coupling: float
    duration: float = 1.0
    bin_center: float = 0.0
    bin_width: float = 0.01
    order: str = ORDER_EXACT

    def __post_init__(self):
        for label, value in (("coupling", self.coupling), ("duration", self.duration),
                             ("bin_center", self.bin_center), ("bin_width", self.bin_width)):
            if not np.isfinite(value):
                raise ConfigurationError(f"{label} must be finite, got {value!r}")
        if self.bin_width <= 0:
            raise ConfigurationError("bin_width must be positive")
        if self.order not in (ORDER_EXACT, ORDER_FIRST):
            raise ConfigurationError(
                f"order must be {ORDER_EXACT!r} or {ORDER_FIRST!r}, got {self.order!r}")

    @property
    def shift(self) -> float:
        """Effective pointer translation lam = coupling * duration."""
        return self.coupling * self.duration

    def bin_indices(self, grid: Grid) -> np.ndarray:
        """Indices of the grid points making up the bin.

        The bin is realized as m = bin_width/dx consecutive points whose
        dx-cells tile [center - width/2, center + width/2]: for odd m the
        center must fall on a grid point, for even m exactly between two.
        Misalignment beyond a 1e-6*dx tolerance, or a bin touching the grid
        boundary, is a configuration error.
        """
        dx = grid.spacing
        m = int(round(self.bin_width / dx))
        if m < 1 or abs(m * dx - self.bin_width) > _ALIGN_TOL * dx:
            raise ConfigurationError(
                f"bin_width {self.bin_width!r} is not a whole number of grid cells "
                f"(dx={dx!r})")
        offset = (self.bin_center - grid.x_min) / dx
        if m % 2 == 1:
            j = int(round(offset))
            misfit = abs(offset - j)
            first = j - (m - 1) // 2
        else:
            j = int(round(offset - 0.5))
            misfit = abs(offset - 0.5 - j)
            first = j - m // 2 + 1
        if misfit > _ALIGN_TOL:
            raise ConfigurationError(
                f"bin at {self.bin_center!r} does not line up with the grid "
                f"(off by {misfit * dx:.3g})")
        last = first + m - 1
        if first < 1 or last > grid.n_points - 2:
            raise ConfigurationError("bin extends to or beyond the grid boundary")
        return np.arange(first, last + 1)


def translate(amplitude: np.ndarray, spacing: float, shift: float) -> np.ndarray:
    """Translate a pointer amplitude by ``shift`` via the FFT (periodic)."""
    n = amplitude.shape[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=spacing)
    return np.fft.ifft(np.fft.fft(amplitude) * np.exp(-1j * k * shift))


def apply_momentum(amplitude: np.ndarray, spacing: float) -> np.ndarray:
    """Apply the momentum operator P = -i d/dq spectrally."""
    n = amplitude.shape[0]
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=spacing)
    return np.fft.ifft(k * np.fft.fft(amplitude))


def _spin_project(system: np.ndarray, f: Spinor) -> np.ndarray:
    return np.conj(f.up) * system[:, 0] + np.conj(f.down) * system[:, 1]


@dataclass(frozen=True)
class JointState:
    """Particle (x-grid × spin) ⊗ pointer state as a sum of product terms.

    ``terms`` is a tuple of (system, pointer_amplitude) pairs: system has
    shape (n_x, 2) over (position, spin), the pointer amplitude lives on
    ``pointer.grid``.  The represented state is the sum of the outer
    products.  All expectation values reduce to small Gram matrices between
    the terms, so nothing dense in (x, q) is ever materialized.
    """

    system_grid: Grid
    pointer: PointerState
    terms: tuple = field(compare=False)

    @classmethod
    def prepare(cls, state: EraserState, system_grid: Grid | None = None,
                pointer: PointerState | None = None) -> "JointState":
        """Product of the two-slit spin-tagged state with a fresh pointer.

        The system amplitudes are renormalized on the grid, so the joint
        state has exactly unit norm and post-selection probabilities over a
        spin basis sum to one.
        """
        if system_grid is None:
            system_grid = Grid.wide()
        if pointer is None:
            pointer = PointerState.gaussian()
        x = system_grid.points
        system = np.stack([state.alpha * state.psi_a(x),
                           state.beta * state.psi_b(x)], axis=1)
        norm_sq = float(np.real(
            np.dot(system_grid.weights, np.sum(np.abs(system) ** 2, axis=1))))
        system /= np.sqrt(norm_sq)
        return cls(system_grid=system_grid, pointer=pointer,
                   terms=((system, pointer.amplitude.copy()),))

    # -- Gram-matrix plumbing -------------------------------------------------

    def _system_inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        return complex(np.dot(self.system_grid.weights,
                              np.sum(np.conj(a) * b, axis=1)))

    def _pointer_inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        return self.pointer.grid.spacing * complex(np.vdot(a, b))

    def _pointer_q_inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        q = self.pointer.grid.points
        return self.pointer.grid.spacing * complex(np.vdot(a, q * b))

    def _projected_gram(self, f: Spinor | None) -> np.ndarray:
        """Gram matrix of the (optionally spin-projected) system factors."""
        if f is None:
            parts = [t[0] for t in self.terms]
            return np.array([[self._system_inner(a, b) for b in parts] for a in parts])
        w = self.system_grid.weights
        chis = [_spin_project(t[0], f) for t in self.terms]
        return np.array([[complex(np.dot(w, np.conj(a) * b)) for b in chis]
                         for a in chis])

    def _pointer_gram(self, weighted: bool = False) -> np.ndarray:
        inner = self._pointer_q_inner if weighted else self._pointer_inner
        parts = [t[1] for t in self.terms]
        return np.array([[inner(a, b) for b in parts] for a in parts])

    # -- observables ----------------------------------------------------------

    def norm_squared(self) -> float:
        return float(np.real(np.sum(self._projected_gram(None) * self._pointer_gram())))

    def post_selection_probability(self, f: Spinor) -> float:
        """Probability of the spin post-selection succeeding on this state."""
        return float(np.real(np.sum(self._projected_gram(f) * self._pointer_gram())))

    def pointer_mean(self) -> float:
        """Unconditioned mean pointer position."""
        num = np.real(np.sum(self._projected_gram(None) * self._pointer_gram(True)))
        return float(num / self.norm_squared())

    def conditional_pointer_mean(self, f: Spinor) -> float:
        """Mean pointer position given that the spin post-selection succeeded."""
        gram = self._projected_gram(f)
        prob = np.real(np.sum(gram * self._pointer_gram()))
        if prob <= 1e-12 * self.norm_squared():
            raise DegeneratePostSelectionError(
                "post-selection weight is numerically zero; "
                "no conditional pointer state exists")
        num = np.real(np.sum(gram * self._pointer_gram(True)))
        return float(num / prob)

    def conditional_position_density(self, f: Spinor | None,
                                     q_window: tuple[float, float] | None = None
                                     ) -> np.ndarray:
        """Particle position density given spin outcome and a pointer window.

        ``q_window = (q_lo, q_hi)`` keeps only detections whose pointer
        landed in that interval — e.g. conditioning on the pointer having
        visibly moved after a strong kick.  ``None`` keeps everything.  The
        result is normalized to unit trapezoid integral on the system grid.
        """
        if f is None:
            # keep both spin components; sum them out in the pairing below
            chis = [t[0] for t in self.terms]
        else:
            chis = [_spin_project(t[0], f) for t in self.terms]
        q = self.pointer.grid.points
        dq = self.pointer.grid.spacing
        if q_window is None:
            sel = np.ones_like(q, dtype=bool)
        else:
            sel = (q >= q_window[0]) & (q <= q_window[1])
        density = np.zeros(self.system_grid.n_points)
        for k, (_, pk) in enumerate(self.terms):
            for l, (_, pl) in enumerate(self.terms):
                m_kl = dq * complex(np.vdot(pl[sel], pk[sel]))
                pair = np.conj(chis[k]) * chis[l]
                if pair.ndim == 2:
                    pair = np.sum(pair, axis=1)
                density += np.real(pair * m_kl)
        total = float(np.dot(self.system_grid.weights, density))
        if total <= 1e-14:
            raise DegeneratePostSelectionError(
                "conditioning window carries numerically zero probability")
        return density / total

    # -- evolution ------------------------------------------------------------

    def evolve(self, config: CouplingConfig) -> "JointState":
        """Couple the pointer momentum to the configured bin projector.

        Exact order applies I + Pi (x) (T_lam - I): each product term gains a
        companion with the system masked to the bin and the pointer replaced
        by (translated - original).  First order applies I - i*lam*Pi (x) P
        and renormalizes.  A translation larger than a quarter of the pointer
        grid span is refused: the FFT shift is periodic and the displaced
        wavepacket would wrap around.
        """
        lam = config.shift
        if lam == 0.0:
            return self
        span = self.pointer.grid.x_max - self.pointer.grid.x_min
        if abs(lam) > _MAX_SHIFT_FRACTION * span:
            raise ConfigurationError(
                f"pointer translation {lam!r} exceeds {_MAX_SHIFT_FRACTION:g} of the "
                f"pointer grid span {span!r}; widen the pointer grid")
        idx = config.bin_indices(self.system_grid)
        mask = np.zeros(self.system_grid.n_points)
        mask[idx] = 1.0
        dq = self.pointer.grid.spacing
        new_terms = list(self.terms)
        if config.order == ORDER_EXACT:
            for system, amp in self.terms:
                new_terms.append((mask[:, None] * system,
                                  translate(amp, dq, lam) - amp))
            return replace(self, terms=tuple(new_terms))
        for system, amp in self.terms:
            new_terms.append((mask[:, None] * system,
                              -1j * lam * apply_momentum(amp, dq)))
        evolved = replace(self, terms=tuple(new_terms))
        scale = 1.0 / np.sqrt(evolved.norm_squared())
        scaled = tuple((system, amp * scale) for system, amp in evolved.terms)
        return replace(self, terms=scaled)

    def to_dense(self, max_entries: int = 1 << 24) -> np.ndarray:
        """Materialize the full (n_x, 2, n_q) tensor (small grids only)."""
        entries = self.system_grid.n_points * 2 * self.pointer.grid.n_points
        if entries > max_entries:
            raise ConfigurationError(
                f"dense tensor would hold {entries} entries (limit {max_entries}); "
                "use the Gram-matrix observables instead")
        out = np.zeros((self.system_grid.n_points, 2, self.pointer.grid.n_points),
                       dtype=complex)
        for system, amp in self.terms:
            out += system[:, :, None] * amp[None, None, :]
        return out


def conditional_pointer_mean(joint: JointState, f: Spinor) -> float:
    return joint.conditional_pointer_mean(f)


def pointer_disturbance(joint_before: JointState, joint_after: JointState) -> float:
    """Back-action of the coupling on the particle: 1 - fidelity.

    ``joint_before`` must be a product (single-term) state; the return value
    is 1 - <s0| rho_after |s0> with rho_after the particle's reduced density
    matrix after the coupling (pointer traced out).  Zero when nothing
    happened, -> 2 w (1-w) for a fully resolving kick on a bin of
    probability w.
    """
    if len(joint_before.terms) != 1:
        raise ValidationError(
            "joint_before must be a pre-coupling product state (rank 1)")
    s0, _ = joint_before.terms[0]
    s0 = s0 / np.sqrt(np.real(joint_before._system_inner(s0, s0)))
    pointer_gram = joint_after._pointer_gram()
    overlaps = np.array([joint_after._system_inner(s0, system)
                         for system, _ in joint_after.terms])
    # <s0|rho|s0> = sum_{k,l} <p_l|p_k> <s0|s_k> <s_l|s0>
    fidelity = np.real(np.sum(pointer_gram.T * np.outer(overlaps, np.conj(overlaps))))
    fidelity /= joint_after.norm_squared()
    return float(min(1.0, max(0.0, 1.0 - fidelity)))


def conditional_bin_probability(state: EraserState, f: Spinor,
                                config: CouplingConfig, grid: Grid) -> float:
    """Zero-coupling limit of the inferred bin weight, computed directly.

    Evaluates <chi_f| Pi_bin |chi_f> / <chi_f|chi_f> on the grid with no
    pointer machinery at all — the value the conditional-shift readout must
    approach as the coupling goes to zero.
    """
    x = grid.points
    chi = (state.alpha * np.conj(f.up) * state.psi_a(x)
           + state.beta * np.conj(f.down) * state.psi_b(x))
    weights = grid.weights
    density = np.abs(chi) ** 2
    total = float(np.dot(weights, density))
    if total <= 1e-12:
        raise DegeneratePostSelectionError(
            "post-selection weight is numerically zero on this grid")
    idx = config.bin_indices(grid)
    return float(np.dot(weights[idx], density[idx]) / total)


def weak_value_sweep(state: EraserState, couplings, post_selections,
                     bin_center: float = 0.0, bin_width: float = 0.01,
                     order: str = ORDER_EXACT,
                     system_grid: Grid | None = None,
                     pointer: PointerState | None = None) -> list[dict]:
    """Run the pointer readout over a sweep of couplings.

    For each coupling lam (= g with duration 1) the joint state is evolved
    once and read out for every post-selection spinor; rows carry the raw
    conditional shift, the inferred weak value shift/(lam*bin_width), the
    reference weak value from the quadrature engine, and the disturbance.
    A zero coupling yields a row with an undefined (NaN) inferred value.
    """
    if system_grid is None:
        system_grid = Grid.wide()
    if pointer is None:
        pointer = PointerState.gaussian()
    before = JointState.prepare(state, system_grid, pointer)
    rows = []
    for g in couplings:
        config = CouplingConfig(coupling=g, bin_center=bin_center,
                                bin_width=bin_width, order=order)
        after = before.evolve(config)
        disturbance = pointer_disturbance(before, after)
        for f in post_selections:
            shift = after.conditional_pointer_mean(f)
            lam = config.shift
            inferred = shift / (lam * bin_width) if lam != 0.0 else float("nan")
            reference = float(np.real(
                weak_value_exact(state, f, bin_center, system_grid).value))
            rows.append({
                "g": float(g),
                "post_selection": f.name or "custom",
                "conditional_shift": shift,
                "inferred_weak_value": inferred,
                "reference_weak_value": reference,
                "disturbance": disturbance,
            })
    return rows
