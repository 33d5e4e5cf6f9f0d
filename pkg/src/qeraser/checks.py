"""Self-contained invariant suite over the analytic and pointer engines.

Every check returns a record rather than asserting, so the CLI can print a
pass/fail table for any configured state (not just the defaults) and exit
nonzero if anything breaks.  Checks that only make sense for particular
coefficient choices (balanced-state fringe nulls, interference anomaly)
exclude themselves when they do not apply.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import (EraserState, Grid, SlitAmplitude, inner_product,
                      psi1_density, psi2_density)
from .pointer import CouplingConfig, JointState, PointerState, ORDER_FIRST
from .weak_values import (PostSelectionBasis, post_selection_probability,
                          slit_overlap, sum_rule_residual, weak_value_exact)

#: Closed form of the default slit overlap <psi_a|psi_b>: the unit-width
#: Lorentzian densities differ by the phase e^{-i*pi*x}, and the contour
#: integral of e^{i*pi*x}/(pi*(1+x^2)) over the real line is e^{-pi}.
DEFAULT_OVERLAP = float(np.exp(-np.pi))


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: float
    detail: str


def _result(name: str, passed, value: float, detail: str) -> CheckResult:
    return CheckResult(name=name, passed=bool(passed), value=float(value),
                       detail=detail)


def check_coefficient_normalization(state: EraserState, grid: Grid) -> CheckResult:
    dev = abs(abs(state.alpha) ** 2 + abs(state.beta) ** 2 - 1.0)
    return _result("coefficient-normalization", dev < 1e-9, dev,
                   "| |alpha|^2 + |beta|^2 - 1 |")


def check_grid_normalization(state: EraserState, grid: Grid,
                             tolerance: float = 0.05) -> CheckResult:
    """Slit norms on the finite window stay near their analytic value 1.

    The window inevitably clips the envelope tails (the default Lorentzian
    on [-20, 20] keeps about 96.8% of its mass), so this is a sanity bound
    on the discretization, not an equality.
    """
    deficit = max(abs(complex(inner_product(state.psi_a, state.psi_a, grid)) - 1.0),
                  abs(complex(inner_product(state.psi_b, state.psi_b, grid)) - 1.0))
    return _result("grid-normalization", deficit < tolerance, deficit,
                   f"max slit-norm deficit on window (tolerance {tolerance:g})")


def _has_default_slits(state: EraserState) -> bool:
    return (state.psi_a == SlitAmplitude.slit_a()
            and state.psi_b == SlitAmplitude.slit_b())


def check_overlap_closed_form(state: EraserState, grid: Grid) -> CheckResult | None:
    """Quadrature overlap against the e^{-pi} closed form (default slits only)."""
    if not _has_default_slits(state):
        return None
    overlap = slit_overlap(state, grid)
    dev = abs(overlap - DEFAULT_OVERLAP)
    return _result("overlap-closed-form", dev < 1e-4, dev,
                   f"|quadrature overlap - e^-pi|; overlap={overlap.real:.8f}")


def check_probability_completeness(state: EraserState, grid: Grid) -> CheckResult:
    basis = PostSelectionBasis.x()
    total = sum(post_selection_probability(state, f, grid, "exact")
                for f in basis.members())
    dev = abs(total - 1.0)
    return _result("probability-completeness", dev < 1e-12, dev,
                   "|P(+) + P(-) - 1| with the overlap term kept")


def check_sum_rule_exact(state: EraserState, grid: Grid) -> CheckResult:
    rng = np.random.default_rng(7)
    bases = [PostSelectionBasis.z(), PostSelectionBasis.x(),
             PostSelectionBasis.from_axis(rng.uniform(0, np.pi),
                                          rng.uniform(0, 2 * np.pi))]
    worst = max(sum_rule_residual(state, b, grid, "exact") for b in bases)
    return _result("sum-rule-exact", worst < 1e-10, worst,
                   "max |sum_f P(f) wv_f(x) - psi2_density(x)| over Z/X/random basis")


def check_sum_rule_idealized_gap(state: EraserState, grid: Grid) -> CheckResult:
    residual = sum_rule_residual(state, PostSelectionBasis.x(), grid, "idealized")
    overlap = abs(slit_overlap(state, grid))
    bound = 10.0 * overlap + 1e-12
    return _result("sum-rule-idealized-gap", residual <= bound, residual,
                   f"orthogonal-slit idealization gap (should be O(overlap={overlap:.2e}))")


def check_idealization_gap_probability(state: EraserState, grid: Grid) -> CheckResult:
    """Exact versus idealized post-selection probability for the + outcome.

    Reports both values and their difference; the difference must equal the
    kept overlap term exactly, since that term is the only thing the
    idealized path drops.
    """
    f = PostSelectionBasis.x().first
    exact = post_selection_probability(state, f, grid, "exact")
    ideal = post_selection_probability(state, f, grid, "idealized")
    c_a = state.alpha * np.conj(f.up)
    c_b = state.beta * np.conj(f.down)
    cross = 2.0 * float(np.real(np.conj(c_a) * c_b * slit_overlap(state, grid)))
    dev = abs((exact - ideal) - cross)
    return _result("idealization-gap-probability", dev < 1e-12, dev,
                   f"P_exact(+)={exact:.6f}, P_idealized(+)={ideal:.6f}, "
                   f"difference={exact - ideal:+.6f}")


def check_up_weak_value_coefficient_independence(state: EraserState,
                                                 grid: Grid) -> CheckResult:
    """The spin-up curve is the bare slit-a density for any coefficients."""
    x = grid.points
    target = state.psi_a.modulus_squared(x)
    rng = np.random.default_rng(11)
    worst = 0.0
    up = PostSelectionBasis.z().first
    for _ in range(3):
        raw = rng.normal(size=4)
        alpha = complex(raw[0], raw[1])
        beta = complex(raw[2], raw[3])
        scale = np.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        trial = EraserState(alpha / scale, beta / scale, state.psi_a, state.psi_b)
        curve = np.real(weak_value_exact(trial, up, x, grid).value)
        worst = max(worst, float(np.max(np.abs(curve - target))))
    return _result("up-weak-value-coefficient-independence", worst < 1e-10, worst,
                   "max |wv_up - |psi_a|^2| over random coefficient pairs")


def check_weak_values_real_nonnegative(state: EraserState, grid: Grid) -> CheckResult:
    x = grid.points
    worst_im, worst_neg = 0.0, 0.0
    for basis in (PostSelectionBasis.z(), PostSelectionBasis.x()):
        for f in basis.members():
            wv = weak_value_exact(state, f, x, grid).value
            worst_im = max(worst_im, float(np.max(np.abs(np.imag(wv)))))
            worst_neg = max(worst_neg, float(max(0.0, -np.min(np.real(wv)))))
    worst = max(worst_im, worst_neg)
    return _result("weak-values-real-nonnegative", worst == 0.0, worst,
                   "projector weak values here are conditional densities")


def check_balanced_fringe_nulls(state: EraserState, grid: Grid) -> CheckResult | None:
    """Destructive interference pins psi1 to zero at odd x (balanced state)."""
    if abs(state.alpha - state.beta) > 1e-12 or not _has_default_slits(state):
        return None
    x = np.array([-3.0, -1.0, 1.0, 3.0])
    worst = float(np.max(psi1_density(state.alpha, state.beta,
                                      state.psi_a, state.psi_b, x)))
    return _result("balanced-fringe-nulls", worst < 1e-9, worst,
                   "psi1_density at x = ±1, ±3")


def check_interference_anomaly(state: EraserState, grid: Grid) -> CheckResult | None:
    """Somewhere the + conditional density exceeds the unconditioned one."""
    if np.real(np.conj(state.alpha) * state.beta) < 1e-6:
        return None
    x = grid.points
    plus = PostSelectionBasis.x().first
    excess = np.real(weak_value_exact(state, plus, x, grid).value) - psi2_density(state, x)
    peak = float(np.max(excess))
    return _result("interference-anomaly", peak > 0.0, peak,
                   "max (wv_plus - psi2_density); positive = anomalous region")


def check_pointer_mean_totals(state: EraserState, grid: Grid) -> CheckResult:
    """Conditional shifts recombine into the unconditioned mean shift."""
    pointer = PointerState.gaussian(n_points=512)
    joint = JointState.prepare(state, grid, pointer)
    config = CouplingConfig(coupling=0.05,
                            bin_center=float(grid.points[grid.n_points // 2]),
                            bin_width=grid.spacing)
    after = joint.evolve(config)
    basis = PostSelectionBasis.x()
    recombined = sum(after.post_selection_probability(f)
                     * after.conditional_pointer_mean(f)
                     for f in basis.members())
    x = grid.points
    idx = config.bin_indices(grid)
    density = (abs(state.alpha) ** 2 * state.psi_a.modulus_squared(x)
               + abs(state.beta) ** 2 * state.psi_b.modulus_squared(x))
    bin_weight = float(np.dot(grid.weights[idx], density[idx])
                       / np.dot(grid.weights, density))
    dev = abs(recombined - config.shift * bin_weight)
    return _result("pointer-mean-totals", dev < 1e-8, dev,
                   "|sum_f P(f) <q>_f - lam <Pi_bin>|")


def check_pointer_orders_agree(state: EraserState, grid: Grid) -> CheckResult:
    """First-order propagator tracks the exact one at small coupling."""
    small = Grid(-20.0, 20.0, 401)
    pointer = PointerState.gaussian(n_points=256)
    joint = JointState.prepare(state, small, pointer)
    center = float(small.points[small.n_points // 2])
    exact = joint.evolve(CouplingConfig(coupling=0.01, bin_center=center,
                                        bin_width=small.spacing))
    first = joint.evolve(CouplingConfig(coupling=0.01, bin_center=center,
                                        bin_width=small.spacing,
                                        order=ORDER_FIRST))
    dev = float(np.max(np.abs(exact.to_dense() - first.to_dense())))
    return _result("pointer-orders-agree", dev < 1e-3, dev,
                   "max amplitude difference at lam/sigma = 0.01")


_ALL_CHECKS = (
    check_coefficient_normalization,
    check_grid_normalization,
    check_overlap_closed_form,
    check_probability_completeness,
    check_sum_rule_exact,
    check_sum_rule_idealized_gap,
    check_idealization_gap_probability,
    check_up_weak_value_coefficient_independence,
    check_weak_values_real_nonnegative,
    check_balanced_fringe_nulls,
    check_interference_anomaly,
    check_pointer_mean_totals,
    check_pointer_orders_agree,
)


def run_all(state: EraserState, grid: Grid | None = None) -> list[CheckResult]:
    """Run every applicable invariant check; inapplicable ones are skipped."""
    if grid is None:
        grid = Grid.default()
    results = []
    for check in _ALL_CHECKS:
        outcome = check(state, grid)
        if outcome is not None:
            results.append(outcome)
    return results
