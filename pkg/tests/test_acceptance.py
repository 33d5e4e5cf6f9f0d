"""Acceptance gate for the reference configuration.

Every test prints exactly one PASS/FAIL line; the conftest terminal-summary
hook repeats the collected lines after the run so they survive capture.
Reference numbers are either textbook constants (1/pi, 2/pi), independent
high-precision quadrature computed here with mpmath, or direct projector
expectations that bypass the machinery under test.
"""

import time

import numpy as np
import pytest

from conftest import random_coefficients
from qeraser import (BasisPolicy, CHUNK_SIZE, CouplingConfig, EraserState,
                     Grid, PRESET_SPINORS, PostSelectionBasis, Spinor,
                     conditional_bin_probability, chi_square_subensemble,
                     fringe_visibility, marginal_invariance_test,
                     post_selection_probability, psi1_density, psi2_density,
                     recombine_check, sample_events, subensemble_histogram,
                     sum_rule_residual, weak_value_closed_form,
                     weak_value_sweep, write_events)

CRITERION_LINES = []

MC_SEED = 20240501
MC_N = 1_000_000

SWEEP_COUPLINGS = (1e-1, 1e-2, 1e-3)
SWEEP_CENTERS = (0.0, 0.5, 1.0)
BIN_WIDTH = 0.01
POST_TAGS = ("up", "down", "plus", "minus")


def _verdict(num, description, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {num:02d}: {description}"
    if detail:
        line += f" -- {detail}"
    CRITERION_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def state():
    return EraserState.balanced()


@pytest.fixture(scope="module")
def grid():
    return Grid.default()


@pytest.fixture(scope="module")
def mc_events(state, grid):
    return sample_events(state, MC_N, BasisPolicy.per_event_random(),
                         seed=MC_SEED, grid=grid)


def test_criterion_01_center_values(state, grid):
    t0 = time.perf_counter()
    x = grid.points
    curves = {tag: np.real(weak_value_closed_form(state, tag, x).value)
              for tag in POST_TAGS}
    dens2 = psi2_density(state, x)
    psi1_density(state.alpha, state.beta, state.psi_a, state.psi_b, x)
    elapsed = time.perf_counter() - t0

    i0 = int(np.argmin(np.abs(x)))
    assert x[i0] == 0.0
    errs = (abs(dens2[i0] - 1.0 / np.pi),
            abs(curves["plus"][i0] - 2.0 / np.pi),
            abs(curves["minus"][i0]))
    ok = max(errs) <= 1e-9 and elapsed < 1.0
    _verdict(1, "screen-center values 1/pi, 2/pi, 0 within 1e-9", ok,
             f"max err {max(errs):.2e}, {elapsed:.2f} s")


def test_criterion_02_fringe_nulls(state):
    probes = np.array([-3.0, -1.0, 1.0, 3.0])
    vals = psi1_density(state.alpha, state.beta, state.psi_a, state.psi_b,
                        probes)
    ok = float(np.max(np.abs(vals))) <= 1e-9
    _verdict(2, "coherent-pattern nulls at x = +/-1, +/-3 within 1e-9", ok,
             f"max |density| {np.max(np.abs(vals)):.2e}")


def test_criterion_03_sum_rule(state, grid):
    t0 = time.perf_counter()
    rng = np.random.default_rng(314159)
    bases = [PostSelectionBasis.z(), PostSelectionBasis.x()]
    bases += [PostSelectionBasis.from_axis(np.arccos(rng.uniform(-1.0, 1.0)),
                                           rng.uniform(-np.pi, np.pi))
              for _ in range(100)]
    worst = max(sum_rule_residual(state, basis, grid) for basis in bases)
    elapsed = time.perf_counter() - t0
    ok = worst < 1e-10 and elapsed < 10.0
    _verdict(3, "probability-weighted sum rule < 1e-10 on Z, X and 100 "
                "random bases", ok, f"max residual {worst:.2e}, {elapsed:.1f} s")


def test_criterion_04_tag_weak_value_identity(state):
    rng = np.random.default_rng(271828)
    x = np.linspace(-10.0, 10.0, 801)
    target = state.psi_a.modulus_squared(x)
    worst = 0.0
    for alpha, beta in random_coefficients(rng, 20):
        probe = EraserState(alpha=alpha, beta=beta,
                            psi_a=state.psi_a, psi_b=state.psi_b)
        wv = np.real(weak_value_closed_form(probe, "up", x).value)
        worst = max(worst, float(np.max(np.abs(wv - target))))
    ok = worst < 1e-10
    _verdict(4, "up-conditioned weak value equals |psi_a|^2 for 20 random "
                "coefficient pairs", ok, f"max deviation {worst:.2e}")


def test_criterion_05_post_selection_probability(state, grid):
    # independent oracle first: the slit overlap by oscillatory quadrature,
    # entirely outside this package's quadrature path
    mp = pytest.importorskip("mpmath")
    mp.mp.dps = 30
    half = mp.quadosc(lambda t: mp.cos(mp.pi * t) / (mp.pi * (1 + t * t)),
                      [0, mp.inf], omega=mp.pi)
    overlap_ref = float(2 * half)
    p_ref = 0.5 + 0.5 * overlap_ref
    assert abs(p_ref - 0.52161) < 5e-6  # the oracle pins the quoted target

    p_exact = post_selection_probability(state, Spinor.spin_plus(), grid)
    p_ideal = post_selection_probability(state, Spinor.spin_plus(), grid,
                                         method="idealized")
    diff = p_exact - p_ideal
    ok = abs(p_exact - 0.52161) <= 1e-4
    _verdict(5, "P(+) = 0.52161 within 1e-4, idealized value reported "
                "alongside", ok,
             f"exact {p_exact:.6f}, idealized {p_ideal:.6f}, "
             f"difference {diff:+.6f}, oracle {p_ref:.6f}")


def test_criterion_06_monte_carlo_statistics(state, grid, mc_events):
    t0 = time.perf_counter()
    basis_of = {"Z": PostSelectionBasis.z(), "X": PostSelectionBasis.x()}
    reduced = {}
    for tag, outcomes in (("Z", ("up", "down")), ("X", ("plus", "minus"))):
        for index, outcome in enumerate(outcomes):
            fit = chi_square_subensemble(mc_events, state, basis_of[tag], tag,
                                         index, grid, min_expected=10.0)
            reduced[f"{tag}/{outcome}"] = fit.reduced
    ref = lambda xs: psi2_density(state, xs)
    vis_plus = fringe_visibility(
        subensemble_histogram(mc_events, "X", "plus", grid), ref)
    vis_up = fringe_visibility(
        subensemble_histogram(mc_events, "Z", "up", grid), ref)
    elapsed = time.perf_counter() - t0

    chi_ok = all(0.8 < value < 1.2 for value in reduced.values())
    ok = chi_ok and vis_plus > 0.9 and vis_up < 0.1 and elapsed < 30.0
    chis = ", ".join(f"{k} {v:.3f}" for k, v in reduced.items())
    _verdict(6, "MC chi-square in [0.8, 1.2] and visibilities 0.9/0.1 split",
             ok, f"{chis}; vis(+)={vis_plus:.3f}, vis(up)={vis_up:.3f}, "
                 f"{elapsed:.1f} s")


def test_criterion_07_marginal_invariance(state, grid):
    report = marginal_invariance_test(
        state, MC_N,
        [BasisPolicy.fixed_z(), BasisPolicy.fixed_x(),
         BasisPolicy.per_event_random()],
        seed=MC_SEED, grid=grid)
    ok = report.passed and len(report.pairs) == 3
    pairs = ", ".join(f"{p.label_a}|{p.label_b} p={p.p_value:.3f}"
                      for p in report.pairs)
    _verdict(7, "position marginal invariant across tagging policies at "
                "3 sigma, n = 1e6", ok, pairs)


def test_criterion_08_pointer_sweep(state):
    t0 = time.perf_counter()
    wide = Grid.wide()
    posts = [(tag, PRESET_SPINORS[tag]()) for tag in POST_TAGS]
    spinors = [f for _, f in posts]

    failures = []
    worst_rel = 0.0   # relative deviation where the reference is nonzero
    worst_null = 0.0  # absolute deviation on the exact-null references
    for center in SWEEP_CENTERS:
        rows = weak_value_sweep(state, couplings=SWEEP_COUPLINGS,
                                post_selections=spinors, bin_center=center,
                                bin_width=BIN_WIDTH, system_grid=wide)
        by_post = {}
        for row in rows:
            by_post.setdefault(row["post_selection"], []).append(row)
        for tag, entries in by_post.items():
            ref = entries[0]["reference_weak_value"]
            tol = max(0.01 * abs(ref), 1e-9)
            inferred = [e["inferred_weak_value"] for e in entries]
            for e in entries:
                err = abs(e["inferred_weak_value"] - ref)
                if abs(ref) > 1e-6:
                    worst_rel = max(worst_rel, err / abs(ref))
                else:
                    worst_null = max(worst_null, err)
                if err > tol:
                    failures.append(f"{tag}@{center}:g={e['g']:g}")
            # the commuting coupling makes the readout coupling-independent
            spread = max(inferred) - min(inferred)
            if spread > 1e-6 * max(abs(ref), 1.0):
                failures.append(f"{tag}@{center}:spread={spread:.1e}")

        # truncated propagator: monotone second-order approach to the
        # zero-coupling limit, checked against a direct projector expectation
        fo_rows = weak_value_sweep(state, couplings=SWEEP_COUPLINGS,
                                   post_selections=spinors, bin_center=center,
                                   bin_width=BIN_WIDTH, system_grid=wide,
                                   order="first-order")
        fo_by_post = {}
        for row in fo_rows:
            fo_by_post.setdefault(row["post_selection"], []).append(row)
        probe = CouplingConfig(coupling=0.0, bin_center=center,
                               bin_width=BIN_WIDTH)
        for tag, f in posts:
            limit = conditional_bin_probability(state, f, probe, wide) / BIN_WIDTH
            floor = 1e-10 * max(abs(limit), 1.0)
            errs = [abs(e["inferred_weak_value"] - limit)
                    for e in sorted(fo_by_post[tag], key=lambda e: -e["g"])]
            chain = all(later <= max(earlier / 10.0, floor)
                        for earlier, later in zip(errs, errs[1:]))
            small = errs[-1] <= max(0.01 * abs(limit), floor)
            if not (chain and small):
                failures.append(f"first-order {tag}@{center}:{errs}")
    elapsed = time.perf_counter() - t0

    ok = not failures and elapsed < 60.0
    detail = (f"max rel dev {worst_rel:.1e}, null-bin dev {worst_null:.1e}, "
              f"{elapsed:.1f} s" if not failures else "; ".join(failures[:4]))
    _verdict(8, "pointer readout within 1% of the reference weak value with "
                "monotone truncation convergence", ok, detail)


def test_criterion_09_recombination(state, grid, mc_events):
    residuals = {
        tag: recombine_check(mc_events, basis, tag, grid)
        for tag, basis in (("Z", PostSelectionBasis.z()),
                           ("X", PostSelectionBasis.x()))}
    ok = all(value == 0 for value in residuals.values())
    _verdict(9, "sub-ensemble histograms recombine to the marginal with zero "
                "residual", ok,
             ", ".join(f"{k}: {v}" for k, v in residuals.items()))


def test_criterion_10_reproducibility(state, grid, tmp_path):
    n = 2 * CHUNK_SIZE + 777
    blobs = []
    for label, workers in (("run1-w1", 1), ("run2-w1", 1), ("run3-w4", 4)):
        events = sample_events(state, n, BasisPolicy.per_event_random(),
                               seed=4242, grid=grid, workers=workers)
        path = tmp_path / f"{label}.csv"
        write_events(events, str(path))
        blobs.append(path.read_bytes())
    ok = blobs[0] == blobs[1] == blobs[2]
    _verdict(10, "event files byte-identical across repeat runs and worker "
                 "counts", ok, f"{len(blobs[0])} bytes each")
