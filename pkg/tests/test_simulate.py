import json

import numpy as np
import pytest

from qeraser import (BasisPolicy, CHUNK_SIZE, EmptySubEnsembleError,
                     EraserState, Grid, PostSelectionBasis, SlitAmplitude,
                     ValidationError, chi_square_subensemble,
                     expected_subensemble_counts, fringe_visibility,
                     histogram_events, marginal_invariance_test, psi2_density,
                     read_events, recombine_check, sample_events,
                     subensemble_histogram, write_events)

SEED = 20240501


@pytest.fixture(scope="module")
def events(balanced_state, default_grid):
    return sample_events(EraserState.balanced(), 1_000_000,
                         BasisPolicy.per_event_random(), seed=SEED,
                         grid=Grid.default())


def test_sampling_is_deterministic(balanced_state, default_grid):
    a = sample_events(balanced_state, 5000, BasisPolicy.fixed_z(), seed=7,
                      grid=default_grid)
    b = sample_events(balanced_state, 5000, BasisPolicy.fixed_z(), seed=7,
                      grid=default_grid)
    assert np.array_equal(a.x, b.x)
    assert np.array_equal(a.outcome, b.outcome)
    c = sample_events(balanced_state, 5000, BasisPolicy.fixed_z(), seed=8,
                      grid=default_grid)
    assert not np.array_equal(a.x, c.x)


def test_worker_count_does_not_change_the_stream(balanced_state, default_grid):
    """Chunked counter-based streams: thread count is a performance knob only."""
    n = CHUNK_SIZE + 12345  # straddle a chunk boundary on purpose
    base = sample_events(balanced_state, n, BasisPolicy.per_event_random(),
                         seed=99, grid=default_grid, workers=1)
    for workers in (2, 4):
        other = sample_events(balanced_state, n, BasisPolicy.per_event_random(),
                              seed=99, grid=default_grid, workers=workers)
        assert np.array_equal(base.x, other.x)
        assert np.array_equal(base.basis, other.basis)
        assert np.array_equal(base.outcome, other.outcome)
        assert np.array_equal(base.stream_id, other.stream_id)


def test_chunk_ids_recorded(balanced_state, default_grid):
    n = 2 * CHUNK_SIZE + 17
    ev = sample_events(balanced_state, n, BasisPolicy.fixed_x(), seed=3,
                       grid=default_grid)
    assert len(ev) == n
    assert set(np.unique(ev.stream_id)) == {0, 1, 2}
    # chunks are concatenated in order
    assert np.all(np.diff(ev.stream_id) >= 0)


def test_policy_validation():
    with pytest.raises(ValidationError):
        BasisPolicy(kind="diagonal")
    with pytest.raises(ValidationError):
        BasisPolicy.per_event_random(p_z=1.5)
    with pytest.raises(ValidationError):
        BasisPolicy(kind="custom")


def test_policy_bases():
    assert set(BasisPolicy.per_event_random().bases()) == {"Z", "X"}
    assert set(BasisPolicy.fixed_z().bases()) == {"Z"}
    custom = BasisPolicy.custom(PostSelectionBasis.from_axis(0.5, 0.5))
    assert len(custom.bases()) == 1


def test_fixed_policy_uses_single_tag(balanced_state, default_grid):
    ev = sample_events(balanced_state, 2000, BasisPolicy.fixed_x(), seed=5,
                       grid=default_grid)
    assert set(np.unique(ev.basis)) == {"X"}
    assert set(np.unique(ev.outcome)) <= {"plus", "minus"}


def test_random_policy_respects_p_z(balanced_state, default_grid):
    ev = sample_events(balanced_state, 100_000,
                       BasisPolicy.per_event_random(p_z=0.25), seed=11,
                       grid=default_grid)
    frac_z = np.mean(ev.basis == "Z")
    assert abs(frac_z - 0.25) < 3.0 * np.sqrt(0.25 * 0.75 / 100_000)


def test_outcome_fractions(events, balanced_state, default_grid):
    """Spin outcome frequencies track the window-conditioned probabilities."""
    dens = psi2_density(balanced_state, default_grid.points)
    window_mass = float(np.dot(default_grid.weights, dens))

    z = events.basis == "Z"
    frac_up = np.mean(events.outcome[z] == "up")
    assert abs(frac_up - 0.5) < 3.0 * np.sqrt(0.25 / z.sum())

    from qeraser import Spinor, conditional_amplitude
    chi = conditional_amplitude(balanced_state, Spinor.spin_plus(),
                                default_grid.points)
    p_plus_window = float(np.dot(default_grid.weights,
                                 np.abs(chi) ** 2)) / window_mass
    x_mask = events.basis == "X"
    frac_plus = np.mean(events.outcome[x_mask] == "plus")
    sigma = np.sqrt(p_plus_window * (1.0 - p_plus_window) / x_mask.sum())
    assert abs(frac_plus - p_plus_window) < 3.0 * sigma


def test_sampled_positions_avoid_zero_mass_cells(default_grid):
    # gaussian slits on a wide window leave far-tail cells with zero mass
    grid = Grid(-50.0, 50.0, 2001)
    state = EraserState.balanced(
        alpha=None, beta=None, envelope="gaussian", width=1.0)
    ev = sample_events(state, 20_000, BasisPolicy.fixed_z(), seed=2, grid=grid)
    dens = psi2_density(state, grid.points)
    cells = 0.5 * (dens[:-1] + dens[1:])
    idx = np.clip(np.searchsorted(grid.points, ev.x, side="right") - 1,
                  0, len(cells) - 1)
    assert np.all(cells[idx] > 0.0)
    assert np.max(np.abs(ev.x)) < 40.0


def test_positions_lie_inside_their_cells(balanced_state, default_grid):
    ev = sample_events(balanced_state, 5000, BasisPolicy.fixed_z(), seed=21,
                       grid=default_grid)
    assert np.all(ev.x >= default_grid.x_min)
    assert np.all(ev.x <= default_grid.x_max)


def test_histogram_counts_and_density(events, default_grid):
    hist = histogram_events(events.x, default_grid, cells_per_bin=10)
    assert hist.counts.sum() == len(events)
    assert len(hist.centers) == 400
    # density integrates to one over the histogram support
    assert float(np.sum(hist.density() * hist.widths)) == pytest.approx(1.0, abs=1e-12)


def test_histogram_requires_divisible_binning(events, default_grid):
    from qeraser import ConfigurationError
    with pytest.raises(ConfigurationError):
        histogram_events(events.x, default_grid, cells_per_bin=7)


def test_subensemble_histogram_totals(events, default_grid):
    h_plus = subensemble_histogram(events, "X", "plus", default_grid)
    h_minus = subensemble_histogram(events, "X", "minus", default_grid)
    n_x = int(np.sum(events.basis == "X"))
    assert int(h_plus.counts.sum() + h_minus.counts.sum()) == n_x
    # density uses the parent-ensemble total, so the pair sums to the marginal
    assert h_plus.total == len(events)


def test_missing_subensemble_raises(events, default_grid):
    with pytest.raises(EmptySubEnsembleError):
        subensemble_histogram(events, "Y", "plus", default_grid)


def test_recombination_is_count_exact(events, default_grid):
    for tag, basis in (("Z", PostSelectionBasis.z()), ("X", PostSelectionBasis.x())):
        assert recombine_check(events, basis, tag, default_grid) == 0
        # re-binning after the fact cannot break a partition
        assert recombine_check(events, basis, tag, default_grid,
                               cells_per_bin=25) == 0


def test_chi_square_accepts_the_true_model(events, balanced_state, default_grid):
    fit = chi_square_subensemble(events, balanced_state, PostSelectionBasis.x(),
                                 "X", 0, default_grid)
    assert 0.8 < fit.reduced < 1.2
    assert fit.p_value > 1e-4
    assert fit.bins_used > 100


def test_chi_square_rejects_a_wrong_model(events, default_grid):
    # a single-slit model predicts no fringes for the erasing sub-ensemble
    wrong_state = EraserState.balanced(alpha=1.0, beta=0.0)
    wrong = chi_square_subensemble(events, wrong_state, PostSelectionBasis.x(),
                                   "X", 0, default_grid)
    assert wrong.reduced > 5.0


def test_expected_counts_match_subset_size(events, balanced_state, default_grid):
    n_plus = int(np.sum((events.basis == "X") & (events.outcome == "plus")))
    expected = expected_subensemble_counts(balanced_state, PostSelectionBasis.x(),
                                           0, default_grid, n_plus)
    assert expected.sum() == pytest.approx(n_plus, rel=1e-12)


def test_visibility_separates_eraser_from_tagger(events, balanced_state,
                                                 default_grid):
    ref = lambda xs: psi2_density(balanced_state, xs)
    vis_plus = fringe_visibility(
        subensemble_histogram(events, "X", "plus", default_grid), ref)
    vis_up = fringe_visibility(
        subensemble_histogram(events, "Z", "up", default_grid), ref)
    assert vis_plus > 0.9
    assert vis_up < 0.1


def test_marginal_invariance_across_policies(balanced_state, default_grid):
    report = marginal_invariance_test(
        balanced_state, 200_000,
        [BasisPolicy.fixed_z(), BasisPolicy.fixed_x(),
         BasisPolicy.per_event_random()],
        seed=SEED, grid=default_grid)
    assert len(report.pairs) == 3
    assert report.passed
    for pair in report.pairs:
        assert pair.p_value >= report.threshold


def test_marginal_invariance_needs_two_policies(balanced_state, default_grid):
    with pytest.raises(ValidationError):
        marginal_invariance_test(balanced_state, 1000, [BasisPolicy.fixed_z()],
                                 seed=1, grid=default_grid)


def test_event_csv_roundtrip(tmp_path, balanced_state, default_grid):
    ev = sample_events(balanced_state, 1000, BasisPolicy.per_event_random(),
                       seed=13, grid=default_grid)
    path = tmp_path / "events.csv"
    sidecar = write_events(ev, str(path))
    back = read_events(str(path))
    assert np.allclose(back.x, ev.x, atol=1e-9)
    assert np.array_equal(back.basis, ev.basis)
    assert np.array_equal(back.outcome, ev.outcome)
    assert np.array_equal(back.stream_id, ev.stream_id)
    meta = json.loads(open(sidecar).read())
    assert meta["seed"] == 13
    assert meta["n"] == 1000
    assert back.meta["seed"] == 13


def test_event_files_are_byte_stable(tmp_path, balanced_state, default_grid):
    paths = []
    for run in ("a", "b"):
        ev = sample_events(balanced_state, 2000, BasisPolicy.fixed_x(), seed=42,
                           grid=default_grid, workers=1 if run == "a" else 4)
        p = tmp_path / f"events_{run}.csv"
        write_events(ev, str(p))
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
