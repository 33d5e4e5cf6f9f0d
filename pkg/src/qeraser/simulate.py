"""Monte Carlo detection events with spin tagging and erasure policies.

Events are drawn from the discretized two-slit model in two stages that
mirror the physics: the landing position comes from the fringeless tagged
density (the same density no matter which basis anyone measures later), and
the spin outcome is then drawn from the conditional outcome probability at
that position for whichever basis the policy assigns to the event.  Sorting
the events by (basis, outcome) afterwards reproduces fringed or fringeless
sub-ensembles from one stored stream — re-partitioning, not re-sampling.

The position sampler treats each grid cell as a piecewise-constant slab
whose mass is the trapezoid of the density over that cell; inverse-CDF
lookup lands in a cell (zero-mass cells can never be hit) and the position
is uniform inside it.  All randomness comes from counter-based Philox
streams keyed by (seed, chunk index) with a fixed chunk size and a fixed
draw order, so results are byte-identical for any worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .errors import (ConfigurationError, EmptySubEnsembleError,
                     ValidationError)
from .hilbert import EraserState, Grid, psi2_density
from .weak_values import PostSelectionBasis, joint_subensemble_density
from ._version import __version__

#: Events per RNG stream.  Fixed: changing it changes every sampled stream.
CHUNK_SIZE = 1 << 16

#: Statistical rejection threshold for the invariance checks: two-sided 3σ.
P_THRESHOLD = float(stats.norm.sf(3.0))

POLICY_FIXED_Z = "fixed-z"
POLICY_FIXED_X = "fixed-x"
POLICY_RANDOM = "per-event-random"
POLICY_CUSTOM = "custom"


@dataclass(frozen=True)
class BasisPolicy:
    """Rule assigning a tag-measurement basis to each detection event."""

    kind: str
    p_z: float = 0.5
    basis: PostSelectionBasis | None = None

    def __post_init__(self):
        if self.kind not in (POLICY_FIXED_Z, POLICY_FIXED_X, POLICY_RANDOM,
                             POLICY_CUSTOM):
            raise ValidationError(f"unknown policy kind {self.kind!r}")
        if not 0.0 <= self.p_z <= 1.0:
            raise ValidationError(f"p_z must lie in [0, 1], got {self.p_z!r}")
        if self.kind == POLICY_CUSTOM and self.basis is None:
            raise ValidationError("custom policy needs an explicit basis")

    @classmethod
    def fixed_z(cls) -> "BasisPolicy":
        return cls(POLICY_FIXED_Z)

    @classmethod
    def fixed_x(cls) -> "BasisPolicy":
        return cls(POLICY_FIXED_X)

    @classmethod
    def per_event_random(cls, p_z: float = 0.5) -> "BasisPolicy":
        """Each event independently gets Z with probability p_z, else X."""
        return cls(POLICY_RANDOM, p_z=p_z)

    @classmethod
    def custom(cls, basis: PostSelectionBasis) -> "BasisPolicy":
        return cls(POLICY_CUSTOM, basis=basis)

    def bases(self) -> dict[str, PostSelectionBasis]:
        """Basis tag -> basis, for every tag this policy can emit."""
        if self.kind == POLICY_FIXED_Z:
            return {"Z": PostSelectionBasis.z()}
        if self.kind == POLICY_FIXED_X:
            return {"X": PostSelectionBasis.x()}
        if self.kind == POLICY_RANDOM:
            return {"Z": PostSelectionBasis.z(), "X": PostSelectionBasis.x()}
        return {self.basis.name or "custom": self.basis}

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == POLICY_RANDOM:
            out["p_z"] = self.p_z
        if self.kind == POLICY_CUSTOM:
            out["basis"] = self.basis.name or "custom"
        return out


@dataclass(frozen=True, eq=False)
class EventSet:
    """Columnar store of detection events plus the metadata to regrow them."""

    x: np.ndarray
    basis: np.ndarray
    outcome: np.ndarray
    stream_id: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __len__(self) -> int:
        return self.x.shape[0]

    def select(self, basis: str | None = None,
               outcome: str | None = None) -> np.ndarray:
        """Boolean mask of events matching the given tags."""
        mask = np.ones(len(self), dtype=bool)
        if basis is not None:
            mask &= self.basis == basis
        if outcome is not None:
            mask &= self.outcome == outcome
        return mask


def _outcome_labels(basis: PostSelectionBasis) -> tuple[str, str]:
    return (basis.first.name or "first", basis.second.name or "second")


def _cell_masses(density: np.ndarray, spacing: float) -> np.ndarray:
    """Trapezoid mass of each cell between adjacent grid points."""
    return 0.5 * (density[:-1] + density[1:]) * spacing


class _SamplingTables:
    """Precomputed per-cell masses and conditional outcome probabilities."""

    def __init__(self, state: EraserState, grid: Grid, policy: BasisPolicy):
        x = grid.points
        marginal = psi2_density(state, x)
        self.x_left = x[:-1]
        self.spacing = grid.spacing
        masses = _cell_masses(marginal, grid.spacing)
        self.cumulative = np.cumsum(masses)
        self.n_cells = masses.shape[0]
        self.p_first: dict[str, np.ndarray] = {}
        self.labels: dict[str, tuple[str, str]] = {}
        for tag, basis in policy.bases().items():
            first_mass = _cell_masses(
                joint_subensemble_density(state, basis.first, x), grid.spacing)
            with np.errstate(invalid="ignore", divide="ignore"):
                p = np.where(masses > 0.0, first_mass / masses, 0.5)
            self.p_first[tag] = np.clip(p, 0.0, 1.0)
            self.labels[tag] = _outcome_labels(basis)


def _sample_chunk(chunk_index: int, count: int, seed: int,
                  policy: BasisPolicy, tables: _SamplingTables):
    rng = np.random.Generator(
        np.random.Philox(np.random.SeedSequence((seed, chunk_index))))
    # fixed draw order keeps streams comparable across policies
    u_basis = rng.random(count)
    u_pos = rng.random(count)
    u_cell = rng.random(count)
    u_outcome = rng.random(count)

    if policy.kind == POLICY_RANDOM:
        basis = np.where(u_basis < policy.p_z, "Z", "X")
    else:
        tag = next(iter(policy.bases()))
        basis = np.full(count, tag)

    total = tables.cumulative[-1]
    idx = np.searchsorted(tables.cumulative, u_pos * total, side="right")
    idx = np.minimum(idx, tables.n_cells - 1)
    x = tables.x_left[idx] + u_cell * tables.spacing

    outcome = np.empty(count, dtype="<U16")
    for tag, p_first in tables.p_first.items():
        mask = basis == tag
        if not np.any(mask):
            continue
        first, second = tables.labels[tag]
        outcome[mask] = np.where(u_outcome[mask] < p_first[idx[mask]],
                                 first, second)
    stream = np.full(count, chunk_index, dtype=np.int64)
    return x, basis, outcome, stream


def sample_events(state: EraserState, n: int, policy: BasisPolicy, seed: int,
                  grid: Grid | None = None, workers: int = 1) -> EventSet:
    """Draw ``n`` detection events under the given basis policy.

    ``workers`` only parallelizes over chunks; chunk streams are keyed by
    (seed, chunk index) and merged in chunk order, so the result is
    identical for any worker count.
    """
    if n <= 0:
        raise ValidationError("event count must be positive")
    if grid is None:
        grid = Grid.default()
    tables = _SamplingTables(state, grid, policy)
    n_chunks = math.ceil(n / CHUNK_SIZE)
    counts = [CHUNK_SIZE] * (n_chunks - 1) + [n - CHUNK_SIZE * (n_chunks - 1)]

    def run(chunk_index: int):
        return _sample_chunk(chunk_index, counts[chunk_index], seed, policy, tables)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    else:
        parts = [run(i) for i in range(n_chunks)]

    meta = {
        "version": __version__,
        "seed": int(seed),
        "n": int(n),
        "policy": policy.describe(),
        "state": _state_params(state),
        "grid": {"x_min": grid.x_min, "x_max": grid.x_max,
                 "n_points": grid.n_points},
    }
    return EventSet(
        x=np.concatenate([p[0] for p in parts]),
        basis=np.concatenate([p[1] for p in parts]),
        outcome=np.concatenate([p[2] for p in parts]),
        stream_id=np.concatenate([p[3] for p in parts]),
        meta=meta,
    )


def _state_params(state: EraserState) -> dict:
    return {
        "alpha": [float(np.real(state.alpha)), float(np.imag(state.alpha))],
        "beta": [float(np.real(state.beta)), float(np.imag(state.beta))],
        "psi_a": asdict(state.psi_a),
        "psi_b": asdict(state.psi_b),
    }


# -- histograms ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Histogram:
    """Counts over bins whose edges are unions of grid cells.

    ``total`` is the size of the parent event set, which may exceed the sum
    of ``counts`` when the histogram covers only a sub-ensemble; the density
    then integrates to (subset count)/(total count), so sub-ensemble
    densities stack up to the full one.
    """

    edges: np.ndarray
    counts: np.ndarray
    total: int
    mode: str = "counts"

    def __post_init__(self):
        if self.counts.shape[0] != self.edges.shape[0] - 1:
            raise ValidationError("counts/edges length mismatch")
        if self.mode not in ("counts", "density"):
            raise ValidationError(f"unknown normalization mode {self.mode!r}")
        if self.total < int(self.counts.sum()):
            raise ValidationError("total cannot be smaller than the counts")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def density(self) -> np.ndarray:
        if self.total == 0:
            raise ValidationError("empty histogram has no density")
        return self.counts / (self.total * self.widths)

    def values(self) -> np.ndarray:
        return self.density() if self.mode == "density" else self.counts


def _bin_edges(grid: Grid, cells_per_bin: int) -> np.ndarray:
    n_cells = grid.n_points - 1
    if cells_per_bin < 1 or n_cells % cells_per_bin != 0:
        raise ConfigurationError(
            f"{cells_per_bin} cells per bin does not tile {n_cells} grid cells")
    return grid.points[::cells_per_bin]


def histogram_events(x: np.ndarray, grid: Grid, cells_per_bin: int = 10,
                     total: int | None = None, mode: str = "counts") -> Histogram:
    """Histogram event positions on bins aligned to the sampling grid."""
    edges = _bin_edges(grid, cells_per_bin)
    counts, _ = np.histogram(x, bins=edges)
    return Histogram(edges=edges, counts=counts.astype(np.int64),
                     total=int(x.shape[0] if total is None else total),
                     mode=mode)


def subensemble_histogram(events: EventSet, basis: str, outcome: str,
                          grid: Grid, cells_per_bin: int = 10) -> Histogram:
    """Histogram of the events with the given basis tag and outcome."""
    mask = events.select(basis=basis, outcome=outcome)
    if not np.any(mask):
        raise EmptySubEnsembleError(
            f"no events with basis={basis!r}, outcome={outcome!r}")
    return histogram_events(events.x[mask], grid, cells_per_bin,
                            total=len(events))


def expected_subensemble_counts(state: EraserState, basis: PostSelectionBasis,
                                outcome_index: int, grid: Grid,
                                subset_count: int,
                                cells_per_bin: int = 10) -> np.ndarray:
    """Expected per-bin counts for a sub-ensemble, from the sampled measure.

    Uses the same trapezoid cell masses the sampler draws from, aggregated
    into histogram bins and scaled to the observed subset size — i.e. the
    exact discrete distribution the events came from, not a continuum
    approximation of it.
    """
    x = grid.points
    f = basis.members()[outcome_index]
    masses = _cell_masses(joint_subensemble_density(state, f, x), grid.spacing)
    per_bin = masses.reshape(-1, cells_per_bin).sum(axis=1)
    return subset_count * per_bin / masses.sum()


@dataclass(frozen=True)
class ChiSquareResult:
    statistic: float
    dof: int
    reduced: float
    p_value: float
    bins_used: int


def chi_square_subensemble(events: EventSet, state: EraserState,
                           basis: PostSelectionBasis, basis_tag: str,
                           outcome_index: int, grid: Grid,
                           cells_per_bin: int = 10,
                           min_expected: float = 10.0) -> ChiSquareResult:
    """Goodness of fit of a sub-ensemble histogram to its target density."""
    outcome = _outcome_labels(basis)[outcome_index]
    hist = subensemble_histogram(events, basis_tag, outcome, grid, cells_per_bin)
    subset = int(hist.counts.sum())
    expected = expected_subensemble_counts(state, basis, outcome_index, grid,
                                           subset, cells_per_bin)
    keep = expected >= min_expected
    observed = hist.counts[keep].astype(float)
    expected = expected[keep]
    # renormalize within the kept bins so totals match exactly
    expected *= observed.sum() / expected.sum()
    statistic = float(np.sum((observed - expected) ** 2 / expected))
    dof = int(keep.sum()) - 1
    if dof <= 0:
        raise ValidationError("too few bins above the expected-count floor")
    return ChiSquareResult(
        statistic=statistic,
        dof=dof,
        reduced=statistic / dof,
        p_value=float(stats.chi2.sf(statistic, dof)),
        bins_used=int(keep.sum()),
    )


def fringe_visibility(hist: Histogram, reference_density,
                      window: tuple[float, float] = (-3.0, 3.0)) -> float:
    """(max - min)/(max + min) of the envelope-normalized pattern.

    The histogram density is divided by ``reference_density`` (the
    unconditioned, fringeless density) at the bin centers before taking the
    contrast, so the slowly varying single-slit envelope does not register
    as spurious fringing; the window keeps the comparison where counts are
    plentiful.
    """
    centers = hist.centers
    keep = (centers >= window[0]) & (centers <= window[1])
    ref = np.asarray(reference_density(centers[keep]), dtype=float)
    if np.any(ref <= 0.0):
        raise ValidationError("reference density must be positive on the window")
    pattern = hist.density()[keep] / ref
    top, bottom = float(np.max(pattern)), float(np.min(pattern))
    if top + bottom == 0.0:
        raise ValidationError("empty pattern has no visibility")
    return (top - bottom) / (top + bottom)


# -- invariance checks ---------------------------------------------------------


def recombine_check(events: EventSet, basis: PostSelectionBasis, basis_tag: str,
                    grid: Grid, cells_per_bin: int = 10) -> int:
    """Max absolute count mismatch between recombined halves and the whole.

    Splitting the events with a given basis tag by outcome and adding the
    two histograms back together must reproduce the all-events histogram of
    that tag bin-exactly; the sub-ensembles are a partition, nothing more.
    """
    mask = events.select(basis=basis_tag)
    if not np.any(mask):
        raise EmptySubEnsembleError(f"no events with basis={basis_tag!r}")
    whole = histogram_events(events.x[mask], grid, cells_per_bin)
    first, second = _outcome_labels(basis)
    part1 = subensemble_histogram(events, basis_tag, first, grid, cells_per_bin)
    part2 = subensemble_histogram(events, basis_tag, second, grid, cells_per_bin)
    return int(np.max(np.abs(whole.counts - part1.counts - part2.counts)))


@dataclass(frozen=True)
class PairComparison:
    label_a: str
    label_b: str
    statistic: float
    dof: int
    p_value: float
    consistent: bool


@dataclass(frozen=True)
class MarginalInvarianceReport:
    pairs: tuple
    threshold: float

    @property
    def passed(self) -> bool:
        return all(p.consistent for p in self.pairs)


def _two_sample_chi_square(counts_a: np.ndarray, counts_b: np.ndarray,
                           min_pooled: float = 10.0) -> tuple[float, int, float]:
    pooled = counts_a + counts_b
    keep = pooled >= min_pooled
    a, b = counts_a[keep].astype(float), counts_b[keep].astype(float)
    dof = int(keep.sum()) - 1
    if dof <= 0:
        raise ValidationError("too few populated bins for a two-sample test")
    # equal-size samples: the homogeneity statistic reduces to sum (a-b)^2/(a+b)
    statistic = float(np.sum((a - b) ** 2 / (a + b)))
    return statistic, dof, float(stats.chi2.sf(statistic, dof))


def marginal_invariance_test(state: EraserState, n: int, policies,
                             seed: int, grid: Grid | None = None,
                             cells_per_bin: int = 10,
                             workers: int = 1) -> MarginalInvarianceReport:
    """Check that the x-marginal does not depend on the tagging policy.

    Each policy gets its own seed offset (the point is statistical
    consistency of independent runs, not replaying one stream) and the
    all-events histograms are compared pairwise with a two-sample
    chi-square; a pair is inconsistent when its p-value drops below the 3σ
    threshold.
    """
    policies = list(policies)
    if len(policies) < 2:
        raise ValidationError("need at least two policies to compare")
    if grid is None:
        grid = Grid.default()
    labeled = []
    for offset, policy in enumerate(policies):
        events = sample_events(state, n, policy, seed + offset, grid, workers)
        hist = histogram_events(events.x, grid, cells_per_bin)
        label = policy.describe()["kind"]
        labeled.append((label, hist))
    pairs = []
    for i in range(len(labeled)):
        for j in range(i + 1, len(labeled)):
            stat, dof, p = _two_sample_chi_square(labeled[i][1].counts,
                                                  labeled[j][1].counts)
            pairs.append(PairComparison(
                label_a=labeled[i][0], label_b=labeled[j][0],
                statistic=stat, dof=dof, p_value=p,
                consistent=bool(p >= P_THRESHOLD)))
    return MarginalInvarianceReport(pairs=tuple(pairs), threshold=P_THRESHOLD)


# -- event file I/O ------------------------------------------------------------


def _sidecar_path(path: str) -> str:
    if path.endswith(".csv"):
        return path[:-4] + ".meta.json"
    return path + ".meta.json"


def write_events(events: EventSet, path: str) -> str:
    """Write events as CSV plus a JSON sidecar; returns the sidecar path.

    The sidecar carries everything needed to regenerate the stream (seed,
    count, policy, state parameters, grid, package version).  Output is
    deterministic: same events and metadata, same bytes.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "basis", "outcome", "stream_id"])
        for x, basis, outcome, stream in zip(events.x, events.basis,
                                             events.outcome, events.stream_id):
            writer.writerow(["%.12g" % x, basis, outcome, int(stream)])
    sidecar = _sidecar_path(path)
    with open(sidecar, "w") as fh:
        json.dump(events.meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return sidecar


def read_events(path: str) -> EventSet:
    """Read an event CSV (and its sidecar, if present) back into memory."""
    xs, bases, outcomes, streams = [], [], [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != ["x", "basis", "outcome", "stream_id"]:
            raise ValidationError(f"unrecognized event file header: {header!r}")
        for row in reader:
            xs.append(float(row[0]))
            bases.append(row[1])
            outcomes.append(row[2])
            streams.append(int(row[3]))
    meta = {}
    try:
        with open(_sidecar_path(path)) as fh:
            meta = json.load(fh)
    except FileNotFoundError:
        pass
    return EventSet(x=np.array(xs, dtype=float),
                    basis=np.array(bases, dtype="<U16"),
                    outcome=np.array(outcomes, dtype="<U16"),
                    stream_id=np.array(streams, dtype=np.int64),
                    meta=meta)
