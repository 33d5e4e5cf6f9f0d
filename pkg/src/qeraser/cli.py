"""Command-line front end.

Subcommands
-----------
curves       screen densities (interfering, tagged, single-slit)
fig1         tagged density with the four conditional-density curves
weak-values  conditional densities for a chosen post-selection basis
simulate     Monte Carlo events, sub-ensemble histograms, invariance reports
pointer      coupling sweep of the weak-measurement pointer readout
check        invariant suite as a pass/fail table

Every data-producing command writes 12-significant-digit CSV plus a JSON
metadata sidecar (configuration, seed, package version — never timestamps,
so identical runs give identical bytes) and, unless --no-plots is given,
renders a PNG figure next to the CSV.

Exit codes: 0 success; 2 usage errors (argparse); 3 invalid configuration or
values; 4 I/O failures; 5 a check or statistical gate failed.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import os
import sys

import numpy as np

from ._version import __version__
from .checks import run_all
from .config import ENV_OUTPUT_DIR, POLICY_CHOICES, RunConfig
from .errors import QeraserError
from .hilbert import Grid, PRESET_SPINORS, psi1_density, psi2_density
from .pointer import weak_value_sweep
from .simulate import (BasisPolicy, chi_square_subensemble, fringe_visibility,
                       histogram_events, marginal_invariance_test,
                       recombine_check, sample_events, subensemble_histogram,
                       write_events)
from .weak_values import (PostSelectionBasis, post_selection_probability,
                          weak_value)

_EXIT_OK = 0
_EXIT_INVALID = 3
_EXIT_IO = 4
_EXIT_CHECK_FAILED = 5


# -- small shared helpers -------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return "%.12g" % value
    return str(value)


def _write_csv(path: str, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_meta(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _meta(command: str, config: RunConfig, **extra) -> dict:
    payload = {
        "command": command,
        "version": __version__,
        "config": dataclasses.asdict(config),
    }
    payload.update(extra)
    return payload


def _preset_basis(tag: str, theta: float, phi: float) -> PostSelectionBasis:
    if tag == "z":
        return PostSelectionBasis.z()
    if tag == "x":
        return PostSelectionBasis.x()
    return PostSelectionBasis.from_axis(theta, phi)


# -- subcommands ----------------------------------------------------------------


def cmd_curves(config: RunConfig, outdir: str, args) -> int:
    state = config.build_state()
    grid = config.build_grid()
    x = grid.points
    table = {
        "psi1_density": psi1_density(state.alpha, state.beta,
                                     state.psi_a, state.psi_b, x),
        "psi2_density": psi2_density(state, x),
        "|psi_a|^2": state.psi_a.modulus_squared(x),
        "|psi_b|^2": state.psi_b.modulus_squared(x),
    }
    csv_path = os.path.join(outdir, "curves.csv")
    _write_csv(csv_path, ["x"] + list(table),
               zip(x, *table.values()))
    _write_meta(os.path.join(outdir, "curves.meta.json"),
                _meta("curves", config))
    if not args.no_plots:
        from .plots import plot_curves
        plot_curves(x, table, os.path.join(outdir, "curves.png"))
    print(f"wrote {csv_path}")
    return _EXIT_OK


def cmd_fig1(config: RunConfig, outdir: str, args) -> int:
    """Central reproduction: fringeless density + four conditional curves.

    Defaults to the idealized closed-form curves so the printed values hit
    their textbook positions (the + curve doubles the tagged density at the
    center); pass --method exact to keep the overlap correction instead.
    """
    method = args.method or "idealized"
    state = config.build_state()
    grid = config.build_grid()
    x = grid.points

    def curve(name: str) -> np.ndarray:
        return np.real(weak_value(state, PRESET_SPINORS[name](), x, grid,
                                  method).value)

    table = {
        "psi2_density": psi2_density(state, x),
        "wv_plus": curve("plus"),
        "wv_minus": curve("minus"),
        "wv_up": curve("up"),
        "wv_down": curve("down"),
        "psi1_density": psi1_density(state.alpha, state.beta,
                                     state.psi_a, state.psi_b, x),
    }
    csv_path = os.path.join(outdir, "fig1.csv")
    _write_csv(csv_path, ["x"] + list(table), zip(x, *table.values()))

    plus = PRESET_SPINORS["plus"]()
    p_exact = post_selection_probability(state, plus, grid, "exact")
    p_ideal = post_selection_probability(state, plus, grid, "idealized")
    _write_meta(os.path.join(outdir, "fig1.meta.json"),
                _meta("fig1", config, method=method,
                      p_plus_exact=p_exact, p_plus_idealized=p_ideal,
                      p_plus_difference=p_exact - p_ideal))
    if not args.no_plots:
        from .plots import plot_fig1
        plot_fig1(x, table, os.path.join(outdir, "fig1.png"))
    mid = int(np.argmin(np.abs(x)))
    print(f"wrote {csv_path}")
    print(f"at x={x[mid]:g}: psi2={table['psi2_density'][mid]:.6f} "
          f"wv_plus={table['wv_plus'][mid]:.6f} wv_minus={table['wv_minus'][mid]:.6f}")
    print(f"P(+): exact {p_exact:.6f}, idealized {p_ideal:.6f}, "
          f"difference {p_exact - p_ideal:+.6f}")
    return _EXIT_OK


def cmd_weak_values(config: RunConfig, outdir: str, args) -> int:
    method = args.method or config.method
    state = config.build_state()
    grid = config.build_grid()
    basis = _preset_basis(args.basis, args.theta, args.phi)
    x = grid.points
    labels = []
    columns = []
    probs = {}
    for position, f in zip(("first", "second"), basis.members()):
        label = f.name if f.name and "(" not in f.name else position
        labels.append(f"wv_{label}")
        columns.append(np.real(weak_value(state, f, x, grid, method).value))
        probs[label] = post_selection_probability(state, f, grid, method)
    dens2 = psi2_density(state, x)
    csv_path = os.path.join(outdir, "weak_values.csv")
    _write_csv(csv_path, ["x", "psi2_density"] + labels,
               zip(x, dens2, *columns))
    _write_meta(os.path.join(outdir, "weak_values.meta.json"),
                _meta("weak-values", config, method=method, basis=basis.name,
                      probabilities=probs))
    if not args.no_plots:
        from .plots import plot_weak_values
        plot_weak_values(x, labels[0], columns[0], labels[1], columns[1],
                         psi2_density(state, x),
                         os.path.join(outdir, "weak_values.png"))
    print(f"wrote {csv_path}")
    return _EXIT_OK


def _histogram_rows(hist):
    return zip(hist.centers, hist.density(), hist.counts)


def cmd_simulate(config: RunConfig, outdir: str, args) -> int:
    state = config.build_state()
    grid = config.build_grid()
    policy = config.build_policy()
    events = sample_events(state, config.n, policy, config.seed, grid)
    events_path = os.path.join(outdir, "events.csv")
    write_events(events, events_path)

    hist_all = histogram_events(events.x, grid)
    _write_csv(os.path.join(outdir, "histogram_all.csv"),
               ["x_center", "density", "count"], _histogram_rows(hist_all))

    report = {
        "command": "simulate",
        "version": __version__,
        "seed": config.seed,
        "n": config.n,
        "policy": policy.describe(),
        "recombine": {},
        "subensembles": {},
    }
    panels = [("all events", hist_all, grid.points, psi2_density(state, grid.points))]
    recombine_ok = True
    for tag, basis in policy.bases().items():
        residual = recombine_check(events, basis, tag, grid)
        report["recombine"][tag] = residual
        recombine_ok = recombine_ok and residual == 0
        for index, f in enumerate(basis.members()):
            outcome = f.name or ("first", "second")[index]
            hist = subensemble_histogram(events, tag, outcome, grid)
            name = f"histogram_{tag}_{outcome}".lower()
            _write_csv(os.path.join(outdir, name + ".csv"),
                       ["x_center", "density", "count"], _histogram_rows(hist))
            fit = chi_square_subensemble(events, state, basis, tag, index, grid)
            visibility = fringe_visibility(
                hist, lambda xs: psi2_density(state, xs))
            report["subensembles"][f"{tag}/{outcome}"] = {
                "count": int(hist.counts.sum()),
                "chi2_reduced": fit.reduced,
                "chi2_dof": fit.dof,
                "p_value": fit.p_value,
                "visibility": visibility,
            }
            prob = post_selection_probability(state, f, grid, "exact")
            overlay = (np.abs(state.alpha * np.conj(f.up) * state.psi_a(grid.points)
                              + state.beta * np.conj(f.down) * state.psi_b(grid.points)) ** 2)
            # scale to the histogram's parent-total normalization
            panels.append((f"{tag}/{outcome}", hist, grid.points,
                           overlay * (hist.counts.sum() / len(events)) / prob))

    marginal = marginal_invariance_test(
        state, config.n,
        [BasisPolicy.fixed_z(), BasisPolicy.fixed_x(),
         BasisPolicy.per_event_random(config.p_z)],
        config.seed, grid)
    report["marginal"] = {
        "threshold": marginal.threshold,
        "passed": marginal.passed,
        "pairs": [dataclasses.asdict(pair) for pair in marginal.pairs],
    }
    passed = recombine_ok and marginal.passed
    report["passed"] = passed
    _write_meta(os.path.join(outdir, "simulate_report.json"), report)
    if not args.no_plots:
        from .plots import plot_histograms
        plot_histograms(panels, os.path.join(outdir, "histograms.png"))
    print(f"wrote {events_path} ({len(events)} events)")
    for tag, residual in report["recombine"].items():
        print(f"recombine[{tag}]: max bin residual {residual}")
    for pair in marginal.pairs:
        verdict = "consistent" if pair.consistent else "INCONSISTENT"
        print(f"marginal {pair.label_a} vs {pair.label_b}: "
              f"chi2/dof = {pair.statistic:.1f}/{pair.dof}, p = {pair.p_value:.4f} "
              f"({verdict})")
    print("simulate: PASS" if passed else "simulate: FAIL")
    return _EXIT_OK if passed else _EXIT_CHECK_FAILED


def cmd_pointer(config: RunConfig, outdir: str, args) -> int:
    """Sweep the pointer coupling and report the inferred weak values.

    The particle is discretized on the very wide screen window here (not the
    configured plotting window): the readout is normalized by everything the
    grid can see, so a narrow window would bias every inferred value by the
    missing tail mass.
    """
    state = config.build_state()
    posts = [PRESET_SPINORS[name]() for name in ("up", "down", "plus", "minus")]
    couplings = [0.0] + [g for g in config.sweep]
    rows = weak_value_sweep(state, couplings, posts,
                            bin_center=config.bin_center,
                            bin_width=config.bin_width,
                            order=config.pointer_order,
                            pointer=config.build_pointer())
    csv_path = os.path.join(outdir, "pointer.csv")
    header = ["g", "post_selection", "conditional_shift", "inferred_weak_value",
              "reference_weak_value", "disturbance"]
    _write_csv(csv_path, header, ([row[h] for h in header] for row in rows))
    _write_meta(os.path.join(outdir, "pointer.meta.json"),
                _meta("pointer", config))
    if not args.no_plots:
        from .plots import plot_pointer
        plot_pointer(rows, os.path.join(outdir, "pointer.png"))
    print(f"wrote {csv_path}")
    return _EXIT_OK


def cmd_check(config: RunConfig, outdir: str, args) -> int:
    state = config.build_state()
    grid = config.build_grid()
    results = run_all(state, grid)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{status}  {r.name:<{width}}  {r.value:10.3e}  {r.detail}")
    _write_meta(os.path.join(outdir, "check_report.json"),
                _meta("check", config,
                      results=[dataclasses.asdict(r) for r in results],
                      passed=all(r.passed for r in results)))
    if all(r.passed for r in results):
        print(f"check: all {len(results)} invariants hold")
        return _EXIT_OK
    failed = sum(1 for r in results if not r.passed)
    print(f"check: {failed} of {len(results)} invariants FAILED")
    return _EXIT_CHECK_FAILED


# -- argument parsing -----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH",
                        help="YAML configuration file")
    common.add_argument("--out", metavar="DIR",
                        help=f"output directory (default: ${ENV_OUTPUT_DIR} "
                             "or the working directory)")
    common.add_argument("--seed", type=int, help="RNG seed")
    common.add_argument("--n", type=int, help="number of Monte Carlo events")
    common.add_argument("--policy", choices=POLICY_CHOICES,
                        help="tag-measurement policy for simulation")
    common.add_argument("--method", choices=("exact", "idealized"),
                        help="keep the slit-overlap term (exact) or drop it")
    common.add_argument("--alpha-re", type=float, dest="alpha_re")
    common.add_argument("--alpha-im", type=float, dest="alpha_im")
    common.add_argument("--beta-re", type=float, dest="beta_re")
    common.add_argument("--beta-im", type=float, dest="beta_im")
    common.add_argument("--renormalize", action="store_true",
                        help="rescale alpha, beta to unit norm instead of rejecting")
    common.add_argument("--no-plots", action="store_true",
                        help="skip PNG rendering, write only CSV/JSON")

    parser = argparse.ArgumentParser(
        prog="qeraser",
        description="two-slit quantum-eraser simulator with weak-value readouts")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("curves", parents=[common],
                   help="screen densities").set_defaults(func=cmd_curves)
    sub.add_parser("fig1", parents=[common],
                   help="tagged density with conditional-density curves"
                   ).set_defaults(func=cmd_fig1)
    wv = sub.add_parser("weak-values", parents=[common],
                        help="conditional densities for a post-selection basis")
    wv.add_argument("--basis", choices=("z", "x", "axis"), default="x")
    wv.add_argument("--theta", type=float, default=0.0,
                    help="polar angle for --basis axis")
    wv.add_argument("--phi", type=float, default=0.0,
                    help="azimuthal angle for --basis axis")
    wv.set_defaults(func=cmd_weak_values)
    sub.add_parser("simulate", parents=[common],
                   help="Monte Carlo events and invariance reports"
                   ).set_defaults(func=cmd_simulate)
    sub.add_parser("pointer", parents=[common],
                   help="pointer-coupling sweep").set_defaults(func=cmd_pointer)
    sub.add_parser("check", parents=[common],
                   help="invariant pass/fail table").set_defaults(func=cmd_check)
    return parser


_FLAG_FIELDS = ("seed", "n", "policy", "method", "alpha_re", "alpha_im",
                "beta_re", "beta_im")


def _assemble_config(args) -> RunConfig:
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {}
    for name in _FLAG_FIELDS:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if args.renormalize:
        overrides["renormalize"] = True
    if overrides:
        config = config.updated(overrides)
    config.validate()
    return config


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _assemble_config(args)
        outdir = config.resolve_output_dir(args.out)
        os.makedirs(outdir, exist_ok=True)
        return args.func(config, outdir, args)
    except QeraserError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _EXIT_INVALID
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return _EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
