"""Run configuration: defaults, YAML config files, and flag overrides.

Precedence, lowest to highest: built-in defaults, config file values,
command-line flags; the output directory additionally honors the
QERASER_OUT environment variable when no --out flag is given.
"""

from __future__ import annotations

import dataclasses
import math
import os
from dataclasses import dataclass

import yaml

from .errors import ConfigurationError, ValidationError
from .hilbert import ENVELOPE_FAMILIES, EraserState, Grid, SlitAmplitude
from .pointer import ORDER_EXACT, ORDER_FIRST, PointerState, WEAK_SWEEP_COUPLINGS
from .simulate import BasisPolicy

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

POLICY_CHOICES = ("z", "x", "random")
ENV_OUTPUT_DIR = "QERASER_OUT"


@dataclass
class RunConfig:
    """Everything a CLI run needs, in flat scalar fields."""

    # two-slit state
    alpha_re: float = _INV_SQRT2
    alpha_im: float = 0.0
    beta_re: float = _INV_SQRT2
    beta_im: float = 0.0
    renormalize: bool = False
    # slit amplitude family
    envelope: str = "lorentzian"
    width: float = 1.0
    k: float = 1.0
    phase_gradient: float = math.pi
    omega: float = 0.0
    t: float = 0.0
    # screen grid
    x_min: float = -20.0
    x_max: float = 20.0
    n_points: int = 4001
    # analysis method
    method: str = "exact"
    # pointer measurement
    sigma: float = 1.0
    g: float = 0.1
    t_int: float = 1.0
    bin_center: float = 0.0
    bin_width: float = 0.01
    pointer_order: str = ORDER_EXACT
    sweep: tuple = WEAK_SWEEP_COUPLINGS
    pointer_half_width: float = 8.0
    pointer_points: int = 1024
    # Monte Carlo
    n: int = 1_000_000
    policy: str = "x"
    p_z: float = 0.5
    seed: int = 20240501
    # output
    output_dir: str | None = None

    # -- construction ---------------------------------------------------------

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
        if not isinstance(raw, dict):
            raise ConfigurationError(f"config file {path!r} must hold a mapping")
        return cls().updated(_flatten(raw))

    def updated(self, values: dict) -> "RunConfig":
        """Copy with the given fields replaced; unknown keys are errors."""
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(values) - known
        if unknown:
            raise ConfigurationError(
                f"unknown configuration keys: {sorted(unknown)}")
        merged = dataclasses.replace(self, **values)
        merged.validate()
        return merged

    # -- validation -----------------------------------------------------------

    def validate(self) -> None:
        if self.envelope not in ENVELOPE_FAMILIES:
            raise ConfigurationError(
                f"envelope must be one of {ENVELOPE_FAMILIES}, got {self.envelope!r}")
        if self.method not in ("exact", "idealized"):
            raise ConfigurationError(
                f"method must be 'exact' or 'idealized', got {self.method!r}")
        if self.policy not in POLICY_CHOICES:
            raise ConfigurationError(
                f"policy must be one of {POLICY_CHOICES}, got {self.policy!r}")
        if self.pointer_order not in (ORDER_EXACT, ORDER_FIRST):
            raise ConfigurationError(
                f"pointer_order must be {ORDER_EXACT!r} or {ORDER_FIRST!r}")
        if self.n <= 0:
            raise ConfigurationError("event count n must be positive")
        if not 0.0 <= self.p_z <= 1.0:
            raise ConfigurationError("p_z must lie in [0, 1]")
        norm_sq = (self.alpha_re ** 2 + self.alpha_im ** 2
                   + self.beta_re ** 2 + self.beta_im ** 2)
        if norm_sq == 0.0:
            raise ValidationError("alpha and beta cannot both vanish")
        if abs(norm_sq - 1.0) > 1e-9 and not self.renormalize:
            raise ValidationError(
                f"|alpha|^2 + |beta|^2 = {norm_sq!r} is not 1; pass --renormalize "
                "to rescale the coefficients")

    # -- builders -------------------------------------------------------------

    def coefficients(self) -> tuple[complex, complex]:
        alpha = complex(self.alpha_re, self.alpha_im)
        beta = complex(self.beta_re, self.beta_im)
        scale = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        # inside the 1e-9 band this is an exact cleanup, beyond it the
        # --renormalize flag opted in
        return alpha / scale, beta / scale

    def build_state(self) -> EraserState:
        alpha, beta = self.coefficients()
        common = dict(envelope=self.envelope, width=self.width, k=self.k,
                      omega=self.omega, t=self.t)
        psi_a = SlitAmplitude(phase_gradient=0.0, **common)
        psi_b = SlitAmplitude(phase_gradient=self.phase_gradient, **common)
        return EraserState(alpha=alpha, beta=beta, psi_a=psi_a, psi_b=psi_b)

    def build_grid(self) -> Grid:
        return Grid(self.x_min, self.x_max, self.n_points)

    def build_pointer(self) -> PointerState:
        return PointerState.gaussian(self.sigma, self.pointer_half_width,
                                     self.pointer_points)

    def build_policy(self) -> BasisPolicy:
        if self.policy == "z":
            return BasisPolicy.fixed_z()
        if self.policy == "x":
            return BasisPolicy.fixed_x()
        return BasisPolicy.per_event_random(self.p_z)

    def resolve_output_dir(self, flag_value: str | None) -> str:
        if flag_value:
            return flag_value
        env = os.environ.get(ENV_OUTPUT_DIR)
        if env:
            return env
        if self.output_dir:
            return self.output_dir
        return "."


_SECTION_KEYS = {
    "state": {"alpha", "beta", "renormalize"},
    "amplitude": {"envelope", "width", "k", "phase_gradient", "omega", "t"},
    "grid": {"x_min", "x_max", "n_points"},
    "pointer": {"sigma", "g", "t_int", "bin_center", "bin_width", "order",
                "sweep", "grid_half_width", "grid_points"},
    "simulation": {"n", "policy", "p_z", "seed"},
}

_RENAMES = {
    ("pointer", "order"): "pointer_order",
    ("pointer", "grid_half_width"): "pointer_half_width",
    ("pointer", "grid_points"): "pointer_points",
}


def _flatten(raw: dict) -> dict:
    """Map the sectioned YAML layout onto RunConfig's flat fields."""
    values: dict = {}
    for key, entry in raw.items():
        if key in ("method", "output_dir"):
            values[key] = entry
            continue
        if key not in _SECTION_KEYS:
            raise ConfigurationError(f"unknown config section {key!r}")
        if not isinstance(entry, dict):
            raise ConfigurationError(f"config section {key!r} must be a mapping")
        allowed = _SECTION_KEYS[key]
        for sub, value in entry.items():
            if sub not in allowed:
                raise ConfigurationError(
                    f"unknown key {sub!r} in config section {key!r}")
            if key == "state" and sub in ("alpha", "beta"):
                try:
                    re, im = float(value[0]), float(value[1])
                except (TypeError, ValueError, IndexError):
                    raise ConfigurationError(
                        f"{sub} must be a [re, im] pair, got {value!r}") from None
                values[f"{sub}_re"] = re
                values[f"{sub}_im"] = im
                continue
            if key == "pointer" and sub == "sweep":
                values["sweep"] = tuple(float(v) for v in value)
                continue
            values[_RENAMES.get((key, sub), sub)] = value
    return values
