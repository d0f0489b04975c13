"""Sensitivity analysis: the basic-versus-generalized decomposition, corrections
for imperfect weights and violated assumptions, and ratio-bias approximations.

Violations are expressed as multipliers.  ``c1`` scales the researcher's
probe-group sizes, ``c2`` scales reported ties or visibility, and ``c3``
captures how far the probe alters are from typical.  Imperfect weights
enter through ``eps_i = w'_i / w_i`` and the K-indices built from it.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from enum import Enum
from typing import Any

import numpy as np
import numpy.typing as npt

from .errors import DegenerateDenominator, ValidationError
from .netsim import CensusQuantities

FloatArray = npt.NDArray[np.float64]


# --------------------------------------------------------------------------
# Decomposition
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Decomposition:
    basic_estimand: float
    phi: float
    delta: float
    tau: float
    generalized_estimand: float

    @property
    def product(self) -> float:
        return self.phi * self.delta * self.tau


class DecompositionMismatch(RuntimeError):
    """The basic and generalized estimands disagree beyond rounding."""


def decompose(cq: CensusQuantities, rtol: float = 1e-12) -> Decomposition:
    """Split the basic estimand into N_H times phi * delta * tau.

    Raises :class:`DecompositionMismatch` if basic / (phi delta tau), the
    generalized estimand and N_H are not equal to ``rtol``.
    """
    for name in ("phi", "delta", "tau"):
        if getattr(cq, name) <= 0:
            raise DegenerateDenominator(f"census {name} is not positive")
    out = Decomposition(cq.basic_estimand, cq.phi, cq.delta, cq.tau, cq.generalized_estimand)
    adjusted = out.basic_estimand / out.product
    for label, val in (("adjusted basic", adjusted), ("generalized", out.generalized_estimand)):
        if abs(val - cq.n_h) > rtol * cq.n_h:
            raise DecompositionMismatch(f"{label} estimand {val!r} differs from N_H={cq.n_h}")
    return out


# --------------------------------------------------------------------------
# Imperfect weights and combined corrections
# --------------------------------------------------------------------------


def k_index(values: Sequence[float] | FloatArray, eps: Sequence[float] | FloatArray) -> float:
    """Correlation times both coefficients of variation, over a finite population.

    Moments use denominator N.  The result equals cov(values, eps) divided by
    the product of the two means, so rescaling ``eps`` leaves it unchanged.
    """
    x = np.asarray(values, dtype=np.float64)
    e = np.asarray(eps, dtype=np.float64)
    if x.shape != e.shape or x.ndim != 1 or len(x) < 2:
        raise ValidationError("k_index needs two equal-length sequences of length >= 2")
    mx, me = x.mean(), e.mean()
    if mx == 0 or me == 0:
        raise DegenerateDenominator("coefficient of variation undefined for zero mean")
    sx, se = x.std(), e.std()
    if sx == 0 or se == 0:
        return 0.0
    cor = float(np.mean((x - mx) * (e - me)) / (sx * se))
    return cor * (sx / mx) * (se / me)


@dataclass(frozen=True)
class SensitivityScenario:
    """Assumed violations; the defaults describe a study with none.

    ``k_reports`` is the K-index of frame weight errors against reports
    about the hidden population, ``k_probes`` against reports about the
    probe groups, and ``k_hidden`` that of hidden-sample weight errors
    against reported visibility.  ``eps_bar`` is the frame mean of the
    weight-error ratios.
    """

    c1: float = 1.0
    c2: float = 1.0
    c3: float = 1.0
    eps_bar: float = 1.0
    k_reports: float = 0.0
    k_probes: float = 0.0
    k_hidden: float = 0.0
    eta: float = 1.0
    delta: float = 1.0
    tau: float = 1.0

    def __post_init__(self) -> None:
        for name in ("c1", "c2", "c3", "eps_bar", "delta"):
            v = getattr(self, name)
            if not v > 0:
                raise ValidationError(f"{name} must be positive, got {v}")
        for name in ("eta", "tau"):
            v = getattr(self, name)
            if not 0 < v <= 1:
                raise ValidationError(f"{name} must lie in (0, 1], got {v}")
        for name in ("k_reports", "k_probes", "k_hidden"):
            if not 1 + getattr(self, name) > 0:
                raise ValidationError(f"1 + {name} must be positive")

    FIELDS = ("c1", "c2", "c3", "eps_bar", "k_reports", "k_probes", "k_hidden",
              "eta", "delta", "tau")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> SensitivityScenario:
        unknown = set(d) - set(cls.FIELDS)
        if unknown:
            raise ValidationError(f"unknown scenario field(s): {', '.join(sorted(unknown))}")
        return cls(**{k: float(v) for k, v in d.items()})


def generalized_multiplier(sc: SensitivityScenario) -> float:
    return (1 + sc.k_hidden) / (sc.eps_bar * (1 + sc.k_reports)) * (sc.c3 * sc.c2 / sc.c1) * sc.eta


def modified_basic_multiplier(sc: SensitivityScenario) -> float:
    return (1 + sc.k_probes) / (1 + sc.k_reports) * (sc.c2 * sc.c3 / sc.c1) * sc.eta / (sc.delta * sc.tau)


def adjust_generalized(est: float, sc: SensitivityScenario) -> float:
    """The N_H implied by a generalized estimate under scenario ``sc``."""
    m = generalized_multiplier(sc)
    if not m > 0:
        raise ValidationError("scenario multiplier must be positive")
    return est * m


def adjust_modified_basic(est: float, sc: SensitivityScenario) -> float:
    """The N_H implied by a modified basic estimate under scenario ``sc``."""
    m = modified_basic_multiplier(sc)
    if not m > 0:
        raise ValidationError("scenario multiplier must be positive")
    return est * m


# --------------------------------------------------------------------------
# Nonsampling multipliers
# --------------------------------------------------------------------------

_MULTIPLIERS = {
    "d_bar_FF": lambda c1, c2, c3: c2 * c3 / c1,
    "d_bar_UF": lambda c1, c2, c3: c2 * c3 / c1,
    "phi": lambda c1, c2, c3: c1 / c2,
    "v_bar_HF": lambda c1, c2, c3: c3 * c2 / c1,
    "delta": lambda c1, c2, c3: c1 / c2,
    "tau": lambda c1, c2, c3: c1 / c2,
    "generalized": lambda c1, c2, c3: 1.0 / c1,
    "adjusted": lambda c1, c2, c3: 1.0 / (c1 * c2 * c3),
}
NONSAMPLING_ROWS = tuple(_MULTIPLIERS)


def nonsampling_multiplier(estimator_id: str, c1: float = 1.0, c2: float = 1.0,
                           c3: float = 1.0) -> float:
    """Factor by which an estimator's effective estimand moves under violations.

    The meaning of ``c1..c3`` depends on the row.  For component estimators
    (``d_bar_FF``, ``d_bar_UF``, ``v_bar_HF``) they are the registry-size,
    reporting and probe-alter multipliers.  For ratios (``phi``, ``delta``,
    ``tau``) and size estimators they are the multipliers that the inputs'
    own estimands carry.
    """
    try:
        f = _MULTIPLIERS[estimator_id]
    except KeyError:
        raise ValidationError(
            f"unknown estimator row {estimator_id!r}; expected one of {', '.join(NONSAMPLING_ROWS)}"
        ) from None
    for c in (c1, c2, c3):
        if not c > 0:
            raise ValidationError("multipliers must be positive")
    return f(c1, c2, c3)


# --------------------------------------------------------------------------
# Double-ratio bias approximation
# --------------------------------------------------------------------------

COMPONENTS = ("x0", "x1", "y0", "y1")


class RatioStructure(str, Enum):
    """Which components of y1 x0 / (x1 y0) an estimator uses, and from which sample.

    Components not listed are constants.  Components from different samples
    are independent.
    """

    FULL = "full"
    PHI = "phi"
    V_BAR_HF = "v_bar_HF"
    D_BAR_HF = "d_bar_HF"
    DELTA = "delta"
    TAU = "tau"
    GENERALIZED = "generalized"
    ADJUSTED = "adjusted"


# component -> sample label ("F" frame, "H" hidden, "S" single shared sample)
_STRUCTURES: dict[RatioStructure, dict[str, str]] = {
    RatioStructure.FULL: {"x0": "S", "x1": "S", "y0": "S", "y1": "S"},
    RatioStructure.PHI: {"x0": "F", "y0": "F"},
    RatioStructure.V_BAR_HF: {"x0": "H", "y0": "H"},
    RatioStructure.D_BAR_HF: {"x0": "H", "y0": "H"},
    RatioStructure.DELTA: {"x0": "H", "y0": "H", "x1": "F"},
    RatioStructure.TAU: {"x0": "H", "x1": "H"},
    RatioStructure.GENERALIZED: {"y1": "F", "x0": "H", "y0": "H"},
    RatioStructure.ADJUSTED: {"x0": "F", "y0": "F"},
}

# (sign, a, b) for the covariance terms of the approximation
_COV_TERMS = (
    (+1, "x1", "y0"),
    (-1, "x1", "y1"),
    (-1, "y0", "y1"),
    (-1, "x0", "x1"),
    (-1, "x0", "y0"),
    (+1, "y1", "x0"),
)


def _pair(a: str, b: str) -> tuple[str, str]:
    return (a, b) if COMPONENTS.index(a) < COMPONENTS.index(b) else (b, a)


@dataclass(frozen=True)
class RatioBiasInputs:
    """Coefficients of variation of the four component estimators and their correlations.

    ``cor`` maps unordered pairs such as ``("x0", "y0")`` to correlations.
    Only pairs that the structure needs have to be present.
    """

    cv_x0: float = 0.0
    cv_x1: float = 0.0
    cv_y0: float = 0.0
    cv_y1: float = 0.0
    cor: Mapping[tuple[str, str], float] = field(default_factory=dict)
    structure: RatioStructure = RatioStructure.FULL

    def __post_init__(self) -> None:
        norm = {}
        for (a, b), r in dict(self.cor).items():
            if a not in COMPONENTS or b not in COMPONENTS or a == b:
                raise ValidationError(f"bad correlation key ({a}, {b})")
            if not -1 <= r <= 1:
                raise ValidationError(f"correlation ({a}, {b}) = {r} outside [-1, 1]")
            norm[_pair(a, b)] = float(r)
        object.__setattr__(self, "cor", norm)
        object.__setattr__(self, "structure", RatioStructure(self.structure))
        for c in COMPONENTS:
            if getattr(self, f"cv_{c}") < 0:
                raise ValidationError("coefficients of variation must be non-negative")

    def cv(self, c: str) -> float:
        return float(getattr(self, f"cv_{c}"))


def _relcov(inp: RatioBiasInputs, a: str, b: str) -> float:
    samples = _STRUCTURES[inp.structure]
    if a not in samples or b not in samples or samples[a] != samples[b]:
        return 0.0
    if inp.cv(a) == 0 or inp.cv(b) == 0:
        return 0.0
    key = _pair(a, b)
    if key not in inp.cor:
        raise ValidationError(
            f"structure {inp.structure.value!r} needs the correlation between {a} and {b}"
        )
    return inp.cor[key] * inp.cv(a) * inp.cv(b)


def double_ratio_bias(inp: RatioBiasInputs) -> float:
    """Second-order approximation to the relative bias of y1 x0 / (x1 y0)."""
    samples = _STRUCTURES[inp.structure]
    out = 0.0
    for sign, a, b in _COV_TERMS:
        out += sign * _relcov(inp, a, b)
    for c in ("y0", "x1"):
        if c in samples:
            out += inp.cv(c) ** 2
    return out


def srs_ratio_bias_inputs(
    population: Mapping[str, Sequence[float]],
    n: int,
    structure: RatioStructure = RatioStructure.FULL,
) -> RatioBiasInputs:
    """Component cvs and correlations for sample means under SRS without replacement.

    ``population`` maps each active component to its unit-level values over
    one shared population.  Variances of the sample means are
    ``(1/n - 1/N) S^2`` with S^2 the finite-population variance (N - 1).
    """
    cols = {c: np.asarray(v, dtype=np.float64) for c, v in population.items()}
    N = len(next(iter(cols.values())))
    if any(len(v) != N for v in cols.values()):
        raise ValidationError("population columns differ in length")
    if not 1 <= n <= N:
        raise ValidationError("sample size must lie in [1, N]")
    kappa = 1.0 / n - 1.0 / N
    cv = {}
    for c, v in cols.items():
        m = v.mean()
        if m == 0:
            raise DegenerateDenominator(f"component {c} has zero population mean")
        cv[c] = math.sqrt(kappa * v.var(ddof=1)) / abs(m)
    cor = {}
    for a, b in itertools.combinations(cols, 2):
        sa, sb = cols[a].std(), cols[b].std()
        r = 0.0 if sa == 0 or sb == 0 else float(np.corrcoef(cols[a], cols[b])[0, 1])
        cor[_pair(a, b)] = max(-1.0, min(1.0, r))
    return RatioBiasInputs(
        cv_x0=cv.get("x0", 0.0), cv_x1=cv.get("x1", 0.0),
        cv_y0=cv.get("y0", 0.0), cv_y1=cv.get("y1", 0.0),
        cor=cor, structure=structure,
    )


# --------------------------------------------------------------------------
# Scenario grids
# --------------------------------------------------------------------------

GRID_ROW_CAP = 1_000_000


def scenario_grid(spec: Mapping[str, Any]) -> list[SensitivityScenario]:
    """Cartesian product of the listed values; unlisted fields stay neutral."""
    axes = []
    for name, vals in spec.items():
        if name not in SensitivityScenario.FIELDS:
            raise ValidationError(f"unknown scenario field {name!r}")
        vals = vals if isinstance(vals, (list, tuple)) else [vals]
        if not vals:
            raise ValidationError(f"scenario field {name!r} has no values")
        axes.append((name, [float(v) for v in vals]))
    size = 1
    for _, vals in axes:
        size *= len(vals)
    if size > GRID_ROW_CAP:
        raise ValidationError(f"scenario grid has {size} rows; the cap is {GRID_ROW_CAP}")
    names = [a for a, _ in axes]
    return [
        SensitivityScenario(**dict(zip(names, combo)))
        for combo in itertools.product(*[v for _, v in axes])
    ]
