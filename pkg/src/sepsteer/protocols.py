"""States, closed-form steerabilities and thresholds of the steering distribution protocols.

Two-user protocol (modes A, B, C):
  step1  squeezed A (momentum), vacuum B, squeezed C (position) plus correlated
         displacement noise;
  step2  Alice mixes A and C on a balanced beam splitter -> (A', B, C');
  step3  Bob mixes B and the received C' -> (A', B', C'').

The three-user protocol adds David's vacuum mode D, which enters the noise and
is finally mixed with C'' -> (A', B', C''', D').  Every matrix is assembled
numerically from :mod:`sepsteer.gaussian` primitives; :mod:`sepsteer.symbolic`
holds the entry-wise closed forms used to check them.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.optimize import brentq

from .correlations import ModePartition, gaussian_steering, is_fully_separable_by_construction
from .errors import DomainError, InvalidArgument
from .gaussian import (
    CovarianceMatrix,
    NoiseMatrix,
    Quadrature,
    beam_splitter,
    beam_splitter_matrix,
    is_physical,
    squeezed_vacuum,
    tensor,
    vacuum,
)

SQ2 = np.sqrt(2.0)

#: Smallest squeezing for which the analytic reverse-direction optimum is used.
REVERSE_ANALYTIC_T_MIN = 0.943


class Direction(str, Enum):
    A_TO_B = "AtoB"
    A_TO_BD = "AtoBD"
    BD_TO_A = "BDtoA"

    @property
    def four_mode(self) -> bool:
        return self is not Direction.A_TO_B


class Stage(str, Enum):
    STEP1 = "step1"
    STEP2 = "step2"
    STEP3 = "step3"
    STEP4 = "step4"
    REFERENCE3 = "reference3"
    REFERENCE4 = "reference4"


LABELS = {
    Stage.STEP1: ("A", "B", "C", "D"),
    Stage.STEP2: ("A'", "B", "C'", "D"),
    Stage.STEP3: ("A'", "B'", "C''", "D"),
    Stage.STEP4: ("A'", "B'", "C'''", "D'"),
    Stage.REFERENCE3: ("A'", "B'", "C'"),
    Stage.REFERENCE4: ("A'", "B'", "C'", "D'"),
}


@dataclass(frozen=True)
class ProtocolParams:
    t: float
    x: float = 0.0
    d_b: float = 1.0
    d_d: float | None = None
    direction: Direction = Direction.A_TO_B

    def __post_init__(self):
        object.__setattr__(self, "direction", Direction(self.direction))
        if not np.isfinite(self.t) or self.t < 0:
            raise InvalidArgument(f"squeezing t must be finite and >= 0, got {self.t}")
        if not np.isfinite(self.x) or self.x < 0:
            raise InvalidArgument(f"noise variance x must be finite and >= 0, got {self.x}")
        if self.direction.four_mode and self.d_d is None:
            raise InvalidArgument(f"direction {self.direction.value} needs d_d")
        if not self.direction.four_mode and self.d_d is not None:
            raise InvalidArgument("d_d is only meaningful for the three-user directions")

    @property
    def n_modes(self) -> int:
        return 4 if self.d_d is not None else 3

    @classmethod
    def optimal(cls, t: float, x: float | None = None,
                direction: Direction | str = Direction.A_TO_B) -> ProtocolParams:
        """Analytically optimal displacements; ``x=None`` picks the smallest separable x."""
        direction = Direction(direction)
        d_b, d_d = optimal_displacements(direction, t)
        if x is None:
            x = minimal_separable_noise(direction, t)
        return cls(t, x, d_b, d_d, direction)

    def with_x(self, x: float) -> ProtocolParams:
        return replace(self, x=x)


@dataclass(frozen=True)
class StageState:
    stage: Stage
    cm: CovarianceMatrix
    params: ProtocolParams

    def to_dict(self) -> dict:
        p = self.params
        return {
            "stage": self.stage.value,
            "params": {"t": p.t, "x": p.x, "d_b": p.d_b, "d_d": p.d_d, "direction": p.direction.value},
            "cm": self.cm.to_dict(),
        }


def _bs(cm, i, j, sign, out_labels):
    return beam_splitter(cm, i, j, 0.5, sign=sign, out_labels=out_labels)


def _two_mode_squeezed_block_sign(sign: int, t: float = 0.5) -> float:
    inp = tensor(squeezed_vacuum(t, Quadrature.MOMENTUM, "A"), squeezed_vacuum(t, Quadrature.POSITION, "C"))
    out = _bs(inp, "A", "C", sign, ("A'", "C'"))
    return out.block("A'", "C'")[0, 0] / np.sinh(2 * t)


@lru_cache(maxsize=None)
def calibrated_bs_sign() -> int:
    """Beam-splitter sign that makes Alice's mixer produce +sinh(2t) sigma_z correlations."""
    for sign in (1, -1):
        if np.isclose(_two_mode_squeezed_block_sign(sign), 1.0, rtol=0, atol=1e-12):
            return sign
    raise RuntimeError("no beam-splitter convention reproduces the two-mode squeezed output")


def _displacement_vectors(d_b: float, d_d: float | None):
    if d_d is None:
        q1 = np.array([0, -1, 0, d_b, 0, -1], dtype=float)
        q2 = np.array([1, 0, d_b, 0, -1, 0], dtype=float)
    else:
        q1 = np.array([0, -1, 0, d_b, 0, -1, 0, d_d], dtype=float)
        q2 = np.array([1, 0, d_b, 0, -1, 0, d_d, 0], dtype=float)
    return q1, q2


def displacement_noise(x: float, d_b: float, d_d: float | None = None, *, bs_sign: int | None = None) -> NoiseMatrix:
    """Noise added by the correlated displacements, on (A, B, C[, D]) before any mixing.

    It is the pull-back through Alice's beam splitter of x (q1 q1^T + q2 q2^T).
    """
    if x < 0:
        raise InvalidArgument("noise variance x must be >= 0")
    sign = calibrated_bs_sign() if bs_sign is None else bs_sign
    q1, q2 = _displacement_vectors(d_b, d_d)
    p = np.outer(q1, q1) + np.outer(q2, q2)
    u = beam_splitter_matrix(len(q1) // 2, 0, 2, 0.5, sign)
    return NoiseMatrix(x * u.T @ p @ u)


def initial_state(t: float, n_modes: int = 3) -> CovarianceMatrix:
    cm = tensor(
        tensor(squeezed_vacuum(t, Quadrature.MOMENTUM, "A"), vacuum(1, ["B"])),
        squeezed_vacuum(t, Quadrature.POSITION, "C"),
    )
    if n_modes == 4:
        cm = tensor(cm, vacuum(1, ["D"]))
    return cm


def build_stage(params: ProtocolParams, stage: Stage | str, *, bs_sign: int | None = None) -> StageState:
    """Covariance matrix after ``stage``; three- or four-mode according to ``params.d_d``."""
    stage = Stage(stage)
    sign = calibrated_bs_sign() if bs_sign is None else bs_sign
    if stage in (Stage.REFERENCE3, Stage.REFERENCE4):
        net = reference_network(params.t, 3 if stage is Stage.REFERENCE3 else 4, bs_sign=sign)
        return StageState(stage, net.cm, params)
    if stage is Stage.STEP4 and params.d_d is None:
        raise InvalidArgument("step4 needs the three-user parameters (d_d)")
    n = params.n_modes
    cm = initial_state(params.t, n)
    noise = displacement_noise(params.x, params.d_b, params.d_d, bs_sign=sign)
    cm = CovarianceMatrix(cm.modes, cm.data + noise.data)
    if stage is not Stage.STEP1:
        cm = _bs(cm, "A", "C", sign, ("A'", "C'"))
    if stage in (Stage.STEP3, Stage.STEP4):
        cm = _bs(cm, "B", "C'", sign, ("B'", "C''"))
    if stage is Stage.STEP4:
        cm = _bs(cm, "C''", "D", sign, ("C'''", "D'"))
    return StageState(stage, cm, params)


def reference_network(t: float, modes: int | str = 3, *, bs_sign: int | None = None) -> StageState:
    """Output of the same beam-splitter chain fed with undisplaced inputs."""
    n = {"three": 3, "four": 4}.get(modes, modes)
    if n not in (3, 4):
        raise InvalidArgument(f"reference network has three or four modes, not {modes!r}")
    if t < 0:
        raise InvalidArgument("squeezing t must be >= 0")
    sign = calibrated_bs_sign() if bs_sign is None else bs_sign
    cm = initial_state(t, n)
    cm = _bs(cm, "A", "C", sign, ("A'", "C'"))
    cm = _bs(cm, "B", "C'", sign, ("B'", "C''"))
    if n == 3:
        cm = cm.relabel({"C''": "C'"})
        stage, params = Stage.REFERENCE3, ProtocolParams(t)
    else:
        cm = _bs(cm, "C''", "D", sign, ("C'", "D'"))
        stage, params = Stage.REFERENCE4, ProtocolParams(t, 0.0, 1.0, 0.0, Direction.A_TO_BD)
    return StageState(stage, cm, params)


def fully_separable_certificate(params: ProtocolParams) -> bool:
    """Step-1 state = product input + PSD displacement noise."""
    return is_fully_separable_by_construction(
        initial_state(params.t, params.n_modes), displacement_noise(params.x, params.d_b, params.d_d)
    )


# closed forms ---------------------------------------------------------------

_CLOSED_FORMS = {
    "AtoB": lambda c: np.log(2 * c / (c + 1)),
    "AtoBD": lambda c: np.log(4 * c / (3 + c)),
    "AtoD": lambda c: np.log(4 * c / (1 + 3 * c)),
    "BDtoA": lambda c: np.log((1 + 3 * c) / (3 + c)),
}


def closed_form_steering(direction: Direction | str, t: float) -> float:
    """Best steerability reachable in ``direction``; "AtoD" is the A'->D' part."""
    key = direction.value if isinstance(direction, Direction) else str(direction)
    if key not in _CLOSED_FORMS:
        raise InvalidArgument(f"unknown direction {direction!r}")
    if t < 0:
        raise InvalidArgument("squeezing t must be >= 0")
    return float(_CLOSED_FORMS[key](np.cosh(2 * t)))


def optimal_displacements(direction: Direction | str, t: float) -> tuple[float, float | None]:
    direction = Direction(direction)
    if t < 0:
        raise InvalidArgument("squeezing t must be >= 0")
    d_b = float(np.tanh(2 * t) + 1)
    if direction is Direction.A_TO_B:
        return d_b, None
    if direction is Direction.A_TO_BD:
        return d_b, SQ2 * d_b
    if t < REVERSE_ANALYTIC_T_MIN:
        raise DomainError(
            f"analytic reverse-direction displacements need t >= {REVERSE_ANALYTIC_T_MIN}, got {t}; "
            "use sepsteer.optimize.maximize_collective_steering"
        )
    d_d = (2 + 2 / np.tanh(t) + np.tanh(t) - np.tanh(2 * t)) / SQ2
    return d_b, float(d_d)


class ThresholdKind(str, Enum):
    SEP_C_AB = "sep_C_AB"
    SEP_C_ABD_FORWARD = "sep_C_ABD_forward"
    SEP_C_ABD_REVERSE = "sep_C_ABD_reverse"
    DB2_LOWER = "dB2_lower"
    DB2_UPPER = "dB2_upper"


def _reverse_denominator(t):
    return (2 * np.sinh(2 * t) - 12 * np.cosh(2 * t) - 4 * np.sinh(4 * t) - 7 * np.cosh(4 * t)
            + 2 * np.sinh(6 * t) - 13)


@lru_cache(maxsize=None)
def reverse_threshold_pole() -> float:
    """Squeezing at which the reverse-direction ancilla threshold diverges."""
    return float(brentq(_reverse_denominator, 0.5, 1.5, xtol=1e-14))


def analytic_threshold(kind: ThresholdKind | str, t: float) -> float:
    kind = ThresholdKind(kind)
    if t <= 0:
        raise DomainError("thresholds are defined for t > 0")
    ch, sh = np.cosh, np.sinh
    if kind is ThresholdKind.SEP_C_AB:
        return float(2 * ch(2 * t) ** 2 * sh(t) / (ch(t) + ch(3 * t) + sh(t)))
    if kind is ThresholdKind.SEP_C_ABD_FORWARD:
        return float(2 * ch(2 * t) ** 2 * sh(t) / (2 * (ch(t) + ch(3 * t) + sh(t)) + sh(3 * t)))
    if kind is ThresholdKind.SEP_C_ABD_REVERSE:
        den = _reverse_denominator(t)
        if den <= 0:
            raise DomainError(
                f"reverse-direction threshold has non-positive denominator at t={t} "
                f"(pole at t={reverse_threshold_pole():.6f})"
            )
        return float(2 * sh(4 * t) ** 2 / den)
    e = np.exp(2 * t)
    if kind is ThresholdKind.DB2_LOWER:
        return float((e - 1) / 2)
    if e >= 2:
        raise DomainError(f"d_B = 2 steering bound needs e^(2t) < 2, i.e. t < {np.log(2) / 2:.6f}")
    return float((1 - e) ** 2 / (4 - 2 * e))


def minimal_separable_noise(direction: Direction | str, t: float) -> float:
    """Smallest x keeping every ancilla separable at the analytic optimum."""
    direction = Direction(direction)
    x = analytic_threshold(ThresholdKind.SEP_C_AB, t)
    if direction is Direction.A_TO_BD:
        x = max(x, analytic_threshold(ThresholdKind.SEP_C_ABD_FORWARD, t))
    elif direction is Direction.BD_TO_A:
        x = max(x, analytic_threshold(ThresholdKind.SEP_C_ABD_REVERSE, t))
    return x


# key rate -------------------------------------------------------------------

KEY_RATE_OFFSET = float(np.log(np.e / 2))


def key_rate_bound(collective_steering: float) -> float:
    """Guaranteed secret-sharing key rate (a lower bound) from B'D' -> A' steering."""
    return collective_steering - KEY_RATE_OFFSET


def qss_key_rate(t: float) -> float:
    return key_rate_bound(closed_form_steering(Direction.BD_TO_A, t))


def key_rate_onset() -> float:
    """Squeezing above which the key-rate bound is positive: cosh 2t = (3e-2)/(6-e)."""
    return float(np.arccosh((3 * np.e - 2) / (6 - np.e)) / 2)


def squeezing_to_db(t: float) -> float:
    if t < 0:
        raise InvalidArgument("squeezing t must be >= 0")
    return float(10 * np.log10(np.exp(2 * t)))


def db_to_squeezing(db: float) -> float:
    return float(db * np.log(10) / 20)


# reports --------------------------------------------------------------------

def stage_report(state: StageState) -> dict:
    """Steering values and physicality of a stage, for JSON dumps."""
    cm = state.cm
    ok, nu_min = is_physical(cm)
    out = {"physical": ok, "min_symplectic_eigenvalue": nu_min, "steering": {}}
    labels = cm.modes
    if state.stage is Stage.STEP1:
        out["fully_separable_certificate"] = fully_separable_certificate(state.params)
        return out
    a = labels[0]
    pairs = [((a,), (labels[1],)), ((labels[1],), (a,))]
    if len(labels) == 4:
        pairs += [((a,), (labels[1], labels[3])), ((a,), (labels[3],)),
                  ((labels[1], labels[3]), (a,)), ((labels[3],), (a,))]
    for pa, pb in pairs:
        key = f"{'+'.join(pa)}->{'+'.join(pb)}"
        out["steering"][key] = gaussian_steering(cm, ModePartition(pa, pb)).value
    return out
