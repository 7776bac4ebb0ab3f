"""Gaussian steering, EPR inferred variances and PPT separability."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInput, InvalidArgument
from .gaussian import (
    TOL,
    CovarianceMatrix,
    NoiseMatrix,
    mode_indices,
    symplectic_eigenvalues,
)

MAX_CONDITION = 1e12


@dataclass(frozen=True)
class ModePartition:
    """Steering party ``party_a`` and steered party ``party_b`` (mode labels)."""

    party_a: tuple[str, ...]
    party_b: tuple[str, ...]

    def __post_init__(self):
        a, b = tuple(self.party_a), tuple(self.party_b)
        if not a or not b:
            raise InvalidArgument("both parties need at least one mode")
        if set(a) & set(b):
            raise InvalidArgument(f"parties overlap: {sorted(set(a) & set(b))}")
        object.__setattr__(self, "party_a", a)
        object.__setattr__(self, "party_b", b)

    @classmethod
    def of(cls, a, b) -> ModePartition:
        """Build from label strings or iterables; ``"A'"`` is a single mode."""
        as_tuple = (lambda v: (v,) if isinstance(v, str) else tuple(v))
        return cls(as_tuple(a), as_tuple(b))

    def reversed(self) -> ModePartition:
        return ModePartition(self.party_b, self.party_a)


@dataclass(frozen=True, eq=False)
class SteeringReport:
    value: float
    sub_unity_eigenvalues: tuple[float, ...]
    schur_complement: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "sub_unity_eigenvalues": list(self.sub_unity_eigenvalues),
            "schur_complement": self.schur_complement.tolist(),
        }


@dataclass(frozen=True)
class EprReport:
    """Inferred-uncertainty product E = delta_x * delta_p.

    ``delta_x`` and ``delta_p`` are the standard deviations of the steered
    quadratures conditioned on the optimal linear estimate from the steering
    party; with unit vacuum variance, E < 1 signals steering.
    """

    product: float
    delta_x: float
    delta_p: float
    gain_x: tuple[float, ...]
    gain_p: tuple[float, ...]

    @property
    def inferred_var_x(self) -> float:
        return self.delta_x**2

    @property
    def inferred_var_p(self) -> float:
        return self.delta_p**2

    def to_dict(self) -> dict:
        return {
            "product": self.product,
            "delta_x": self.delta_x,
            "delta_p": self.delta_p,
            "gain_x": list(self.gain_x),
            "gain_p": list(self.gain_p),
        }


def _blocks(cm: CovarianceMatrix, part: ModePartition):
    ia = mode_indices(cm.index(m) for m in part.party_a)
    ib = mode_indices(cm.index(m) for m in part.party_b)
    g = cm.data
    return g[np.ix_(ia, ia)], g[np.ix_(ib, ib)], g[np.ix_(ia, ib)]


def schur_complement(cm: CovarianceMatrix, part: ModePartition) -> np.ndarray:
    """B - C^T A^{-1} C for the split of ``cm`` given by ``part``."""
    a, b, c = _blocks(cm, part)
    cond = np.linalg.cond(a)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise DegenerateInput(
            f"block of steering party {part.party_a} is singular (condition number {cond:.3g})"
        )
    sc = b - c.T @ np.linalg.solve(a, c)
    return (sc + sc.T) / 2


def gaussian_steering(cm: CovarianceMatrix, part: ModePartition, tol: float = TOL) -> SteeringReport:
    """Steerability of ``party_b`` by ``party_a`` under Gaussian measurements, in nats.

    Sums -ln(nu) over the symplectic eigenvalues of the Schur complement of the
    steering party's block that lie below 1; values within ``tol`` of 1 count as 1.
    """
    sc = schur_complement(cm, part)
    nu = symplectic_eigenvalues(sc)
    below = tuple(float(v) for v in nu if v < 1 - tol)
    value = max(0.0, -float(np.sum(np.log(below)))) if below else 0.0
    return SteeringReport(value, below, sc)


def steering(cm: CovarianceMatrix, a, b) -> float:
    """Shorthand for ``gaussian_steering(cm, ModePartition.of(a, b)).value``."""
    return gaussian_steering(cm, ModePartition.of(a, b)).value


def epr_variance_product(cm: CovarianceMatrix, part: ModePartition) -> EprReport:
    if len(part.party_b) != 1:
        raise InvalidArgument("the steered party must be a single mode")
    ia = [cm.index(m) for m in part.party_a]
    ib = cm.index(part.party_b[0])
    g = cm.data
    deltas, gains = [], []
    for q in (0, 1):
        cond_idx = [2 * k + q for k in ia]
        target = 2 * ib + q
        a = g[np.ix_(cond_idx, cond_idx)]
        c = g[cond_idx, target]
        if np.any(np.diag(a) <= 0) or np.linalg.cond(a) > MAX_CONDITION:
            raise DegenerateInput(f"conditioning quadratures of {part.party_a} have zero variance")
        gain = np.linalg.solve(a, c)
        var = g[target, target] - c @ gain
        if var <= 0:
            raise DegenerateInput("inferred variance is not positive")
        deltas.append(float(np.sqrt(var)))
        gains.append(tuple(float(v) for v in gain))
    return EprReport(deltas[0] * deltas[1], deltas[0], deltas[1], gains[0], gains[1])


def partial_transpose(cm: CovarianceMatrix, modes) -> CovarianceMatrix:
    """Flip the sign of every momentum quadrature in ``modes``."""
    flip = np.ones(2 * cm.n_modes)
    for label in modes:
        flip[2 * cm.index(label) + 1] = -1.0
    return CovarianceMatrix(cm.modes, flip[:, None] * cm.data * flip[None, :])


def ppt_min_eigenvalue(cm: CovarianceMatrix, transposed_modes) -> float:
    """Smallest symplectic eigenvalue of the partially transposed matrix.

    A value below 1 witnesses entanglement across the split; for 1 x N mode
    splits a value >= 1 also certifies separability.
    """
    modes = (transposed_modes,) if isinstance(transposed_modes, str) else tuple(transposed_modes)
    if not modes:
        raise InvalidArgument("transposed subset is empty")
    if set(modes) >= set(cm.modes):
        raise InvalidArgument("transposed subset must be a proper subset")
    return float(symplectic_eigenvalues(partial_transpose(cm, modes))[-1])


def is_entangled_across(cm: CovarianceMatrix, modes, tol: float = TOL) -> bool:
    return ppt_min_eigenvalue(cm, modes) < 1 - tol


def is_fully_separable_by_construction(gamma_in: CovarianceMatrix, noise: NoiseMatrix | np.ndarray) -> bool:
    """Certificate: a product of single-mode states plus PSD classical noise is fully separable.

    This is sufficient, not a general decision procedure.
    """
    g = gamma_in.data
    n = gamma_in.n_modes
    off = g.copy()
    for k in range(n):
        off[2 * k : 2 * k + 2, 2 * k : 2 * k + 2] = 0.0
    if np.any(np.abs(off) > 1e-12 * max(1.0, np.abs(g).max())):
        raise InvalidArgument("certificate needs a product of single-mode states")
    try:
        noise = noise if isinstance(noise, NoiseMatrix) else NoiseMatrix(noise)
    except InvalidArgument:
        return False
    if noise.data.shape != g.shape:
        raise InvalidArgument("noise and state dimensions differ")
    for k in range(n):
        blk = g[2 * k : 2 * k + 2, 2 * k : 2 * k + 2]
        if np.linalg.det(blk) < 1 - TOL or blk[0, 0] <= 0:
            return False
    return True
