"""Covariance-matrix representation of Gaussian states.

Conventions: quadratures are interleaved as (x1, p1, x2, p2, ...), the vacuum
has unit variance and [x, p] = 2i.  First moments are never tracked.
"""

from __future__ import annotations

import json
from functools import lru_cache
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidArgument

#: Global tolerance for physicality / PSD / boundary decisions.
TOL = 1e-9

SIGMA_Z = np.diag([1.0, -1.0])
IDENTITY2 = np.eye(2)


def symplectic_form(n_modes: int) -> np.ndarray:
    """Block-diagonal Omega = ⊕ [[0, 1], [-1, 0]] for ``n_modes`` modes."""
    return _symplectic_form(n_modes).copy()


@lru_cache(maxsize=None)
def _symplectic_form(n_modes: int) -> np.ndarray:
    return np.kron(np.eye(n_modes), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _asymmetry(data: np.ndarray) -> float:
    return float(np.max(np.abs(data - data.T))) if data.size else 0.0


def mode_indices(positions: Iterable[int]) -> list[int]:
    """Row/column indices of the quadratures of the given mode positions."""
    return [2 * k + q for k in positions for q in (0, 1)]


@dataclass(frozen=True, eq=False)
class CovarianceMatrix:
    """A real symmetric 2N x 2N matrix over N labelled modes."""

    modes: tuple[str, ...]
    data: np.ndarray

    def __post_init__(self):
        modes = tuple(self.modes)
        if len(set(modes)) != len(modes):
            raise InvalidArgument(f"duplicate mode labels: {modes}")
        data = np.array(self.data, dtype=float)
        if data.shape != (2 * len(modes), 2 * len(modes)):
            raise InvalidArgument(
                f"matrix of shape {data.shape} does not fit {len(modes)} modes"
            )
        scale = max(1.0, float(np.max(np.abs(data))) if data.size else 1.0)
        if _asymmetry(data) > 1e-12 * scale:
            raise InvalidArgument("covariance matrix is not symmetric")
        data = (data + data.T) / 2
        data.setflags(write=False)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "data", data)

    @property
    def n_modes(self) -> int:
        return len(self.modes)

    def index(self, label: str) -> int:
        try:
            return self.modes.index(label)
        except ValueError:
            raise InvalidArgument(f"unknown mode {label!r}; have {self.modes}") from None

    def block(self, a: str, b: str | None = None) -> np.ndarray:
        """The 2x2 block between modes ``a`` and ``b`` (``b`` defaults to ``a``)."""
        i = self.index(a)
        j = i if b is None else self.index(b)
        return self.data[2 * i : 2 * i + 2, 2 * j : 2 * j + 2]

    def relabel(self, mapping: dict[str, str]) -> CovarianceMatrix:
        return CovarianceMatrix(tuple(mapping.get(m, m) for m in self.modes), self.data)

    def to_dict(self) -> dict:
        return {"modes": list(self.modes), "data": self.data.tolist()}

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_dict(cls, obj: dict) -> CovarianceMatrix:
        modes = tuple(obj["modes"])
        data = np.asarray(obj["data"], dtype=float)
        if data.ndim == 1:
            data = data.reshape(2 * len(modes), 2 * len(modes))
        return cls(modes, data)

    @classmethod
    def from_json(cls, text: str) -> CovarianceMatrix:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True, eq=False)
class NoiseMatrix:
    """Classical Gaussian noise: a real symmetric positive semidefinite matrix."""

    data: np.ndarray

    def __post_init__(self):
        data = np.array(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != data.shape[1] or data.shape[0] % 2:
            raise InvalidArgument(f"noise matrix must be square of even size, got {data.shape}")
        scale = max(1.0, float(np.max(np.abs(data))) if data.size else 1.0)
        if _asymmetry(data) > 1e-12 * scale:
            raise InvalidArgument("noise matrix is not symmetric")
        data = (data + data.T) / 2
        if data.size and np.linalg.eigvalsh(data).min() < -1e-10 * scale:
            raise InvalidArgument("noise matrix is not positive semidefinite")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)


class Quadrature(str, Enum):
    POSITION = "position"
    MOMENTUM = "momentum"


def vacuum(n: int, labels: Sequence[str] | None = None) -> CovarianceMatrix:
    if n < 1:
        raise InvalidArgument("vacuum needs at least one mode")
    if labels is None:
        labels = [f"m{k}" for k in range(n)]
    if len(labels) != n:
        raise InvalidArgument("label count does not match mode count")
    return CovarianceMatrix(tuple(labels), np.eye(2 * n))


def squeezed_vacuum(t: float, squeezed_quadrature: Quadrature | str, label: str = "m0") -> CovarianceMatrix:
    """Single-mode squeezed vacuum; the chosen quadrature has variance e^{-2t}."""
    if not np.isfinite(t) or t < 0:
        raise InvalidArgument(f"squeezing parameter must be finite and >= 0, got {t}")
    quad = Quadrature(squeezed_quadrature)
    big, small = np.exp(2 * t), np.exp(-2 * t)
    diag = [big, small] if quad is Quadrature.MOMENTUM else [small, big]
    return CovarianceMatrix((label,), np.diag(diag))


def tensor(a: CovarianceMatrix, b: CovarianceMatrix) -> CovarianceMatrix:
    clash = set(a.modes) & set(b.modes)
    if clash:
        raise InvalidArgument(f"mode labels collide: {sorted(clash)}")
    n, m = a.data.shape[0], b.data.shape[0]
    data = np.zeros((n + m, n + m))
    data[:n, :n] = a.data
    data[n:, n:] = b.data
    return CovarianceMatrix(a.modes + b.modes, data)


def beam_splitter_matrix(n_modes: int, i: int, j: int, tau: float = 0.5, sign: int = 1) -> np.ndarray:
    """Orthogonal symplectic matrix of a beam splitter between mode positions i and j.

    Both quadratures transform identically::

        out_i = sqrt(tau) in_i + sqrt(1 - tau) in_j
        out_j = sign * (sqrt(1 - tau) in_i - sqrt(tau) in_j)

    ``sign=-1`` gives the rotation convention instead of the reflection one.
    """
    if i == j:
        raise InvalidArgument("beam splitter needs two distinct modes")
    if not 0 < tau < 1:
        raise InvalidArgument(f"transmittance must lie in (0, 1), got {tau}")
    if sign not in (1, -1):
        raise InvalidArgument("sign must be +1 or -1")
    r, s = np.sqrt(tau), np.sqrt(1 - tau)
    u = np.eye(2 * n_modes)
    for q in (0, 1):
        a, b = 2 * i + q, 2 * j + q
        u[a, a], u[a, b] = r, s
        u[b, a], u[b, b] = sign * s, -sign * r
    return u


def beam_splitter(
    cm: CovarianceMatrix,
    i: str,
    j: str,
    tau: float = 0.5,
    *,
    sign: int = 1,
    out_labels: tuple[str, str] | None = None,
) -> CovarianceMatrix:
    """Mix modes ``i`` and ``j`` on a beam splitter of transmittance ``tau``."""
    a, b = cm.index(i), cm.index(j)
    u = beam_splitter_matrix(cm.n_modes, a, b, tau, sign)
    out = CovarianceMatrix(cm.modes, u @ cm.data @ u.T)
    if out_labels is not None:
        out = out.relabel({i: out_labels[0], j: out_labels[1]})
    return out


def add_noise(cm: CovarianceMatrix, noise: NoiseMatrix | np.ndarray) -> CovarianceMatrix:
    if not isinstance(noise, NoiseMatrix):
        noise = NoiseMatrix(noise)
    if noise.data.shape != cm.data.shape:
        raise InvalidArgument(f"noise shape {noise.data.shape} != {cm.data.shape}")
    return CovarianceMatrix(cm.modes, cm.data + noise.data)


def symplectic_eigenvalues(m: CovarianceMatrix | np.ndarray, tol: float = TOL) -> np.ndarray:
    """Symplectic spectrum of a symmetric PSD matrix, in descending order.

    The eigenvalues of Omega @ m come in pairs +-i*nu; one value per pair is kept.
    """
    data = m.data if isinstance(m, CovarianceMatrix) else np.asarray(m, dtype=float)
    if data.ndim != 2 or data.shape[0] != data.shape[1]:
        raise InvalidArgument(f"expected a square matrix, got shape {data.shape}")
    if data.shape[0] % 2:
        raise InvalidArgument("symplectic eigenvalues need an even dimension")
    n = data.shape[0] // 2
    ev = np.sort(np.abs(np.linalg.eigvals(_symplectic_form(n) @ data)))
    lo, hi = ev[0::2], ev[1::2]
    if np.max(hi - lo) > max(tol, 1e-7) * max(1.0, ev[-1]):
        raise InvalidArgument("spectrum does not pair up; input is not symmetric PSD")
    return ((lo + hi) / 2)[::-1]


def is_physical(cm: CovarianceMatrix | np.ndarray, tol: float = TOL) -> tuple[bool, float]:
    """Whether the uncertainty principle holds, plus the smallest symplectic eigenvalue."""
    data = cm.data if isinstance(cm, CovarianceMatrix) else np.asarray(cm, dtype=float)
    if np.linalg.eigvalsh(data).min() <= 0:
        return False, 0.0
    nu_min = float(symplectic_eigenvalues(data, tol)[-1])
    return nu_min >= 1 - tol, nu_min


def restrict(cm: CovarianceMatrix, modes: Sequence[str]) -> CovarianceMatrix:
    """Reduced state on ``modes``; the original mode order is kept."""
    if not modes:
        raise InvalidArgument("cannot restrict to an empty set of modes")
    wanted = set(modes)
    for label in wanted:
        cm.index(label)
    keep = [k for k, label in enumerate(cm.modes) if label in wanted]
    idx = mode_indices(keep)
    return CovarianceMatrix(tuple(cm.modes[k] for k in keep), cm.data[np.ix_(idx, idx)])


def random_physical_cm(n_modes: int, rng: np.random.Generator, max_squeeze: float = 1.0,
                       max_thermal: float = 2.0, labels: Sequence[str] | None = None) -> CovarianceMatrix:
    """A random mixed Gaussian state ``S diag(nu) S^T`` with S = O1 Z O2."""
    from scipy.stats import unitary_group

    def passive():
        u = unitary_group.rvs(n_modes, random_state=rng) if n_modes > 1 else np.exp(
            2j * np.pi * rng.random()) * np.ones((1, 1))
        o = np.zeros((2 * n_modes, 2 * n_modes))
        # a -> U a acts on (x, p) pairs as [[Re, -Im], [Im, Re]]
        o[0::2, 0::2] = u.real
        o[0::2, 1::2] = -u.imag
        o[1::2, 0::2] = u.imag
        o[1::2, 1::2] = u.real
        return o

    r = rng.uniform(-max_squeeze, max_squeeze, n_modes)
    z = np.diag(np.ravel(np.column_stack([np.exp(r), np.exp(-r)])))
    s = passive() @ z @ passive()
    nu = rng.uniform(1.0, max_thermal, n_modes)
    data = s @ np.diag(np.repeat(nu, 2)) @ s.T
    if labels is None:
        labels = [f"m{k}" for k in range(n_modes)]
    return CovarianceMatrix(tuple(labels), (data + data.T) / 2)
