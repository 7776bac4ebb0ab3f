"""Entry-by-entry closed-form covariance matrices of the distribution protocols.

These are written out independently of the beam-splitter machinery in
:mod:`sepsteer.protocols` and serve as oracles for it.  Mode order is
(A, B, C[, D]) with primes tracked only in labels.
"""

import numpy as np

from .gaussian import IDENTITY2 as I2, SIGMA_Z as Z

SQ2 = np.sqrt(2.0)


def _assemble(blocks):
    return np.block(blocks)


def initial(t):
    """Product input: momentum-squeezed A, vacuum B, position-squeezed C."""
    e = np.exp(2 * t)
    return np.diag([e, 1 / e, 1.0, 1.0, 1 / e, e])


def displacement_noise(x, d_b):
    """Correlated-displacement noise on (A, B, C) before the first beam splitter."""
    r = SQ2 * d_b * x
    return np.array([
        [0, 0, 0, 0, 0, 0],
        [0, 2 * x, 0, -r, 0, 0],
        [0, 0, d_b**2 * x, 0, r, 0],
        [0, -r, 0, d_b**2 * x, 0, 0],
        [0, 0, r, 0, 2 * x, 0],
        [0, 0, 0, 0, 0, 0],
    ], dtype=float)


def _mn(t, x):
    return np.cosh(2 * t) + x, np.sinh(2 * t) - x


def step2(t, x, d_b):
    """(A', B, C') after Alice's beam splitter."""
    m, n = _mn(t, x)
    return _assemble([
        [m * I2, d_b * x * Z, n * Z],
        [d_b * x * Z, (1 + d_b**2 * x) * I2, -d_b * x * I2],
        [n * Z, -d_b * x * I2, m * I2],
    ])


def step3(t, x, d_b):
    """(A', B', C'') after Bob's beam splitter."""
    m, n = _mn(t, x)
    ab = (d_b * x + n) / SQ2
    ac = (d_b * x - n) / SQ2
    bb = (1 + m + d_b * x * (d_b - 2)) / 2
    bc = (1 + d_b**2 * x - m) / 2
    cc = (1 + m + d_b * x * (d_b + 2)) / 2
    return _assemble([
        [m * I2, ab * Z, ac * Z],
        [ab * Z, bb * I2, bc * I2],
        [ac * Z, bc * I2, cc * I2],
    ])


def step3_four_mode(t, x, d_b, d_d):
    """(A', B', C'', D) after Bob's beam splitter, David's mode still untouched."""
    g = np.zeros((8, 8))
    g[:6, :6] = step3(t, x, d_b)
    eps = np.vstack([
        x * d_d * Z,
        (d_b - 1) * d_d * x / SQ2 * I2,
        (d_b + 1) * d_d * x / SQ2 * I2,
    ])
    g[:6, 6:] = eps
    g[6:, :6] = eps.T
    g[6:, 6:] = (1 + d_d**2 * x) * I2
    return g


def step4_entries(t, x, d_b, d_d):
    m, n = _mn(t, x)
    return {
        "m": m,
        "l": (d_b * x + n) / SQ2,
        "s": (1 + m + d_b * x * (d_b - 2)) / 2,
        "f": ((d_b + SQ2 * d_d) * x - n) / 2,
        "g": ((d_b - SQ2 * d_d) * x - n) / 2,
        "h": ((SQ2 * d_b**2 + 2 * d_b * d_d - 2 * d_d) * x - SQ2 * (m - 1)) / 4,
        "j": ((SQ2 * d_b**2 - 2 * d_b * d_d + 2 * d_d) * x - SQ2 * (m - 1)) / 4,
        "k": (3 + m - x + (1 + d_b + SQ2 * d_d) ** 2 * x) / 4,
        "v": (m - 1 + (d_b**2 + 2 * d_b - 2 * d_d**2) * x) / 4,
        "w": (3 + m - x + (1 + d_b - SQ2 * d_d) ** 2 * x) / 4,
    }


def step4(t, x, d_b, d_d):
    """(A', B', C''', D') after David's beam splitter."""
    e = step4_entries(t, x, d_b, d_d)
    return _assemble([
        [e["m"] * I2, e["l"] * Z, e["f"] * Z, e["g"] * Z],
        [e["l"] * Z, e["s"] * I2, e["h"] * I2, e["j"] * I2],
        [e["f"] * Z, e["h"] * I2, e["k"] * I2, e["v"] * I2],
        [e["g"] * Z, e["j"] * I2, e["v"] * I2, e["w"] * I2],
    ])


def reference_three(t):
    """Displacement-free three-mode network output (A', B', C')."""
    c2, s2 = np.cosh(2 * t), np.sinh(2 * t)
    ch2, sh2 = np.cosh(t) ** 2, np.sinh(t) ** 2
    r = SQ2 * s2 / 2
    return _assemble([
        [c2 * I2, r * Z, -r * Z],
        [r * Z, ch2 * I2, -sh2 * I2],
        [-r * Z, -sh2 * I2, ch2 * I2],
    ])


def reference_four(t):
    """Displacement-free four-mode network output (A', B', C', D')."""
    c2, s2 = np.cosh(2 * t), np.sinh(2 * t)
    ch2, sh2 = np.cosh(t) ** 2, np.sinh(t) ** 2
    r = SQ2 * s2 / 2
    q = (3 + c2) / 4
    return _assemble([
        [c2 * I2, r * Z, -s2 / 2 * Z, -s2 / 2 * Z],
        [r * Z, ch2 * I2, -sh2 / SQ2 * I2, -sh2 / SQ2 * I2],
        [-s2 / 2 * Z, -sh2 / SQ2 * I2, q * I2, sh2 / 2 * I2],
        [-s2 / 2 * Z, -sh2 / SQ2 * I2, sh2 / 2 * I2, q * I2],
    ])
