"""Transfer matrices and the propagator cocycle.

For a spectral parameter ``lam != 0`` the transfer matrix ``T_lam(x)``
moves generalized-eigenfunction data one site to the right:

    T_lam(x) = [[(lam - c(x) b(x+1)/lam) / a(x+1),  -b(x+1) d(x)/(lam a(x+1))],
                [ c(x)/lam,                           d(x)/lam             ]]

(it mixes the coins at ``x`` and ``x+1``).  The cocycle is

    F_lam(0) = I,
    F_lam(x) = T(x-1) ... T(0)              for x >= 1,
    F_lam(x) = T(x)^-1 ... T(-1)^-1          for x <= -1,

so that solutions of the eigenvalue equation transport as
``Phi(x) = F_lam(x) Phi(0)``.  Everything in this module is exact algebra
in lam; no decaying/expanding splitting happens here.
"""
from __future__ import annotations

import cmath
from typing import Sequence

import numpy as np

from .coins import PI_L, PI_R, CoinField, coin_at, site_projectors
from .errors import SlowConvergence

__all__ = [
    "reflect",
    "transfer_matrix",
    "transfer_inverse",
    "alt_transfer",
    "PropagatorCocycle",
    "propagator",
    "identity_suite",
    "IDENTITY_SUITE_LABELS",
    "determinant_residuals",
    "hs_partial_sums",
    "chirality_interleave",
    "wronskian",
]

_EYE = np.eye(2, dtype=complex)

# Engage the diagonalization shortcut only for long jumps well inside a tail
# and a safely split spectrum; plain stepping is exact enough otherwise.
_JUMP_MIN = 64
_JUMP_GAP = 1e-3


def reflect(lam: complex) -> complex:
    """The circle reflection ``lam* = 1 / conj(lam)`` (fixes the unit circle)."""
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    return 1.0 / complex(lam).conjugate()


def _check_lam(lam: complex) -> complex:
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    return lam


def transfer_matrix(field: CoinField, x: int, lam: complex) -> np.ndarray:
    """``T_lam(x)`` built from the coins at ``x`` and ``x+1``."""
    lam = _check_lam(lam)
    lo = coin_at(field, x)
    hi = coin_at(field, x + 1)
    li = 1.0 / lam
    return np.array(
        [
            [(lam - li * lo.c * hi.b) / hi.a, -li * hi.b * lo.d / hi.a],
            [li * lo.c, li * lo.d],
        ],
        dtype=complex,
    )


def transfer_inverse(field: CoinField, x: int, lam: complex) -> np.ndarray:
    """Closed form of ``T_lam(x)^-1`` (never inverts numerically)."""
    lam = _check_lam(lam)
    lo = coin_at(field, x)
    hi = coin_at(field, x + 1)
    li = 1.0 / lam
    return np.array(
        [
            [li * hi.a, li * hi.b],
            [-li * lo.c * hi.a / lo.d, (lam - li * hi.b * lo.c) / lo.d],
        ],
        dtype=complex,
    )


def alt_transfer(field: CoinField, x: int, lam: complex) -> np.ndarray:
    """Single-coin transfer for the chirality-interleaved representation.

    ``S_lam(x) = (1/a(x)) [[lam, -b(x)], [c(x), delta(x)/lam]]`` propagates
    the vector ``[f_L(x-1), f_R(x)]`` of an eigenfunction one step right.
    """
    lam = _check_lam(lam)
    c = coin_at(field, x)
    return np.array(
        [[lam / c.a, -c.b / c.a], [c.c / c.a, c.delta / (lam * c.a)]], dtype=complex
    )


def _tail_roots(coin, lam: complex) -> tuple[complex, complex]:
    """Eigenvalues of the constant-coin transfer matrix, |z_plus| <= |z_minus|.

    Solves z^2 - tr z + det = 0 with the cancellation-safe branch, then
    orders by modulus.  Valid for any nonzero lam; callers that need a
    strict modulus split must check it themselves.
    """
    li = 1.0 / lam
    tr = (lam - li * coin.c * coin.b) / coin.a + li * coin.d
    det = coin.d / coin.a
    q = tr / 2.0
    s = cmath.sqrt(q * q - det)
    z1 = q + s if abs(q + s) >= abs(q - s) else q - s
    z2 = det / z1 if z1 != 0 else q - s
    return (z2, z1) if abs(z2) <= abs(z1) else (z1, z2)


def _tail_eigvec(T: np.ndarray, z: complex) -> np.ndarray:
    """Unit eigenvector of the 2x2 matrix ``T`` for eigenvalue ``z``."""
    cand1 = np.array([T[0, 1], z - T[0, 0]], dtype=complex)
    cand2 = np.array([z - T[1, 1], T[1, 0]], dtype=complex)
    v = cand1 if np.linalg.norm(cand1) >= np.linalg.norm(cand2) else cand2
    n = np.linalg.norm(v)
    if n == 0:  # T is z * I; any direction works
        return np.array([1.0, 0.0], dtype=complex)
    return v / n


class PropagatorCocycle:
    """Memoized cocycle ``x -> F_lam(x)`` (and its inverse) for one field.

    Values grow from the origin one transfer step at a time and are cached,
    so sweeps over a window cost one matrix product per new site.  Far
    queries inside a constant tail take a diagonalization shortcut when the
    tail transfer has a safely split spectrum.  Instances are cheap, hold
    all their state privately, and are not thread-safe.
    """

    def __init__(self, field: CoinField, lam: complex, fast_tail: bool = True):
        self.field = field
        self.lam = _check_lam(lam)
        self.fast_tail = bool(fast_tail)
        self._T: dict[int, np.ndarray] = {}
        self._Ti: dict[int, np.ndarray] = {}
        self._F: dict[int, np.ndarray] = {0: _EYE.copy()}
        self._Fi: dict[int, np.ndarray] = {0: _EYE.copy()}
        self._hi = 0
        self._lo = 0
        self._spot: dict[int, tuple[np.ndarray, np.ndarray]] = {}
        self._eig: dict[int, tuple | None] = {}
        self._span: dict[int, dict[int, np.ndarray]] = {}
        self._span_rng: dict[int, list[int]] = {}

    # -- transfer steps -------------------------------------------------------

    def transfer(self, x: int) -> np.ndarray:
        m = self._T.get(x)
        if m is None:
            m = transfer_matrix(self.field, x, self.lam)
            self._T[x] = m
        return m

    def transfer_inverse(self, x: int) -> np.ndarray:
        m = self._Ti.get(x)
        if m is None:
            m = transfer_inverse(self.field, x, self.lam)
            self._Ti[x] = m
        return m

    # -- cocycle ---------------------------------------------------------------

    def matrix(self, x: int) -> np.ndarray:
        """``F_lam(x)``."""
        return self._pair(x)[0]

    def matrix_inverse(self, x: int) -> np.ndarray:
        """``F_lam(x)^-1`` accumulated from closed-form inverse steps."""
        return self._pair(x)[1]

    def _pair(self, x: int) -> tuple[np.ndarray, np.ndarray]:
        x = int(x)
        if self._lo <= x <= self._hi:
            return self._F[x], self._Fi[x]
        hit = self._spot.get(x)
        if hit is not None:
            return hit
        jump = self._try_jump(x)
        if jump is not None:
            self._spot[x] = jump
            return jump
        while self._hi < x:
            h = self._hi
            self._F[h + 1] = self.transfer(h) @ self._F[h]
            self._Fi[h + 1] = self._Fi[h] @ self.transfer_inverse(h)
            self._hi = h + 1
        while self._lo > x:
            lo = self._lo
            self._F[lo - 1] = self.transfer_inverse(lo - 1) @ self._F[lo]
            self._Fi[lo - 1] = self._Fi[lo] @ self.transfer(lo - 1)
            self._lo = lo - 1
        return self._F[x], self._Fi[x]

    def span(self, y: int, x: int) -> np.ndarray:
        """``F(x) F(y)^{-1}`` accumulated by transfer steps anchored at ``y``.

        Stepping from ``y`` keeps the relative error tied to the growth of
        the product itself; forming ``matrix(x) @ matrix_inverse(y)`` would
        instead inherit the (possibly enormous) condition number of
        ``F(y)``.
        """
        y, x = int(y), int(x)
        if y == 0:
            return self.matrix(x)
        tbl = self._span.get(y)
        if tbl is None:
            tbl = {y: _EYE.copy()}
            self._span[y] = tbl
            self._span_rng[y] = [y, y]
        rng = self._span_rng[y]
        while rng[1] < x:
            h = rng[1]
            tbl[h + 1] = self.transfer(h) @ tbl[h]
            rng[1] = h + 1
        while rng[0] > x:
            lo = rng[0]
            tbl[lo - 1] = self.transfer_inverse(lo - 1) @ tbl[lo]
            rng[0] = lo - 1
        return tbl[x]

    # -- constant-tail shortcut -------------------------------------------------

    def _tail_eig(self, side: int):
        """Eigen data of the constant tail transfer on ``side`` (+1/-1)."""
        got = self._eig.get(side, "miss")
        if got != "miss":
            return got
        coin = self.field.right_tail if side > 0 else self.field.left_tail
        edge = self.field.plus_edge if side > 0 else -self.field.minus_edge
        T = transfer_matrix(self.field, edge if side > 0 else edge - 1, self.lam)
        zp, zm = _tail_roots(coin, self.lam)
        data = None
        if abs(zm - zp) > _JUMP_GAP * max(1.0, abs(zm)):
            P = np.column_stack([_tail_eigvec(T, zp), _tail_eigvec(T, zm)])
            det = P[0, 0] * P[1, 1] - P[0, 1] * P[1, 0]
            if abs(det) > _JUMP_GAP:
                Pi = np.array([[P[1, 1], -P[0, 1]], [-P[1, 0], P[0, 0]]]) / det
                data = (edge, zp, zm, P, Pi)
        self._eig[side] = data
        return data

    def _try_jump(self, x: int):
        if not self.fast_tail:
            return None
        side = 1 if x > 0 else -1
        data = self._tail_eig(side)
        if data is None:
            return None
        edge, zp, zm, P, Pi = data
        steps = x - edge if side > 0 else edge - x
        if steps < _JUMP_MIN:
            return None
        Fe, Fei = self._pair(edge)
        k = steps if side > 0 else -steps
        D = np.diag([zp**k, zm**k]).astype(complex)
        Di = np.diag([zp**-k, zm**-k]).astype(complex)
        F = P @ D @ Pi @ Fe
        Fi = Fei @ P @ Di @ Pi
        return F, Fi


def propagator(field: CoinField, x: int, lam: complex) -> np.ndarray:
    """``F_lam(x)`` as a one-shot call (build a cocycle for sweeps)."""
    return PropagatorCocycle(field, lam).matrix(x)


# -- exact-identity battery -----------------------------------------------------

IDENTITY_SUITE_LABELS: tuple[str, ...] = (
    "cocycle_step",
    "left_projector_intertwine",
    "right_projector_intertwine",
    "zL_from_transfer_and_coin",
    "zR_from_transfer_and_coin",
    "projector_partition",
    "coin_reassembly",
    "transfer_conjugation_step",
    "cocycle_conjugation",
    "three_term_eigen_relation",
)


def _maxabs(m: np.ndarray) -> float:
    return float(np.max(np.abs(m)))


def identity_suite(field: CoinField, x: int, lam: complex) -> np.ndarray:
    """Scaled residuals of the ten structural identities at site ``x``.

    Entry order matches :data:`IDENTITY_SUITE_LABELS`.  All ten vanish
    identically for exact arithmetic, any coin field satisfying the
    standing assumption, and any ``lam != 0`` (the circle included).

    Each residual is the max-abs misfit divided by ``max(1, s)`` where
    ``s`` is the product of the max-abs norms of the factors entering the
    left-hand side.  The identities equate small matrices built from
    large, cancelling products, so a raw misfit mostly measures the size
    of the intermediates; the scaled form stays requirement-grade across
    the whole parameter range.
    """
    lam = _check_lam(lam)
    lam_s = reflect(lam)
    coc = PropagatorCocycle(field, lam)
    coc_s = PropagatorCocycle(field, lam_s)

    cx = coin_at(field, x)
    C = cx.matrix
    Cd = coin_at(field, x - 1)
    pj0 = site_projectors(coin_at(field, 0))
    pj = site_projectors(cx)
    pj_up = site_projectors(coin_at(field, x + 1))

    T_here = coc.transfer(x)
    T_down = coc.transfer(x - 1)
    Ti_here = coc.transfer_inverse(x)
    Ts_here = coc_s.transfer(x)

    F = coc.matrix(x)
    F_up = coc.matrix(x + 1)
    F_down = coc.matrix(x - 1)
    Fs = coc_s.matrix(x)

    a_up = coin_at(field, x + 1).a
    d_down = Cd.d

    def scaled(misfit: float, *factors: float) -> float:
        s = 1.0
        for f in factors:
            s *= f
        return misfit / max(1.0, s)

    r = np.empty(10)
    r[0] = scaled(_maxabs(F_up - T_here @ F), _maxabs(T_here), _maxabs(F))
    r[1] = scaled(_maxabs(PI_L @ C @ T_down - lam * PI_L), _maxabs(T_down))
    r[2] = scaled(_maxabs(PI_R @ C @ Ti_here - lam * PI_R), _maxabs(Ti_here))
    r[3] = max(
        scaled(
            _maxabs(pj.zL - (lam / a_up) * Ti_here @ PI_L),
            abs(lam / a_up),
            _maxabs(Ti_here),
        ),
        scaled(_maxabs(pj.zL - (cx.delta / cx.d) * C.conj().T @ PI_L), abs(1 / cx.d)),
    )
    r[4] = max(
        scaled(
            _maxabs(pj.zR - (lam / d_down) * T_down @ PI_R),
            abs(lam / d_down),
            _maxabs(T_down),
        ),
        scaled(_maxabs(pj.zR - (cx.delta / cx.a) * C.conj().T @ PI_R), abs(1 / cx.a)),
    )
    r[5] = max(
        scaled(_maxabs(pj.zL.conj().T + pj.zR - _EYE), _maxabs(pj.zL) + _maxabs(pj.zR)),
        scaled(_maxabs(pj.zL + pj.zR.conj().T - _EYE), _maxabs(pj.zL) + _maxabs(pj.zR)),
    )
    r[6] = max(
        scaled(
            _maxabs(cx.a * pj.zL.conj().T + cx.d * pj.zR.conj().T - C),
            abs(cx.a) * _maxabs(pj.zL) + abs(cx.d) * _maxabs(pj.zR),
        ),
        scaled(
            _maxabs(PI_L @ C @ pj.zL.conj().T + PI_R @ C @ pj.zR.conj().T - C),
            _maxabs(pj.zL) + _maxabs(pj.zR),
        ),
    )
    diff = pj.zL - pj.zR
    diff_up = pj_up.zL - pj_up.zR
    diff0 = pj0.zL - pj0.zR
    r[7] = scaled(
        _maxabs(T_here @ diff @ Ts_here.conj().T - diff_up),
        _maxabs(T_here),
        _maxabs(diff),
        _maxabs(Ts_here),
    )
    r[8] = scaled(
        _maxabs(F @ diff0 @ Fs.conj().T - diff),
        _maxabs(F),
        _maxabs(diff0),
        _maxabs(Fs),
    )
    r[9] = scaled(
        _maxabs(C @ F - lam * PI_L @ F_down - lam * PI_R @ F_up),
        max(_maxabs(F), abs(lam) * _maxabs(F_down), abs(lam) * _maxabs(F_up)),
    )
    return r


def determinant_residuals(field: CoinField, x: int, lam: complex) -> np.ndarray:
    """Residuals of the determinant laws for both transfer conventions.

    Returns ``[ |det T(x) - d(x)/a(x+1)|, |det S(x) - d(x)/a(x)|,
    ||det S(x)| - 1| ]`` — the last holds because the coins are unitary.
    """
    lam = _check_lam(lam)
    T = transfer_matrix(field, x, lam)
    S = alt_transfer(field, x, lam)
    lo = coin_at(field, x)
    hi = coin_at(field, x + 1)
    detT = T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0]
    detS = S[0, 0] * S[1, 1] - S[0, 1] * S[1, 0]
    return np.array(
        [
            abs(detT - lo.d / hi.a),
            abs(detS - lo.d / lo.a),
            abs(abs(detS) - 1.0),
        ]
    )


def hs_partial_sums(
    field: CoinField,
    lam: complex,
    side: int = 1,
    threshold: float = 1e6,
    cap: int = 5000,
) -> np.ndarray:
    """Partial sums of ``sum_x ||F_lam(x)||_HS^2`` along one tail.

    For ``|lam| != 1`` the series diverges; the returned (monotone) partial
    sums stop as soon as they exceed ``threshold``.  Raises
    :class:`SlowConvergence` if ``cap`` sites do not get there.
    """
    if side not in (1, -1):
        raise ValueError("side must be +1 or -1")
    coc = PropagatorCocycle(field, lam)
    sums = []
    total = 0.0
    for n in range(1, cap + 1):
        F = coc.matrix(side * n)
        total += float(np.sum(np.abs(F) ** 2))
        sums.append(total)
        if total > threshold:
            return np.array(sums)
    raise SlowConvergence(
        f"HS partial sums reached only {total:.3e} after {cap} sites"
    )


def chirality_interleave(values, x: int) -> np.ndarray:
    """The staggered vector ``[f_L(x-1), f_R(x)]`` from a site->C^2 mapping."""
    zero = np.zeros(2, dtype=complex)
    lo = np.asarray(values.get(x - 1, zero), dtype=complex)
    hi = np.asarray(values.get(x, zero), dtype=complex)
    return np.array([lo[0], hi[1]], dtype=complex)


def wronskian(
    field: CoinField,
    lam: complex,
    u: Sequence[complex],
    v: Sequence[complex],
    x: int,
    cocycle: PropagatorCocycle | None = None,
) -> float:
    """|det| of the interleaved pair built from two eigensolutions.

    For ``f = F_lam(.) u`` and ``g = F_lam(.) v`` the staggered vectors
    ``[f_L(x-1), f_R(x)]`` propagate by the unimodular-determinant
    single-coin transfer, so this value is independent of ``x``.
    """
    coc = cocycle if cocycle is not None else PropagatorCocycle(field, lam)
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    f = {x - 1: coc.matrix(x - 1) @ u, x: coc.matrix(x) @ u}
    g = {x - 1: coc.matrix(x - 1) @ v, x: coc.matrix(x) @ v}
    jf = chirality_interleave(f, x)
    jg = chirality_interleave(g, x)
    return abs(jf[0] * jg[1] - jf[1] * jg[0])
