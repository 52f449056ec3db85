"""Green function of the walk through decaying boundary directions.

Off the unit circle the constant-tail transfer matrix has one contracting
and one expanding eigenvalue.  Transporting the corresponding eigenvectors
back to the origin gives the two boundary directions ``v+`` (square-summable
towards +oo) and ``v-`` (towards -oo); the resolvent kernel is assembled
from them through a single 2x2 matrix ``x0(lam)``, the object every
spectral quantity downstream is read off from:

    R_lam(x, y) = F_lam(x) [x0 + zL(0)/lam] F_{lam*}(y)*    (y < x)
    R_lam(x, y) = F_lam(x) [x0 + zR(0)/lam] F_{lam*}(y)*    (y > x)

with both bracket matrices of rank one.  ``x(lam) = I + 2 lam x0(lam)``
is a matrix Caratheodory function: its Hermitian real part is positive
definite inside the disc, and its radial boundary behaviour *is* the
spectral measure (handled in :mod:`qwspectra.spectral`).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .coins import CoinField, coin_at, site_projectors
from .errors import (
    DegenerateSpectralParameter,
    DependentDirections,
    SlowConvergence,
    UnitModulusLambda,
)
from .transfer import PropagatorCocycle, _tail_eigvec, _tail_roots, reflect, transfer_matrix
from .walk import StateVector, apply_adjoint, apply_walk

__all__ = [
    "TailSplit",
    "DecayingDirections",
    "ResolventData",
    "GreenKernelEntry",
    "GreenFunction",
    "perp",
    "tail_eigensplit",
    "decaying_directions",
    "x0_via_directions",
    "neumann_x0",
    "green_kernel",
    "resolvent_norm_sq",
    "caratheodory",
    "conjugation_check",
    "cayley_form",
    "cayley_form_regularized",
]

_EYE = np.eye(2, dtype=complex)

#: |det[v+ v-]| below this means the directions merged: an eigenvalue.
DEPENDENT_TOL = 1e-10
_CIRCLE_TOL = 1e-12
_DEGENERATE_TOL = 1e-9


def _inner(u: np.ndarray, v: np.ndarray) -> complex:
    """Complex inner product, linear in the first slot."""
    return complex(np.sum(np.asarray(u) * np.asarray(v).conj()))


def perp(u: np.ndarray) -> np.ndarray:
    """``[-conj(u2), conj(u1)]`` — orthogonal to ``u``, never zero for u != 0."""
    u = np.asarray(u, dtype=complex)
    return np.array([-u[1].conjugate(), u[0].conjugate()])


@dataclass(frozen=True)
class TailSplit:
    """Contracting/expanding eigenpairs of a constant-coin transfer matrix."""

    z_plus: complex
    z_minus: complex
    w_plus: np.ndarray
    w_minus: np.ndarray


def tail_eigensplit(coin, lam: complex) -> TailSplit:
    """Eigen-split of the one-coin transfer with ``|z+| < 1 < |z-|``.

    Raises :class:`UnitModulusLambda` on the circle (no split exists),
    :class:`DegenerateSpectralParameter` when the two roots coalesce
    (branch points of the dispersion relation).
    """
    lam = complex(lam)
    if lam == 0:
        raise ValueError("lambda must be nonzero")
    if abs(abs(lam) - 1.0) < _CIRCLE_TOL:
        raise UnitModulusLambda(f"|lambda| = {abs(lam)!r} sits on the unit circle")
    zp, zm = _tail_roots(coin, lam)
    if abs(zm - zp) <= _DEGENERATE_TOL * max(1.0, abs(zm)):
        raise DegenerateSpectralParameter(
            f"transfer eigenvalues coalesce at lambda = {lam!r}"
        )
    fake = CoinField(coin, coin, {})
    T = transfer_matrix(fake, 0, lam)
    return TailSplit(zp, zm, _tail_eigvec(T, zp), _tail_eigvec(T, zm))


@dataclass(frozen=True)
class DecayingDirections:
    """Boundary directions at the origin plus their tail decay rates."""

    lam: complex
    v_plus: np.ndarray
    v_minus: np.ndarray
    z_plus: complex
    z_minus: complex
    edge_plus: int
    edge_minus: int


def decaying_directions(
    field: CoinField, lam: complex, cocycle: PropagatorCocycle | None = None
) -> DecayingDirections:
    """Directions ``v±`` whose cocycle orbits decay towards ``±oo``.

    ``v+ = F(N+)^{-1} w+`` pulls the right tail's contracting eigenvector
    back through the override window (``N+`` = first pure-tail site); the
    left side uses the expanding eigenvector, which contracts as x -> -oo.
    Raises :class:`DependentDirections` when the two directions are
    numerically parallel (then ``lam`` is an eigenvalue of the walk).
    """
    coc = cocycle if cocycle is not None else PropagatorCocycle(field, lam)
    split_r = tail_eigensplit(field.right_tail, lam)
    split_l = tail_eigensplit(field.left_tail, lam)
    n_plus = field.plus_edge
    n_minus = field.minus_edge
    vp = coc.matrix_inverse(n_plus) @ split_r.w_plus
    vm = coc.matrix_inverse(-n_minus) @ split_l.w_minus
    vp = vp / np.linalg.norm(vp)
    vm = vm / np.linalg.norm(vm)
    det = vp[0] * vm[1] - vp[1] * vm[0]
    if abs(det) < DEPENDENT_TOL:
        raise DependentDirections(
            f"boundary directions merge at lambda = {lam!r} (|det| = {abs(det):.2e})"
        )
    return DecayingDirections(
        complex(lam), vp, vm, split_r.z_plus, split_l.z_minus, n_plus, n_minus
    )


@dataclass(frozen=True)
class ResolventData:
    """``x0`` and the Caratheodory matrix at one spectral parameter."""

    lam: complex
    directions: DecayingDirections
    x0: np.ndarray
    x_matrix: np.ndarray


def x0_via_directions(field: CoinField, lam: complex) -> ResolventData:
    """The central 2x2 matrix ``x0(lam)`` from the boundary directions.

    Column by column:

        x0 e_L = -(1/lam) <zL(0) e_L, v+^perp> / <v-, v+^perp> . v-
        x0 e_R = -(1/lam) <zR(0) e_R, v-^perp> / <v+, v-^perp> . v+

    independent of the phase/scale choices inside ``v±``.
    """
    dirs = decaying_directions(field, lam)
    pj0 = site_projectors(coin_at(field, 0))
    vp, vm = dirs.v_plus, dirs.v_minus
    vp_perp, vm_perp = perp(vp), perp(vm)
    li = 1.0 / complex(lam)
    col_L = -li * _inner(pj0.zL[:, 0], vp_perp) / _inner(vm, vp_perp) * vm
    col_R = -li * _inner(pj0.zR[:, 1], vm_perp) / _inner(vp, vm_perp) * vp
    x0 = np.column_stack([col_L, col_R])
    return ResolventData(complex(lam), dirs, x0, _EYE + 2.0 * lam * x0)


def neumann_x0(
    field: CoinField, lam: complex, tol: float = 1e-10, cap: int = 10_000
) -> np.ndarray:
    """Oracle for ``x0``: power series of the resolvent around 0 or oo.

    Inside the disc, ``R(lam) = sum_n lam^n (U*)^{n+1}``; outside,
    ``R(lam) = -sum_n lam^{-(n+1)} U^n``; ``x0(lam)`` collects the kernel
    value at the origin.  Geometric tail bounds decide truncation; pure
    state evolution, no transfer matrices — an independent route.
    """
    lam = complex(lam)
    r = abs(lam)
    if abs(r - 1.0) < _CIRCLE_TOL:
        raise UnitModulusLambda("Neumann expansion needs |lambda| != 1")
    cols = []
    for unit in (np.array([1.0, 0j]), np.array([0j, 1.0])):
        psi = StateVector.delta(0, unit)
        acc = np.zeros(2, dtype=complex)
        if r < 1.0:
            for n in range(cap):
                psi = apply_adjoint(field, psi)
                acc = acc + (lam**n) * psi[0]
                if r ** (n + 1) / (1.0 - r) < tol:
                    break
            else:
                raise SlowConvergence("Neumann series cap exceeded inside the disc")
        else:
            s = 1.0 / r
            for n in range(cap):
                acc = acc - lam ** (-(n + 1)) * psi[0]
                if s ** (n + 1) / (1.0 - s) < tol:
                    break
                psi = apply_walk(field, psi)
            else:
                raise SlowConvergence("Neumann series cap exceeded outside the disc")
        cols.append(acc)
    return np.column_stack(cols)


@dataclass(frozen=True)
class GreenKernelEntry:
    """One kernel value ``R_lam(x, y)`` plus a diagonal cross-check residual."""

    x: int
    y: int
    matrix: np.ndarray
    pair_residual: float


class GreenFunction:
    """Kernel of ``(U - lam)^{-1}`` for one field and parameter.

    The off-diagonal bracket matrices are rank one, splitting as
    ``bracket_L = kappa_L v+ <., v-*>`` with ``v±`` the decaying directions
    at ``lam`` and ``v±*`` their twins at the reflected parameter.  Entries
    are assembled from those factors, with closed-form eigenvalue powers
    past the constant-tail edges — so a factor that should shrink never
    rides on a matrix product that grows.  On the diagonal the two
    equivalent assembly routes (through ``zL`` and through ``zR``) are both
    computed and their disagreement is reported with the entry.
    """

    def __init__(self, field: CoinField, lam: complex, data: ResolventData | None = None):
        self.field = field
        self.lam = complex(lam)
        self.data = data if data is not None else x0_via_directions(field, lam)
        self.coc = PropagatorCocycle(field, self.lam)
        self.coc_s = PropagatorCocycle(field, reflect(self.lam))
        self.dirs = self.data.directions
        self.dirs_s = decaying_directions(field, reflect(self.lam), self.coc_s)
        pj0 = site_projectors(coin_at(field, 0))
        li = 1.0 / self.lam
        #: rank-one matrices steering the kernel below/above the diagonal
        self.bracket_L = self.data.x0 + li * pj0.zL
        self.bracket_R = self.data.x0 + li * pj0.zR
        d, ds = self.dirs, self.dirs_s
        #: scalars of the rank-one splits of the brackets
        self.kappa_L = complex(np.vdot(d.v_plus, self.bracket_L @ ds.v_minus))
        self.kappa_R = complex(np.vdot(d.v_minus, self.bracket_R @ ds.v_plus))
        self._cols: dict[tuple[int, int], np.ndarray] = {}
        self._rows: dict[tuple[int, int], np.ndarray] = {}

    def _orbit(self, coc, dirs, side: int, x: int, cache) -> np.ndarray:
        """``F(x) v_side`` with closed-form tail powers past the decay edge."""
        key = (side, x)
        got = cache.get(key)
        if got is not None:
            return got
        e = dirs.edge_plus if side > 0 else -dirs.edge_minus
        v = dirs.v_plus if side > 0 else dirs.v_minus
        past_edge = x >= e if side > 0 else x <= e
        if past_edge:
            base = cache.get((side, e))
            if base is None:
                base = coc.matrix(e) @ v
                cache[(side, e)] = base
            z = dirs.z_plus if side > 0 else dirs.z_minus
            got = z ** (x - e) * base
        else:
            got = coc.matrix(x) @ v
        cache[key] = got
        return got

    def entry(self, x: int, y: int) -> GreenKernelEntry:
        x, y = int(x), int(y)
        if y < x:
            col = self._orbit(self.coc, self.dirs, 1, x, self._cols)
            row = self._orbit(self.coc_s, self.dirs_s, -1, y, self._rows)
            return GreenKernelEntry(x, y, self.kappa_L * np.outer(col, row.conj()), 0.0)
        if y > x:
            col = self._orbit(self.coc, self.dirs, -1, x, self._cols)
            row = self._orbit(self.coc_s, self.dirs_s, 1, y, self._rows)
            return GreenKernelEntry(x, y, self.kappa_R * np.outer(col, row.conj()), 0.0)
        li = 1.0 / self.lam
        pj = site_projectors(coin_at(self.field, x))
        cp = self._orbit(self.coc, self.dirs, 1, x, self._cols)
        rm = self._orbit(self.coc_s, self.dirs_s, -1, x, self._rows)
        cm = self._orbit(self.coc, self.dirs, -1, x, self._cols)
        rp = self._orbit(self.coc_s, self.dirs_s, 1, x, self._rows)
        via_L = self.kappa_L * np.outer(cp, rm.conj()) - li * pj.zL
        via_R = self.kappa_R * np.outer(cm, rp.conj()) - li * pj.zR
        return GreenKernelEntry(x, y, via_L, float(np.max(np.abs(via_L - via_R))))

    def apply(self, f: StateVector, sites) -> dict[int, np.ndarray]:
        """``(R(lam) f)(x)`` for ``x`` in ``sites``."""
        out: dict[int, np.ndarray] = {}
        for x in sites:
            acc = np.zeros(2, dtype=complex)
            for y, v in f.items():
                acc = acc + self.entry(int(x), y).matrix @ v
            out[int(x)] = acc
        return out

    def rank_certificates(self) -> tuple[float, float]:
        """|det| of both bracket matrices, scaled by their squared size."""
        out = []
        for m in (self.bracket_L, self.bracket_R):
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            scale = max(1.0, float(np.max(np.abs(m))) ** 2)
            out.append(abs(det) / scale)
        return out[0], out[1]

    def factor_residuals(self) -> tuple[float, float]:
        """Max-abs misfit of the rank-one splits of both bracket matrices."""
        d, ds = self.dirs, self.dirs_s
        rL = self.bracket_L - self.kappa_L * np.outer(d.v_plus, ds.v_minus.conj())
        rR = self.bracket_R - self.kappa_R * np.outer(d.v_minus, ds.v_plus.conj())
        return float(np.max(np.abs(rL))), float(np.max(np.abs(rR)))


def green_kernel(
    field: CoinField, lam: complex, x: int, y: int, data: ResolventData | None = None
) -> GreenKernelEntry:
    """One-shot ``R_lam(x, y)`` (build a :class:`GreenFunction` for sweeps)."""
    return GreenFunction(field, lam, data).entry(x, y)


def resolvent_norm_sq(
    field: CoinField, lam: complex, f: StateVector, tol: float = 1e-16, cap: int = 600
) -> float:
    """``||R(lam) f||^2`` summed until the geometric tails are exhausted."""
    green = GreenFunction(field, lam)
    supp = f.support
    lo = min(0, supp[0]) if supp else 0
    hi = max(0, supp[-1]) if supp else 0
    terms: list[float] = []
    with np.errstate(over="ignore"):
        for x in range(lo, hi + 1):
            terms.append(float(np.sum(np.abs(green.apply(f, [x])[x]) ** 2)))
        for sgn, start in ((1, hi + 1), (-1, lo - 1)):
            x = start
            for _ in range(cap):
                val = float(np.sum(np.abs(green.apply(f, [x])[x]) ** 2))
                terms.append(val)
                total = math.fsum(terms)
                if val < tol * max(total, 1e-30):
                    break
                x += sgn
            else:
                raise SlowConvergence("resolvent norm tail did not close")
    return math.fsum(terms)


def caratheodory(field: CoinField, lam: complex) -> tuple[np.ndarray, np.ndarray]:
    """``x(lam) = I + 2 lam x0(lam)`` and its Hermitian real part."""
    data = x0_via_directions(field, lam)
    x = data.x_matrix
    return x, (x + x.conj().T) / 2.0


def conjugation_check(field: CoinField, lam: complex) -> float:
    """Residual of the reflection law ``x0(lam)* = -lam* (I + lam* x0(lam*))``.

    Ties the values inside and outside the disc together; both sides are
    computed through independent direction calculations.
    """
    lam = complex(lam)
    ls = reflect(lam)
    left = x0_via_directions(field, lam).x0.conj().T
    right = -ls * (_EYE + ls * x0_via_directions(field, ls).x0)
    return float(np.max(np.abs(left - right)))


def cayley_form(field: CoinField, lam: complex, f: StateVector) -> complex:
    """``<(U - lam)^{-1} (U + lam) f, f>`` — the quadratic form behind positivity.

    Its real part equals ``(1 - |lam|^2) ||R(lam) f||^2``, which is the
    positivity statement feeding the Herglotz representation.
    """
    green = GreenFunction(field, lam)
    rf = green.apply(f, f.support)
    cross = sum(_inner(rf[x], f[x]) for x in f.support)
    return complex(f.inner(f) + 2.0 * lam * cross)


def cayley_form_regularized(field: CoinField, lam: complex, f: StateVector) -> complex:
    """The finite-sum regularization of :func:`cayley_form`.

    Subtracting the ``x0`` part of the kernel leaves cocycle-only double
    sums over the support of ``f``; the result extends holomorphically to
    all of ``C \\ {0}`` and on the unit circle its real part equals
    ``||fhat(zeta)||^2`` — the route by which density limits are proven.
    """
    lam = complex(lam)
    coc = PropagatorCocycle(field, lam)
    coc_s = PropagatorCocycle(field, reflect(lam))
    pj0 = site_projectors(coin_at(field, 0))
    supp = f.support
    Fs = {x: coc_s.matrix(x).conj().T @ f[x] for x in supp}
    F = {x: coc.matrix(x) for x in supp}
    parts: list[complex] = []
    for x in supp:
        for y in supp:
            if y <= x - 1:
                parts.append(_inner(F[x] @ pj0.zL @ Fs[y], f[x]))
            elif y >= x + 1:
                parts.append(_inner(F[x] @ pj0.zR @ Fs[y], f[x]))
            else:
                parts.append(_inner(F[x] @ pj0.zL @ Fs[x], f[x]))
                pj = site_projectors(coin_at(field, x))
                parts.append(-_inner(pj.zL @ f[x], f[x]))
    half = complex(sum(parts)) + 0.5 * f.norm() ** 2
    return 2.0 * half
