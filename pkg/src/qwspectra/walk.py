"""The walk operator, inhomogeneous solvers, and the walk-adapted Fourier transform.

The evolution acts on ``l^2(Z) x C^2`` by

    (U psi)(x) = PI_L C(x+1) psi(x+1) + PI_R C(x-1) psi(x-1),

i.e. left components hop left, right components hop right, after the coin
acts at the departure site.  This module solves ``(U - lam) Psi = f`` and
``(U* - conj(lam)) Phi = f`` in closed form through transfer-cocycle
kernels, provides the finitely-supported left inverse of ``U - lam``, and
builds the Laurent-polynomial transform ``f -> fhat`` that diagonalizes
the walk in the expansion theorems downstream.
"""
from __future__ import annotations

import math
from typing import Callable, Mapping, Sequence

import numpy as np

from .coins import CoinField, coin_at, site_projectors
from .transfer import PropagatorCocycle, reflect

__all__ = [
    "StateVector",
    "apply_walk",
    "apply_adjoint",
    "walk_pointwise",
    "adjoint_pointwise",
    "eigenfunction",
    "solver_kernel",
    "conjugate_kernel",
    "adjoint_kernel",
    "solve_inhomogeneous",
    "conjugate_solver",
    "left_inverse",
    "LaurentTransform",
    "qw_fourier",
    "fourier_eval",
    "laurent_from_circle",
]

_ZERO2 = np.zeros(2, dtype=complex)


def _fsum_complex(parts) -> complex:
    re = math.fsum(p.real for p in parts)
    im = math.fsum(p.imag for p in parts)
    return complex(re, im)


class StateVector:
    """Finitely supported element of ``l^2(Z) x C^2`` with value semantics.

    Entries with max-abs below 1e-300 are pruned so the reported support
    is genuinely zero-free.  Instances are immutable; arithmetic returns
    new vectors.  Norms and inner products run through compensated
    summation, and the inner product is linear in its *first* argument:
    ``<u, v> = sum_i u_i conj(v_i)``.
    """

    __slots__ = ("_values",)

    # keep numpy scalars out of __getitem__-based sequence coercion
    __array_ufunc__ = None

    def __init__(self, values: Mapping[int, Sequence[complex]] | None = None):
        store: dict[int, np.ndarray] = {}
        for site, vec in (values or {}).items():
            arr = np.array(vec, dtype=complex).reshape(2)
            if float(np.max(np.abs(arr))) < 1e-300:
                continue
            arr.setflags(write=False)
            store[int(site)] = arr
        self._values = store

    @classmethod
    def delta(cls, site: int, vec: Sequence[complex]) -> "StateVector":
        """``delta_site (x) vec``."""
        return cls({site: vec})

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(sorted(self._values))

    def __len__(self) -> int:
        return len(self._values)

    def __bool__(self) -> bool:
        return bool(self._values)

    def __getitem__(self, site: int) -> np.ndarray:
        return self._values.get(site, _ZERO2)

    def items(self):
        return self._values.items()

    def to_dict(self) -> dict[int, np.ndarray]:
        return {s: v.copy() for s, v in self._values.items()}

    def __add__(self, other: "StateVector") -> "StateVector":
        out = {s: v.copy() for s, v in self._values.items()}
        for s, v in other._values.items():
            out[s] = out.get(s, _ZERO2) + v
        return StateVector(out)

    def __sub__(self, other: "StateVector") -> "StateVector":
        return self + (-1.0) * other

    def __rmul__(self, scalar: complex) -> "StateVector":
        return StateVector({s: scalar * v for s, v in self._values.items()})

    def __neg__(self) -> "StateVector":
        return (-1.0) * self

    def norm(self) -> float:
        total = math.fsum(
            float(abs(comp)) ** 2 for v in self._values.values() for comp in v
        )
        return math.sqrt(total)

    def inner(self, other: "StateVector") -> complex:
        parts = []
        for s, v in self._values.items():
            w = other._values.get(s)
            if w is not None:
                parts.append(v[0] * w[0].conjugate())
                parts.append(v[1] * w[1].conjugate())
        return _fsum_complex(parts) if parts else 0j

    # -- JSON ----------------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "entries": {
                str(s): [[float(c.real), float(c.imag)] for c in v]
                for s, v in sorted(self._values.items())
            }
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "StateVector":
        return cls(
            {
                int(site): [complex(p[0], p[1]) for p in pair]
                for site, pair in data.get("entries", {}).items()
            }
        )

    def __repr__(self) -> str:  # pragma: no cover - debugging aid
        return f"StateVector({{{', '.join(f'{s}: {v}' for s, v in sorted(self._values.items()))}}})"


# -- the walk and its adjoint ---------------------------------------------------


def apply_walk(field: CoinField, psi: StateVector) -> StateVector:
    """``U psi`` (support grows by at most one site on each side)."""
    out: dict[int, np.ndarray] = {}
    for s, v in psi.items():
        cv = coin_at(field, s).matrix @ v
        left = out.get(s - 1)
        out[s - 1] = (left if left is not None else _ZERO2) + np.array(
            [cv[0], 0.0], dtype=complex
        )
        right = out.get(s + 1)
        out[s + 1] = (right if right is not None else _ZERO2) + np.array(
            [0.0, cv[1]], dtype=complex
        )
    return StateVector(out)


def apply_adjoint(field: CoinField, phi: StateVector) -> StateVector:
    """``U* phi``."""
    out: dict[int, np.ndarray] = {}
    for s, v in phi.items():
        up = coin_at(field, s + 1).matrix.conj().T @ np.array(
            [v[0], 0.0], dtype=complex
        )
        down = coin_at(field, s - 1).matrix.conj().T @ np.array(
            [0.0, v[1]], dtype=complex
        )
        cur = out.get(s + 1)
        out[s + 1] = (cur if cur is not None else _ZERO2) + up
        cur = out.get(s - 1)
        out[s - 1] = (cur if cur is not None else _ZERO2) + down
    return StateVector(out)


def walk_pointwise(field: CoinField, values: Mapping[int, np.ndarray], x: int) -> np.ndarray:
    """``(U psi)(x)`` for a plain site->C^2 mapping (missing sites read as 0)."""
    up = np.asarray(values.get(x + 1, _ZERO2), dtype=complex)
    down = np.asarray(values.get(x - 1, _ZERO2), dtype=complex)
    cu = coin_at(field, x + 1).matrix @ up
    cd = coin_at(field, x - 1).matrix @ down
    return np.array([cu[0], cd[1]], dtype=complex)


def adjoint_pointwise(field: CoinField, values: Mapping[int, np.ndarray], x: int) -> np.ndarray:
    """``(U* phi)(x)`` for a plain site->C^2 mapping."""
    down = np.asarray(values.get(x - 1, _ZERO2), dtype=complex)
    up = np.asarray(values.get(x + 1, _ZERO2), dtype=complex)
    Cs = coin_at(field, x).matrix.conj().T
    return Cs @ np.array([down[0], up[1]], dtype=complex)


def eigenfunction(
    field: CoinField, lam: complex, u: Sequence[complex], window: Sequence[int]
) -> dict[int, np.ndarray]:
    """The transfer-cocycle solution ``x -> F_lam(x) u`` on ``window``.

    Solves the eigenvalue relation ``(U - lam) Phi = 0`` pointwise;
    typically unbounded, so it is returned as a sampled mapping rather
    than a :class:`StateVector`.
    """
    coc = PropagatorCocycle(field, lam)
    u = np.asarray(u, dtype=complex)
    return {int(x): coc.matrix(x) @ u for x in window}


# -- solution kernels ------------------------------------------------------------


def _zdiff(field: CoinField, y: int) -> np.ndarray:
    pj = site_projectors(coin_at(field, y))
    return pj.zL - pj.zR


def _solver_kernel(field: CoinField, coc: PropagatorCocycle, x: int, y: int) -> np.ndarray:
    """Kernel v(x, y) with Psi = F(.) w + sum_y v(., y) f(y) the solution."""
    li = 1.0 / coc.lam
    if x >= 1 and y == 0:
        return li * coc.matrix(x) @ site_projectors(coin_at(field, 0)).zL
    if x <= -1 and y == 0:
        return li * coc.matrix(x) @ site_projectors(coin_at(field, 0)).zR
    if 1 <= y <= x - 1:
        return li * coc.span(y, x) @ _zdiff(field, y)
    if 1 <= y == x:
        return -li * site_projectors(coin_at(field, x)).zR
    if x + 1 <= y <= -1:
        return -li * coc.span(y, x) @ _zdiff(field, y)
    if y == x <= -1:
        return -li * site_projectors(coin_at(field, x)).zL
    return np.zeros((2, 2), dtype=complex)


def solver_kernel(field: CoinField, lam: complex, x: int, y: int) -> np.ndarray:
    """Kernel of the right-inverse-with-boundary-value solver for ``U - lam``.

    Supported only for ``y`` between 0 and ``x`` (and vanishing on the
    row ``x = 0``), so the solver below touches finitely many terms.
    """
    return _solver_kernel(field, PropagatorCocycle(field, lam), x, y)


def _conjugate_kernel(field: CoinField, coc_s: PropagatorCocycle, x: int, y: int) -> np.ndarray:
    """Kernel w0(x, y) for the adjoint equation; cocycle runs at lam* = 1/conj(lam)."""
    ls = coc_s.lam  # this *is* lam* already
    if x >= 1 and y == 0:
        return ls * coc_s.matrix(x) @ site_projectors(coin_at(field, 0)).zR.conj().T
    if x <= -1 and y == 0:
        return ls * coc_s.matrix(x) @ site_projectors(coin_at(field, 0)).zL.conj().T
    if 1 <= y <= x - 1:
        return -ls * coc_s.span(y, x) @ _zdiff(field, y).conj().T
    if 1 <= y == x:
        return -ls * site_projectors(coin_at(field, x)).zL.conj().T
    if x + 1 <= y <= -1:
        return ls * coc_s.span(y, x) @ _zdiff(field, y).conj().T
    if y == x <= -1:
        return -ls * site_projectors(coin_at(field, x)).zR.conj().T
    return np.zeros((2, 2), dtype=complex)


def conjugate_kernel(field: CoinField, lam: complex, x: int, y: int) -> np.ndarray:
    """Kernel of the adjoint-equation solver ``(U* - conj(lam)) Phi = f``."""
    return _conjugate_kernel(field, PropagatorCocycle(field, reflect(lam)), x, y)


def _adjoint_kernel(field: CoinField, coc_s: PropagatorCocycle, x: int, y: int) -> np.ndarray:
    """Left-inverse kernel w(x, y); supported for x between 0 and y."""
    li = 1.0 / reflect(coc_s.lam)  # recover 1/lam from the starred cocycle
    pj0 = site_projectors(coin_at(field, 0))
    if x == 0 and y >= 1:
        return li * pj0.zR @ coc_s.matrix(y).conj().T
    if x == 0 and y <= -1:
        return li * pj0.zL @ coc_s.matrix(y).conj().T
    if 1 <= x <= y - 1:
        return -li * _zdiff(field, x) @ coc_s.span(x, y).conj().T
    if 1 <= x == y:
        return -li * site_projectors(coin_at(field, x)).zL
    if y + 1 <= x <= -1:
        return li * _zdiff(field, x) @ coc_s.span(x, y).conj().T
    if y == x <= -1:
        return -li * site_projectors(coin_at(field, x)).zR
    return np.zeros((2, 2), dtype=complex)


def adjoint_kernel(field: CoinField, lam: complex, x: int, y: int) -> np.ndarray:
    """Kernel of the left inverse of ``U - lam`` on finitely supported data.

    Coincides with ``conjugate_kernel(field, lam, y, x)†`` — both routes
    are kept so they can be checked against each other.
    """
    return _adjoint_kernel(field, PropagatorCocycle(field, reflect(lam)), x, y)


# -- solvers ---------------------------------------------------------------------


def solve_inhomogeneous(
    field: CoinField,
    lam: complex,
    f: StateVector,
    w: Sequence[complex],
    window: Sequence[int],
) -> dict[int, np.ndarray]:
    """The unique solution of ``(U - lam) Psi = f`` with ``Psi(0) = w``.

    Returned as a sampled mapping on ``window`` (solutions generically
    grow, so they are not square-summable).
    """
    coc = PropagatorCocycle(field, lam)
    w = np.asarray(w, dtype=complex)
    out: dict[int, np.ndarray] = {}
    supp = f.support
    for x in window:
        x = int(x)
        acc = coc.matrix(x) @ w
        for y in supp:
            if (x >= 1 and 0 <= y <= x) or (x <= -1 and x <= y <= 0):
                acc = acc + _solver_kernel(field, coc, x, y) @ f[y]
        out[x] = acc
    return out


def conjugate_solver(
    field: CoinField,
    lam: complex,
    f: StateVector,
    w: Sequence[complex],
    window: Sequence[int],
) -> dict[int, np.ndarray]:
    """The unique solution of ``(U* - conj(lam)) Phi = f`` with ``Phi(0) = w``.

    The homogeneous part rides the cocycle at the reflected parameter
    ``lam* = 1/conj(lam)``.
    """
    coc_s = PropagatorCocycle(field, reflect(lam))
    w = np.asarray(w, dtype=complex)
    out: dict[int, np.ndarray] = {}
    supp = f.support
    for x in window:
        x = int(x)
        acc = coc_s.matrix(x) @ w
        for y in supp:
            if (x >= 1 and 0 <= y <= x) or (x <= -1 and x <= y <= 0):
                acc = acc + _conjugate_kernel(field, coc_s, x, y) @ f[y]
        out[x] = acc
    return out


def left_inverse(field: CoinField, lam: complex, f: StateVector) -> StateVector:
    """``W_lam f`` with ``W_lam (U - lam) = I`` on finitely supported vectors.

    The output is supported between 0 and the support of ``f``, hence
    finite.  Applying ``U - lam`` from the left instead leaves the defect
    ``(U - lam) W_lam f = f - delta_0 (x) fhat(lam)``.
    """
    coc_s = PropagatorCocycle(field, reflect(lam))
    supp = f.support
    if not supp:
        return StateVector()
    out: dict[int, np.ndarray] = {}
    for x in range(min(0, supp[0]), max(0, supp[-1]) + 1):
        acc = _ZERO2.copy()
        for y in supp:
            if (y >= 1 and 0 <= x <= y) or (y <= -1 and y <= x <= 0):
                acc = acc + _adjoint_kernel(field, coc_s, x, y) @ f[y]
        out[x] = acc
    return StateVector(out)


# -- walk-adapted Fourier transform ----------------------------------------------


class LaurentTransform:
    """A C^2-valued Laurent polynomial ``lam -> sum_k c_k lam^k``.

    The transform of a finitely supported state is of this form, with
    degree bounded by the support radius.  Callable on scalars or numpy
    arrays of nonzero complex numbers.
    """

    def __init__(self, coefficients: Mapping[int, Sequence[complex]]):
        self.coefficients: dict[int, np.ndarray] = {}
        for k, c in coefficients.items():
            arr = np.array(c, dtype=complex).reshape(2)
            if float(np.max(np.abs(arr))) > 1e-14:
                arr.setflags(write=False)
                self.coefficients[int(k)] = arr

    @property
    def degree_range(self) -> tuple[int, int]:
        if not self.coefficients:
            return (0, 0)
        ks = sorted(self.coefficients)
        return (ks[0], ks[-1])

    def __call__(self, lam):
        lam = np.asarray(lam, dtype=complex)
        out = np.zeros(lam.shape + (2,), dtype=complex)
        for k, c in self.coefficients.items():
            out += np.multiply.outer(lam**k, c)
        return out


def fourier_eval(field: CoinField, f: StateVector, lam: complex) -> np.ndarray:
    """``fhat(lam) = sum_x F_{lam*}(x)* f(x)`` evaluated directly."""
    coc_s = PropagatorCocycle(field, reflect(lam))
    acc = _ZERO2.copy()
    for x, v in f.items():
        acc = acc + coc_s.matrix(x).conj().T @ v
    return acc


def laurent_from_circle(fn: Callable[[complex], np.ndarray], radius: int) -> dict[int, np.ndarray]:
    """Coefficients of an array-valued Laurent polynomial of degree <= ``radius``.

    Samples ``fn`` at ``2 * radius + 3`` roots of unity and inverts the
    DFT; exact (up to roundoff) whenever ``fn`` really is a Laurent
    polynomial within the stated degree.
    """
    n = 2 * radius + 3
    nodes = [np.exp(2j * np.pi * j / n) for j in range(n)]
    samples = [np.asarray(fn(z), dtype=complex) for z in nodes]
    coeffs: dict[int, np.ndarray] = {}
    for k in range(-radius, radius + 1):
        acc = np.zeros_like(samples[0])
        for z, s in zip(nodes, samples):
            acc = acc + s * z ** (-k)
        coeffs[k] = acc / n
    return coeffs


def qw_fourier(field: CoinField, f: StateVector) -> LaurentTransform:
    """The walk-adapted transform of ``f`` as an explicit Laurent polynomial.

    Built from unit-circle samples of the direct formula (where the
    reflection ``lam* = lam`` makes evaluation cheap), then verified
    against nothing — callers can compare with :func:`fourier_eval`.
    """
    supp = f.support
    if not supp:
        return LaurentTransform({})
    radius = max(abs(supp[0]), abs(supp[-1]))
    return LaurentTransform(
        laurent_from_circle(lambda z: fourier_eval(field, f, z), radius)
    )
