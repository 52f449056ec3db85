"""Unitary coins, coin fields over the integer line, and site projectors.

A *coin* is a 2x2 unitary acting on the internal (left/right) degree of
freedom at one lattice site.  A *coin field* assigns a coin to every site
of ``Z`` using two eventually-constant tails plus finitely many overrides.
Everything downstream (transfer matrices, Green functions, spectral
measures) consumes these two types.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field as _dc_field
from typing import Iterator, Mapping

import numpy as np

from .errors import AssumptionViolation

__all__ = [
    "UnitaryCoin",
    "CoinField",
    "SiteProjectors",
    "ValidationIssue",
    "ValidationReport",
    "PI_L",
    "PI_R",
    "IDENTITY",
    "HADAMARD",
    "su2_coin",
    "coin_from_matrix",
    "coin_at",
    "site_projectors",
    "validate_field",
    "homogeneous_field",
    "two_phase_field",
    "random_coin",
    "random_field",
    "field_to_json",
    "field_from_json",
    "load_field",
    "save_field",
]


def _frozen(m: np.ndarray) -> np.ndarray:
    out = np.asarray(m, dtype=complex)
    out.setflags(write=False)
    return out


#: Projector onto the left chirality component.
PI_L = _frozen([[1.0, 0.0], [0.0, 0.0]])
#: Projector onto the right chirality component.
PI_R = _frozen([[0.0, 0.0], [0.0, 1.0]])


@dataclass(frozen=True)
class UnitaryCoin:
    """One 2x2 unitary coin with entries ``[[a, b], [c, d]]``.

    The standing assumption throughout the package is ``a != 0`` (for a
    unitary matrix this forces ``d != 0`` as well); it guarantees the
    transfer matrices below exist.  Unitarity pins ``d = delta * conj(a)``
    and ``c = -delta * conj(b)`` where ``delta = det`` has unit modulus.
    """

    a: complex
    b: complex
    c: complex
    d: complex

    def __post_init__(self) -> None:
        for name in ("a", "b", "c", "d"):
            object.__setattr__(self, name, complex(getattr(self, name)))

    @property
    def delta(self) -> complex:
        """Determinant ``a*d - b*c`` (unit modulus for a unitary coin)."""
        return self.a * self.d - self.b * self.c

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.a, self.b], [self.c, self.d]], dtype=complex)

    def validate(self, tol: float = 1e-12) -> list[str]:
        """Return a list of human-readable defects (empty when clean)."""
        issues: list[str] = []
        m = self.matrix
        res = float(np.max(np.abs(m.conj().T @ m - np.eye(2))))
        if res > tol:
            issues.append(f"not unitary (residual {res:.3e})")
        if abs(self.a) <= tol:
            issues.append("entry a vanishes")
        if abs(self.d) <= tol:
            issues.append("entry d vanishes")
        return issues

    def unitarity_residual(self) -> float:
        m = self.matrix
        return float(np.max(np.abs(m.conj().T @ m - np.eye(2))))

    def is_close(self, other: "UnitaryCoin", tol: float = 1e-12) -> bool:
        return (
            abs(self.a - other.a) <= tol
            and abs(self.b - other.b) <= tol
            and abs(self.c - other.c) <= tol
            and abs(self.d - other.d) <= tol
        )


def su2_coin(alpha: complex, beta: complex) -> UnitaryCoin:
    """Coin ``[[alpha, beta], [-conj(beta), conj(alpha)]]`` (determinant 1).

    Raises :class:`AssumptionViolation` unless |alpha|^2 + |beta|^2 = 1 and
    alpha != 0.
    """
    alpha = complex(alpha)
    beta = complex(beta)
    if abs(abs(alpha) ** 2 + abs(beta) ** 2 - 1.0) > 1e-12:
        raise AssumptionViolation("su2_coin needs |alpha|^2 + |beta|^2 = 1")
    if abs(alpha) < 1e-300:
        raise AssumptionViolation("su2_coin needs alpha != 0")
    return UnitaryCoin(alpha, beta, -beta.conjugate(), alpha.conjugate())


def coin_from_matrix(m: np.ndarray) -> UnitaryCoin:
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise ValueError("coin matrix must be 2x2")
    return UnitaryCoin(m[0, 0], m[0, 1], m[1, 0], m[1, 1])


IDENTITY = UnitaryCoin(1.0, 0.0, 0.0, 1.0)
#: Balanced coin [[1, 1], [-1, 1]] / sqrt(2)  (determinant 1).
HADAMARD = su2_coin(1 / math.sqrt(2), 1 / math.sqrt(2))


@dataclass(frozen=True)
class CoinField:
    """Coin assignment ``x -> C(x)`` on Z: two tails plus finite overrides.

    ``overrides[x]`` wins at site ``x``; otherwise ``right_tail`` applies for
    ``x > max(overrides)`` and ``left_tail`` for ``x < min(overrides)``.
    Sites between overrides fall back to the right tail for ``x >= 0`` and
    the left tail for ``x < 0`` (the tails are only *eventually* binding,
    so any convention works; this one keeps ``coin_at`` total).
    """

    left_tail: UnitaryCoin
    right_tail: UnitaryCoin
    overrides: Mapping[int, UnitaryCoin] = _dc_field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "overrides", {int(k): v for k, v in dict(self.overrides).items()}
        )

    @property
    def plus_edge(self) -> int:
        """Smallest N >= 0 beyond which the one-step transfer is purely right-tail.

        The transfer at y couples the coins at y and y + 1, so this needs
        every site >= N to wear the right tail.
        """
        if not self.overrides:
            return 0
        return max(0, max(self.overrides) + 1)

    @property
    def minus_edge(self) -> int:
        """Depth N >= 1 with the one-step transfer purely left-tail below -N.

        For y <= -N - 1 both coins entering the transfer at y sit at
        negative non-override sites.  N is at least 1 even without
        overrides: the transfer at -1 already touches the site-0 coin.
        """
        if not self.overrides:
            return 1
        return max(1, 1 - min(self.overrides))

    def sites_of_interest(self) -> Iterator[int]:
        yield from sorted(self.overrides)


def coin_at(field: CoinField, x: int) -> UnitaryCoin:
    """The coin at site ``x``."""
    c = field.overrides.get(x)
    if c is not None:
        return c
    return field.right_tail if x >= 0 else field.left_tail


@dataclass(frozen=True)
class SiteProjectors:
    """The pair ``z_L(x), z_R(x)`` of oblique site projectors.

    ``z_L = [[1, 0], [-c/d, 0]]`` and ``z_R = [[0, -b/a], [0, 1]]`` satisfy
    ``z_L* + z_R = z_L + z_R* = I`` and intertwine with the transfer
    cocycle; they are the building blocks of every solution kernel here.
    """

    zL: np.ndarray
    zR: np.ndarray


def site_projectors(coin: UnitaryCoin) -> SiteProjectors:
    if abs(coin.a) < 1e-300 or abs(coin.d) < 1e-300:
        raise AssumptionViolation("site projectors need a != 0 and d != 0")
    zL = _frozen([[1.0, 0.0], [-coin.c / coin.d, 0.0]])
    zR = _frozen([[0.0, -coin.b / coin.a], [0.0, 1.0]])
    return SiteProjectors(zL, zR)


# -- validation ---------------------------------------------------------------


@dataclass(frozen=True)
class ValidationIssue:
    site: str
    message: str
    residual: float


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    issues: tuple[ValidationIssue, ...]
    min_abs_a: float
    max_unitarity_residual: float


def validate_field(field: CoinField, tol: float = 1e-12) -> ValidationReport:
    """Check unitarity and the a,d != 0 assumption at every distinct coin.

    Tails plus overrides exhaust the distinct coins, so the check is finite
    even though the field lives on all of Z.
    """
    labeled: list[tuple[str, UnitaryCoin]] = [
        ("left_tail", field.left_tail),
        ("right_tail", field.right_tail),
    ]
    labeled.extend((str(x), c) for x, c in sorted(field.overrides.items()))
    issues: list[ValidationIssue] = []
    min_a = math.inf
    max_res = 0.0
    for label, coin in labeled:
        res = coin.unitarity_residual()
        max_res = max(max_res, res)
        min_a = min(min_a, abs(coin.a))
        for msg in coin.validate(tol):
            issues.append(ValidationIssue(label, msg, res))
    return ValidationReport(not issues, tuple(issues), min_a, max_res)


# -- constructors -------------------------------------------------------------


def homogeneous_field(coin: UnitaryCoin) -> CoinField:
    """Same coin at every site."""
    return CoinField(coin, coin, {})


def two_phase_field(
    c0: UnitaryCoin, c_plus: UnitaryCoin, c_minus: UnitaryCoin
) -> CoinField:
    """``c_minus`` for x <= -1, ``c0`` at the origin, ``c_plus`` for x >= 1."""
    return CoinField(c_minus, c_plus, {0: c0})


def random_coin(rng: np.random.Generator, min_abs_a: float = 1e-3) -> UnitaryCoin:
    """Haar-ish random 2x2 unitary via QR, rejecting |a| < ``min_abs_a``."""
    while True:
        g = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
        q, r = np.linalg.qr(g)
        # Fix the QR phase ambiguity so the draw is rotation invariant.
        q = q * (np.diag(r) / np.abs(np.diag(r)))
        coin = coin_from_matrix(q)
        if abs(coin.a) >= min_abs_a and abs(coin.d) >= min_abs_a:
            return coin


def random_field(
    rng: np.random.Generator,
    max_overrides: int = 4,
    window: int = 3,
    min_abs_a: float = 1e-3,
) -> CoinField:
    """Random tails plus up to ``max_overrides`` overrides inside [-window, window]."""
    n_over = int(rng.integers(0, max_overrides + 1))
    sites = rng.choice(np.arange(-window, window + 1), size=n_over, replace=False)
    overrides = {int(s): random_coin(rng, min_abs_a) for s in sites}
    return CoinField(random_coin(rng, min_abs_a), random_coin(rng, min_abs_a), overrides)


# -- JSON round trip ----------------------------------------------------------


def _cplx_out(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def _cplx_in(pair) -> complex:
    re, im = pair
    return complex(float(re), float(im))


def _coin_to_json(coin: UnitaryCoin) -> dict:
    return {
        "a": _cplx_out(coin.a),
        "b": _cplx_out(coin.b),
        "c": _cplx_out(coin.c),
        "d": _cplx_out(coin.d),
    }


def _coin_from_json(data: Mapping) -> UnitaryCoin:
    return UnitaryCoin(*(_cplx_in(data[k]) for k in ("a", "b", "c", "d")))


def field_to_json(field: CoinField) -> dict:
    return {
        "left_tail": _coin_to_json(field.left_tail),
        "right_tail": _coin_to_json(field.right_tail),
        "overrides": {str(x): _coin_to_json(c) for x, c in sorted(field.overrides.items())},
    }


def field_from_json(data: Mapping) -> CoinField:
    return CoinField(
        _coin_from_json(data["left_tail"]),
        _coin_from_json(data["right_tail"]),
        {int(x): _coin_from_json(c) for x, c in data.get("overrides", {}).items()},
    )


def load_field(path) -> CoinField:
    with open(path, "r", encoding="utf-8") as fh:
        return field_from_json(json.load(fh))


def save_field(field: CoinField, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(field_to_json(field), fh, indent=2, sort_keys=True)
        fh.write("\n")
