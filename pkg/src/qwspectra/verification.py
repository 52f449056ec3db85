"""The package's verifiable contracts, bundled as one battery.

Each check is a zero-argument callable returning a :class:`CheckResult`;
seeds are fixed so every run draws the same random fields.  The battery
is what ``qwspectra verify`` runs and what the acceptance tests assert,
so the tolerances here are the product's advertised guarantees, not
test-local conveniences.
"""

from __future__ import annotations

import cmath
import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .coins import (
    HADAMARD,
    IDENTITY,
    CoinField,
    homogeneous_field,
    random_field,
    su2_coin,
)
from .resolvent import (
    GreenFunction,
    caratheodory,
    conjugation_check,
    neumann_x0,
    x0_via_directions,
)
from .spectral import (
    TwoPhaseModel,
    exact_moment_oracle,
    homogeneous_density,
    homogeneous_measure,
    homogeneous_x0,
    inversion_check,
    parseval_check,
    point_mass_estimate,
    point_mass_residue,
    radial_density,
    resolvent_representation_check,
    translation_invariance_residuals,
    two_phase_measure,
    two_phase_point_masses,
    x_star_numeric,
)
from .transfer import determinant_residuals, hs_partial_sums, identity_suite
from .walk import (
    StateVector,
    adjoint_pointwise,
    apply_walk,
    conjugate_solver,
    eigenfunction,
    fourier_eval,
    left_inverse,
    qw_fourier,
    solve_inhomogeneous,
    walk_pointwise,
)

__all__ = ["CheckResult", "ACCEPTANCE_CHECKS", "run_all"]

_EYE = np.eye(2, dtype=complex)


@dataclass(frozen=True)
class CheckResult:
    """Outcome of one acceptance check."""

    name: str
    passed: bool
    worst: float
    tol: float
    elapsed: float
    detail: str = ""

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        extra = f"  [{self.detail}]" if self.detail else ""
        return (
            f"{status}  {self.name}: worst residual {self.worst:.3e}"
            f" (tol {self.tol:.0e}, {self.elapsed:.1f}s){extra}"
        )


def _random_lam(
    rng: np.random.Generator, lo: float = 0.2, hi: float = 5.0, gap: float = 0.05
) -> complex:
    """Log-uniform modulus in ``[lo, hi]`` staying ``gap`` away from the circle."""
    while True:
        r = math.exp(rng.uniform(math.log(lo), math.log(hi)))
        if abs(r - 1.0) >= gap:
            return r * cmath.exp(1j * rng.uniform(0.0, 2.0 * math.pi))


def _random_state(rng: np.random.Generator, radius: int) -> StateVector:
    vals = {
        x: rng.standard_normal(2) + 1j * rng.standard_normal(2)
        for x in range(-radius, radius + 1)
    }
    return StateVector(vals)


def _sv_max(v: StateVector) -> float:
    return max((float(np.max(np.abs(val))) for _, val in v.items()), default=0.0)


def check_identity_suite() -> CheckResult:
    """Ten cocycle/projector identities plus both determinant laws."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    worst_suite = 0.0
    worst_det = 0.0
    sites = np.arange(-3, 4)
    for _ in range(100):
        field = random_field(rng, min_abs_a=0.05)
        for _ in range(20):
            lam = _random_lam(rng)
            for x in rng.choice(sites, size=4, replace=False):
                worst_suite = max(worst_suite, float(np.max(identity_suite(field, int(x), lam))))
                worst_det = max(worst_det, float(np.max(determinant_residuals(field, int(x), lam))))
    elapsed = time.perf_counter() - t0
    worst = max(worst_suite, worst_det)
    return CheckResult(
        "identity suite + determinant laws",
        worst < 1e-12 and elapsed < 10.0,
        worst,
        1e-12,
        elapsed,
        f"suite {worst_suite:.1e}, det {worst_det:.1e}",
    )


def check_solver_contracts() -> CheckResult:
    """Two-sided solvers, the left inverse, and its one-defect identity."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(50):
        field = random_field(rng, min_abs_a=0.05)
        lam = _random_lam(rng)
        radius = int(rng.integers(1, 9))
        f = _random_state(rng, radius)
        w = rng.standard_normal(2) + 1j * rng.standard_normal(2)
        lo, hi = -radius - 4, radius + 4
        window = range(lo, hi + 1)
        fm = max(1.0, _sv_max(f))

        sol = solve_inhomogeneous(field, lam, f, w, window)
        worst = max(worst, float(np.max(np.abs(sol[0] - w))))
        for x in range(lo + 1, hi):
            res = walk_pointwise(field, sol, x) - lam * sol[x] - f[x]
            local = max(
                float(np.max(np.abs(sol[y]))) for y in (x - 1, x, x + 1)
            )
            scale = max(1.0, (1.0 + abs(lam)) * local, float(np.max(np.abs(f[x]))))
            worst = max(worst, float(np.max(np.abs(res))) / scale)

        conj = conjugate_solver(field, lam, f, w, window)
        worst = max(worst, float(np.max(np.abs(conj[0] - w))))
        lam_c = complex(lam).conjugate()
        for x in range(lo + 1, hi):
            res = adjoint_pointwise(field, conj, x) - lam_c * conj[x] - f[x]
            local = max(
                float(np.max(np.abs(conj[y]))) for y in (x - 1, x, x + 1)
            )
            scale = max(1.0, (1.0 + abs(lam)) * local, float(np.max(np.abs(f[x]))))
            worst = max(worst, float(np.max(np.abs(res))) / scale)

        g = apply_walk(field, f) - lam * f
        back = left_inverse(field, lam, g)
        worst = max(worst, _sv_max(back - f) / fm)

        wf = left_inverse(field, lam, f)
        defect = apply_walk(field, wf) - lam * wf
        target = f - StateVector.delta(0, fourier_eval(field, f, lam))
        scale = max(1.0, fm, _sv_max(wf) * (1.0 + abs(lam)))
        worst = max(worst, _sv_max(defect - target) / scale)
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "solver contracts (both sides, left inverse, defect)",
        worst < 1e-11 and elapsed < 10.0,
        worst,
        1e-11,
        elapsed,
    )


def check_fourier_shift() -> CheckResult:
    """``F[Uf](lam) = lam F[f](lam)`` sampled at random parameters."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(31)
    worst = 0.0
    for _ in range(4):
        field = random_field(rng, min_abs_a=0.05)
        f = _random_state(rng, 4)
        hat_f = qw_fourier(field, f)
        hat_uf = qw_fourier(field, apply_walk(field, f))
        for _ in range(16):
            lam = _random_lam(rng, 0.5, 2.0, gap=0.0)
            worst = max(worst, float(np.max(np.abs(hat_uf(lam) - lam * hat_f(lam)))))
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "transform shift property",
        worst < 1e-12,
        worst,
        1e-12,
        elapsed,
    )


def check_x0_oracles() -> CheckResult:
    """Boundary-direction ``x0`` against the state-evolution power series."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(41)
    worst = 0.0
    n = 0
    while n < 50:
        field = random_field(rng, min_abs_a=0.05)
        lam = _random_lam(rng, 0.2, 5.0)
        if 0.8 < abs(lam) < 1.25:
            continue
        n += 1
        err = float(
            np.max(np.abs(x0_via_directions(field, lam).x0 - neumann_x0(field, lam, tol=1e-12)))
        )
        worst = max(worst, err)
    ident = homogeneous_field(IDENTITY)
    exact = 0.0
    for lam in (0.3, 0.5j, -0.7, 0.2 - 0.6j):
        exact = max(exact, float(np.max(np.abs(x0_via_directions(ident, lam).x0))))
    exact = max(
        exact,
        float(np.max(np.abs(x0_via_directions(ident, 2.0).x0 + 0.5 * _EYE))),
    )
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "x0 oracle equivalence",
        worst < 1e-9 and exact < 1e-12,
        worst,
        1e-9,
        elapsed,
        f"identity-field closed values {exact:.1e} (tol 1e-12)",
    )


def check_homogeneous_closed_form() -> CheckResult:
    """Constant-field ``x0`` closed form and the shift-invariance law."""
    t0 = time.perf_counter()
    field = homogeneous_field(HADAMARD)
    closed = homogeneous_x0(HADAMARD, 0.5)
    spot = abs(closed[0, 0] - (-0.2723928))
    err_dir = float(np.max(np.abs(closed - x0_via_directions(field, 0.5).x0)))
    err_neu = float(np.max(np.abs(closed - neumann_x0(field, 0.5, tol=1e-12))))
    err_inv = 0.0
    for lam in (0.5, 0.4 - 0.3j, 1.9 + 0.4j):
        held, _ = translation_invariance_residuals(HADAMARD, lam)
        err_inv = max(err_inv, held)
    worst = max(err_dir, err_neu, err_inv)
    elapsed = time.perf_counter() - t0
    return CheckResult(
        "homogeneous closed form",
        worst < 1e-10 and spot < 1e-6,
        worst,
        1e-10,
        elapsed,
        f"spot (1,1) off by {spot:.1e}; directions {err_dir:.1e}, series {err_neu:.1e}, shift law {err_inv:.1e}",
    )


def check_homogeneous_measure() -> CheckResult:
    """Constant-field measure: total mass, radial limits, operator moments."""
    t0 = time.perf_counter()
    worst_mass = 0.0
    worst_radial = 0.0
    worst_mom = 0.0
    coins = (HADAMARD, su2_coin(0.8 * cmath.exp(0.2j), 0.6 * cmath.exp(-0.4j)))
    for coin in coins:
        field = homogeneous_field(coin)
        meas = homogeneous_measure(coin)
        worst_mass = max(worst_mass, float(np.max(np.abs(meas.total_mass(10**5) - _EYE))))
        for arc in meas.arcs:
            for th in np.linspace(arc.lo + 0.15, arc.hi - 0.15, 12):
                rl = radial_density(field, float(th))
                cl = homogeneous_density(coin, np.array([th]))[0]
                worst_radial = max(worst_radial, float(np.max(np.abs(rl.matrix - cl))))
        moms = meas.moments(20, 10**5)
        for n in range(-20, 21):
            worst_mom = max(
                worst_mom, float(np.max(np.abs(moms[n] - exact_moment_oracle(field, n))))
            )
    elapsed = time.perf_counter() - t0
    passed = (
        worst_mass < 1e-6 and worst_radial < 1e-3 and worst_mom < 1e-6 and elapsed < 60.0
    )
    return CheckResult(
        "homogeneous measure reproduction",
        passed,
        max(worst_mass, worst_mom),
        1e-6,
        elapsed,
        f"mass {worst_mass:.1e}, radial sup {worst_radial:.1e} (tol 1e-3), moments {worst_mom:.1e}",
    )


def _example_two_phase() -> TwoPhaseModel:
    r = 1.0 / math.sqrt(2.0)
    return TwoPhaseModel(su2_coin(r, r), su2_coin(r, 1j * r), su2_coin(r, r))


def check_two_phase() -> CheckResult:
    """Junction-model measure: embedded eigenvalues, masses, moments."""
    t0 = time.perf_counter()
    model = _example_two_phase()
    field = model.field
    err_x = abs(x_star_numeric(model) - model.x_star)
    spot = abs(model.x_star - 0.8164966)
    masses = two_phase_point_masses(model)
    worst_psd = 0.0
    worst_route = 0.0
    worst_est = 0.0
    for pm in masses:
        herm = float(np.max(np.abs(pm.matrix - pm.matrix.conj().T)))
        eig = np.linalg.eigvalsh(pm.matrix)
        worst_psd = max(worst_psd, herm, max(0.0, -float(eig[0])), abs(float(eig[0])))
        worst_route = max(
            worst_route, float(np.max(np.abs(point_mass_residue(model, pm.location) - pm.matrix)))
        )
        est = point_mass_estimate(field, pm.location)
        worst_est = max(worst_est, float(np.max(np.abs(est.matrix - pm.matrix))))
    meas = two_phase_measure(model)
    err_mass = float(np.max(np.abs(meas.total_mass(10**5) - _EYE)))
    moms = meas.moments(20, 10**5)
    worst_mom = 0.0
    for n in range(-20, 21):
        worst_mom = max(worst_mom, float(np.max(np.abs(moms[n] - exact_moment_oracle(field, n)))))
    elapsed = time.perf_counter() - t0
    passed = (
        err_x < 1e-9
        and spot < 1e-6
        and worst_psd < 1e-8
        and err_mass < 1e-6
        and worst_est < 1e-5
        and worst_mom < 1e-5
        and elapsed < 120.0
    )
    worst = max(err_x, worst_psd, err_mass, worst_est, worst_mom)
    return CheckResult(
        "two-phase measure reproduction",
        passed,
        worst,
        1e-5,
        elapsed,
        f"x* {err_x:.1e}, psd/rank1 {worst_psd:.1e}, mass {err_mass:.1e}, "
        f"estimator {worst_est:.1e}, moments {worst_mom:.1e}, routes {worst_route:.1e}",
    )


def check_expansion() -> CheckResult:
    """Parseval, pointwise inversion, and the resolvent representation."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(53)
    hom_field = homogeneous_field(HADAMARD)
    hom_meas = homogeneous_measure(HADAMARD)
    model = _example_two_phase()
    tp_field = model.field
    tp_meas = two_phase_measure(model)
    worst_hom = 0.0
    worst_tp = 0.0
    for _ in range(20):
        f, g = _random_state(rng, 3), _random_state(rng, 3)
        lhs, rhs = parseval_check(hom_field, hom_meas, f, g)
        worst_hom = max(worst_hom, abs(lhs - rhs))
        worst_hom = max(worst_hom, inversion_check(hom_field, hom_meas, f, range(-6, 7)))
        lhs, rhs = parseval_check(tp_field, tp_meas, f, g)
        worst_tp = max(worst_tp, abs(lhs - rhs))
        worst_tp = max(worst_tp, inversion_check(tp_field, tp_meas, f, range(-6, 7)))
    worst_res = 0.0
    for k in range(10):
        lam = _random_lam(rng, 0.3, 3.0, gap=0.1)
        f, g = _random_state(rng, 2), _random_state(rng, 2)
        if k % 2 == 0:
            lhs, rhs = resolvent_representation_check(hom_field, hom_meas, lam, f, g)
        else:
            lhs, rhs = resolvent_representation_check(tp_field, tp_meas, lam, f, g)
        worst_res = max(worst_res, abs(lhs - rhs))
    elapsed = time.perf_counter() - t0
    passed = worst_hom < 1e-6 and worst_tp < 1e-5 and worst_res < 1e-5
    return CheckResult(
        "expansion theorems (Parseval, inversion, resolvent)",
        passed,
        max(worst_hom, worst_tp, worst_res),
        1e-5,
        elapsed,
        f"homogeneous {worst_hom:.1e} (tol 1e-6), two-phase {worst_tp:.1e}, resolvent {worst_res:.1e}",
    )


def check_structure() -> CheckResult:
    """Rank-one brackets, positivity on the disc, conjugation, HS divergence."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(67)
    worst_rank = 0.0
    worst_conj = 0.0
    min_eig = math.inf
    for _ in range(15):
        field = random_field(rng, min_abs_a=0.05)
        lam = _random_lam(rng, 0.2, 5.0)
        green = GreenFunction(field, lam)
        worst_rank = max(worst_rank, *green.rank_certificates())
        worst_conj = max(worst_conj, conjugation_check(field, lam))
        lam_in = rng.uniform(0.1, 0.95) * cmath.exp(1j * rng.uniform(0.0, 2.0 * math.pi))
        re_x = caratheodory(field, lam_in)[1]
        min_eig = min(min_eig, float(np.linalg.eigvalsh(re_x)[0]))
    hs_ok = True
    for lam in (0.6, 1.7 * cmath.exp(0.9j), 0.35 * cmath.exp(2.0j)):
        field = random_field(rng, min_abs_a=0.05)
        for side in (1, -1):
            sums = hs_partial_sums(field, lam, side=side, threshold=1e6)
            hs_ok = hs_ok and sums[-1] > 1e6 and bool(np.all(np.diff(sums) >= 0.0))
    elapsed = time.perf_counter() - t0
    worst = max(worst_rank, worst_conj)
    passed = worst < 1e-10 and min_eig > 0.0 and hs_ok
    return CheckResult(
        "structure theorems (rank-one, positivity, conjugation, HS)",
        passed,
        worst,
        1e-10,
        elapsed,
        f"rank {worst_rank:.1e}, conjugation {worst_conj:.1e}, "
        f"min Re-x eigenvalue {min_eig:.2e}, HS divergence {'ok' if hs_ok else 'FAILED'}",
    )


def check_eigenvalue_semantics() -> CheckResult:
    """Atoms are eigenvalues: projections decay; none exist for constant fields."""
    t0 = time.perf_counter()
    model = _example_two_phase()
    field = model.field
    worst_ratio = 0.0
    worst_tail = 0.0
    for pm in two_phase_point_masses(model)[:2]:
        eigval, eigvec = np.linalg.eigh(pm.matrix)
        v = eigvec[:, int(np.argmax(eigval))]
        phi = eigenfunction(field, pm.location, v, range(-30, 31))
        norms = {x: float(np.linalg.norm(phi[x])) for x in range(-30, 31)}
        center = max(norms[x] for x in range(-2, 3))
        worst_ratio = max(worst_ratio, max(norms[30], norms[-30]) / center)
        for x in range(5, 30):
            worst_tail = max(worst_tail, norms[x + 1] / norms[x], norms[-x - 1] / norms[-x])
    worst_hom = 0.0
    for coin in (HADAMARD, su2_coin(0.8 * cmath.exp(0.2j), 0.6 * cmath.exp(-0.4j))):
        hom = homogeneous_field(coin)
        for th in (0.3, 1.1, 2.0, 4.4, 5.5):
            est = point_mass_estimate(hom, cmath.exp(1j * th))
            worst_hom = max(worst_hom, float(np.max(np.abs(est.matrix))))
    elapsed = time.perf_counter() - t0
    passed = worst_ratio < 1e-4 and worst_tail < 0.95 and worst_hom < 1e-10
    return CheckResult(
        "eigenvalue semantics (decay at atoms, none for constant fields)",
        passed,
        worst_hom,
        1e-10,
        elapsed,
        f"30-site decay ratio {worst_ratio:.1e}, tail step ratio {worst_tail:.2f}, "
        f"constant-field masses {worst_hom:.1e}",
    )


ACCEPTANCE_CHECKS: tuple[tuple[str, Callable[[], CheckResult]], ...] = (
    ("identities", check_identity_suite),
    ("solvers", check_solver_contracts),
    ("shift", check_fourier_shift),
    ("x0-oracles", check_x0_oracles),
    ("homogeneous-x0", check_homogeneous_closed_form),
    ("homogeneous-measure", check_homogeneous_measure),
    ("two-phase", check_two_phase),
    ("expansion", check_expansion),
    ("structure", check_structure),
    ("eigenvalues", check_eigenvalue_semantics),
)


def run_all() -> list[CheckResult]:
    """Run the full battery in order; print one line per check."""
    results = []
    for _, fn in ACCEPTANCE_CHECKS:
        res = fn()
        print(res.line, flush=True)
        results.append(res)
    return results
