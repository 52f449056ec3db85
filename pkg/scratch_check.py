import numpy as np, cmath, math, time
from qwspectra.coins import HADAMARD, IDENTITY, su2_coin, homogeneous_field
from qwspectra.resolvent import x0_via_directions, caratheodory
from qwspectra.transfer import PropagatorCocycle
from qwspectra.walk import StateVector, apply_walk, walk_pointwise
from qwspectra.spectral import *
from qwspectra.spectral import _hat_on_nodes

rng = np.random.default_rng(7)
P = lambda *a: print(*a, flush=True)

# 1. homogeneous x0 anchors
x0_h = homogeneous_x0(HADAMARD, 0.5)
frozen = np.array([[-0.2723928, -0.2126779], [0.2126779, -0.2723928]])
P("x0 Hadamard(0.5) err vs frozen:", np.max(np.abs(x0_h - frozen)))
fld_h = homogeneous_field(HADAMARD)
P("x0 Hadamard(0.5) vs directions:", np.max(np.abs(x0_h - x0_via_directions(fld_h, 0.5).x0)))
for lam in [0.3+0.2j, 1.7-0.9j, 0.5j, -2.2+0.1j]:
    err = np.max(np.abs(homogeneous_x0(HADAMARD, lam) - x0_via_directions(fld_h, lam).x0))
    P(f"x0 closed vs directions at {lam}: {err:.2e}")
# caratheodory closed form vs I+2*lam*x0
for lam in [0.5, 0.3+0.2j, 2.0-1.1j]:
    err = np.max(np.abs(homogeneous_caratheodory(HADAMARD, lam) - (np.eye(2) + 2*lam*homogeneous_x0(HADAMARD, lam))))
    P(f"caratheodory consistency {lam}: {err:.2e}")

# identity coin anchors
P("identity x0(2) vs -I/2:", np.max(np.abs(homogeneous_x0(IDENTITY, 2.0) + 0.5*np.eye(2))))
P("identity x0(0.5):", np.max(np.abs(homogeneous_x0(IDENTITY, 0.5))))

# 2. translation invariance
for lam in [0.5, 0.4-0.3j, 1.9+0.4j]:
    held, printed = translation_invariance_residuals(HADAMARD, lam)
    P(f"translation inv at {lam}: held={held:.2e} printed={printed:.2e}")

# 3. density anchor at zeta=i
d = homogeneous_density(HADAMARD, np.array([math.pi/2]))[0]
P("density(1,1) at i:", d[0,0], "err vs sqrt2:", abs(d[0,0]-math.sqrt(2)))
P("density Hermitian err:", np.max(np.abs(d - d.conj().T)))

# 4. total mass + moments of homogeneous measure
meas_h = homogeneous_measure(HADAMARD)
for nodes in (2**14, 10**5):
    tm = meas_h.total_mass(nodes)
    P(f"hom total mass err ({nodes} nodes):", np.max(np.abs(tm - np.eye(2))))
t0 = time.time()
moms = meas_h.moments(20, 10**5)
worst = 0.0
for n in range(-20, 21):
    worst = max(worst, np.max(np.abs(moms[n] - exact_moment_oracle(fld_h, n))))
P(f"hom moments |n|<=20 vs operator oracle: {worst:.2e}  ({time.time()-t0:.1f}s)")
P("M_-5 vs M_5*:", np.max(np.abs(moms[-5] - moms[5].conj().T)))

# 5. radial density vs closed form (away from band edges, BOTH bands)
t0 = time.time()
worst = 0.0
for th in list(np.linspace(0.9, math.pi-0.9, 9)) + list(np.linspace(math.pi+0.9, 2*math.pi-0.9, 9)):
    rl = radial_density(fld_h, th)
    closed = homogeneous_density(HADAMARD, np.array([th]))[0]
    worst = max(worst, np.max(np.abs(rl.matrix - closed)))
P(f"hom radial vs closed density (both bands): {worst:.2e} ({time.time()-t0:.1f}s)")
# outside the band: radial limit ~ 0
rl = radial_density(fld_h, 0.2)
P("hom radial outside band (->0):", np.max(np.abs(rl.matrix)))

# 6. homogeneous point masses all ~ 0
worst = 0.0
for th in [0.3, 1.1, 2.0, 4.4]:
    est = point_mass_estimate(fld_h, cmath.exp(1j*th))
    worst = max(worst, np.max(np.abs(est.matrix)))
P("hom point-mass estimates (->0):", worst)

# 7. two-phase example anchors
r2 = 1/math.sqrt(2)
mod = TwoPhaseModel(su2_coin(r2, r2), su2_coin(r2, 1j*r2), su2_coin(r2, r2))
P("x_star:", mod.x_star, "err:", abs(mod.x_star - math.sqrt(2/3)))
P("y_star err:", abs(mod.y_star - math.sqrt(1/3)))
P("x_star numeric err:", abs(x_star_numeric(mod) - mod.x_star))
masses = two_phase_point_masses(mod)
m0 = masses[0].matrix
P("mass(zeta*) diag:", m0[0,0].real, m0[1,1].real, "trace err vs 1/3:", abs(np.trace(m0).real - 1/3))
# residue route agreement, all four
for pm in masses:
    res = point_mass_residue(mod, pm.location)
    P(f"  residue vs real-form at {pm.location:.4f}: {np.max(np.abs(res - pm.matrix)):.2e}")
# estimator agreement + PSD + rank1
fld2 = mod.field
for pm in masses:
    est = point_mass_estimate(fld2, pm.location)
    ev = np.linalg.eigvalsh(pm.matrix)
    P(f"  est vs closed at {pm.location:.4f}: {np.max(np.abs(est.matrix - pm.matrix)):.2e}  eig={ev}  det={np.linalg.det(pm.matrix):.1e}")

# x0 closed vs directions for two-phase
for lam in [0.5, 0.3+0.2j, 1.6-0.8j, -0.4+0.45j]:
    err = np.max(np.abs(two_phase_x0(mod, lam) - x0_via_directions(fld2, lam).x0))
    P(f"two-phase x0 closed vs directions at {lam}: {err:.2e}")

# two-phase radial vs closed density, both bands (generic angles)
worst = 0.0
for th in [1.0, 1.9, math.pi+1.0, math.pi+1.9]:
    rl = radial_density(fld2, th)
    closed = two_phase_density(mod, np.array([th]))[0]
    worst = max(worst, np.max(np.abs(rl.matrix - closed)))
P(f"two-phase radial vs closed density (both bands): {worst:.2e}")

# total mass bands+atoms = I
meas2 = two_phase_measure(mod)
for nodes in (2**14, 10**5):
    tm = meas2.total_mass(nodes)
    P(f"two-phase total mass err ({nodes}):", np.max(np.abs(tm - np.eye(2))))
# moments vs oracle
t0 = time.time()
moms2 = meas2.moments(12, 10**5)
worst = max(np.max(np.abs(moms2[n] - exact_moment_oracle(fld2, n))) for n in range(-12, 13))
P(f"two-phase moments vs oracle: {worst:.2e} ({time.time()-t0:.1f}s)")

# 8. GENERIC two-phase (complex phases everywhere) — catches sign conventions
a_p = 0.6*cmath.exp(0.3j); a_m = 0.6*cmath.exp(-1.1j); b = 0.8*cmath.exp(0.7j)
b0 = (0.3+0.45j)*cmath.exp(0.7j); a0 = math.sqrt(1-abs(b0)**2)*cmath.exp(-0.4j)
mog = TwoPhaseModel(su2_coin(a_m, b), su2_coin(a0, b0), su2_coin(a_p, b))
P("generic: s,t:", mog.s, mog.t, " x*:", mog.x_star)
P("generic x_star numeric err:", abs(x_star_numeric(mog) - mog.x_star))
fldg = mog.field
for lam in [0.45, 0.3-0.5j, 1.8+0.6j]:
    err = np.max(np.abs(two_phase_x0(mog, lam) - x0_via_directions(fldg, lam).x0))
    P(f"generic x0 closed vs directions at {lam}: {err:.2e}")
gm = two_phase_point_masses(mog)
for pm in gm:
    res = point_mass_residue(mog, pm.location)
    est = point_mass_estimate(fldg, pm.location)
    ev = np.linalg.eigvalsh(pm.matrix)
    P(f"  generic mass {pm.location:.4f}: res-agree {np.max(np.abs(res-pm.matrix)):.2e}  est-agree {np.max(np.abs(est.matrix-pm.matrix)):.2e}  min-eig {ev.min():.2e}")
measg = two_phase_measure(mog)
P("generic total mass err (1e5):", np.max(np.abs(measg.total_mass(10**5) - np.eye(2))))
worst = max(np.max(np.abs(measg.moment(n, 10**5) - exact_moment_oracle(fldg, n))) for n in range(-8, 9))
P("generic moments vs oracle:", f"{worst:.2e}")

# 9. circle_cocycle vs scalar cocycle
th_test = np.array([0.7, 2.3])
F = circle_cocycle(fldg, th_test, -6, 6)
worst = 0.0
for i, t in enumerate(th_test):
    coc = PropagatorCocycle(fldg, cmath.exp(1j*t))
    for x in range(-6, 7):
        worst = max(worst, np.max(np.abs(F[x][i] - coc.matrix(x))))
P("circle_cocycle vs scalar:", f"{worst:.2e}")

# 10. parseval / inversion / resolvent representation
def rand_state(radius=3):
    return StateVector({x: rng.standard_normal(2) + 1j*rng.standard_normal(2) for x in range(-radius, radius+1)})

for name, fld, meas, tol_nodes in (("hom", fld_h, meas_h, 2**14), ("two-phase", fld2, meas2, 2**14), ("generic", fldg, measg, 2**14)):
    worst_p = worst_i = worst_r = 0.0
    for _ in range(5):
        f, g = rand_state(), rand_state()
        lhs, rhs = parseval_check(fld, meas, f, g, tol_nodes)
        worst_p = max(worst_p, abs(lhs-rhs))
        worst_i = max(worst_i, inversion_check(fld, meas, f, range(-6, 7), tol_nodes))
        lam = 0.55*cmath.exp(1j*rng.uniform(0, 2*math.pi))
        lr, rr_ = resolvent_representation_check(fld, meas, lam, f, g, tol_nodes)
        worst_r = max(worst_r, abs(lr-rr_))
    P(f"{name}: parseval {worst_p:.2e}  inversion {worst_i:.2e}  resolvent-rep {worst_r:.2e}")

# 11. eigenfunction decay at zeta*
pm = masses[0]
f = rand_state(2)
ef = eigenprojection_apply(fld2, pm, f, range(-30, 31))
c0 = max(np.max(np.abs(ef[x])) for x in range(-2, 3))
edge = max(np.max(np.abs(ef[30])), np.max(np.abs(ef[-30])))
P("eigfn center:", f"{c0:.2e}", " edge(30):", f"{edge:.2e}", " ratio:", f"{edge/c0:.2e}")
# pointwise eigen-equation residual
sol = {x: ef[x] for x in range(-30, 31)}
worst = 0.0
for x in range(-25, 26):
    lhs = walk_pointwise(fld2, sol, x)
    worst = max(worst, np.max(np.abs(lhs - pm.location*sol[x])))
P("eigen-equation residual:", f"{worst:.2e}")

# 12. spectrum support
P("support:", spectrum_support(meas2))
