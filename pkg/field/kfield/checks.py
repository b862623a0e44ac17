# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the bundled invariant checks run by `kfield check`

Each check samples random jet points from a seeded generator, evaluates one
invariant and returns (passed, detail). run_checks collects them in a fixed
order so a seed reproduces the whole report.
"""

import logging

import numpy as np

from kfield.core import ad
from kfield.core.fieldeq import adjoint_residual, doubled_residual, el_residual, forced_el_residual, jacobi_residual
from kfield.core.geometry import (KVectorAtJet, cosymplectic_axioms_check, geometric_el_residual, omega, theta,
                                  theta_coordinate)
from kfield.core.initial_data import make_initial_data
from kfield.core.integrator import GridSpec, VariationalSimulator, cosimulate_doubled, simulate
from kfield.core.jet import (JetPoint, ProlongedJetPoint, SecondJet, kappa, prolonged_second_jet,
                             second_jet_of_section)
from kfield.core.lagrangian import energy, force_prolong, make_model, prolong, prolonged_energy, regularity

logger = logging.getLogger(__name__)

SAMPLES = 100

# presets and the base dimension k they run on
MODELS = (('wave', 2), ('damped_wave', 2), ('sine_gordon', 2), ('harmonic', 1), ('cross', 2), ('degenerate', 2))

# |E(t) - E(0)| <= C dt^2 for the undamped standing mode on [0, 10]
ENERGY_DRIFT_C = 2.0


def _random_point(rng, n=1, k=2):
    return JetPoint(rng.uniform(-1.0, 1.0, k), rng.uniform(-1.0, 1.0, n), rng.uniform(-1.0, 1.0, (n, k)))


def _random_prolonged(rng, n=1, k=2):
    p = _random_point(rng, n, k)
    return ProlongedJetPoint(p.x, p.q, rng.uniform(-1.0, 1.0, n), p.qd, rng.uniform(-1.0, 1.0, (n, k)))


def _random_second(rng, n=1, k=2, prolonged=False):
    base = _random_prolonged(rng, n, k) if prolonged else _random_point(rng, n, k)
    qdd = [(lambda a: (a + a.T)/2)(rng.uniform(-1.0, 1.0, (k, k))) for _ in range(n)]
    vdd = [(lambda a: (a + a.T)/2)(rng.uniform(-1.0, 1.0, (k, k))) for _ in range(n)] if prolonged else None
    return SecondJet(base, qdd, vdd)


def _close(a, b, tol):
    err = float(np.max(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float))))
    return err <= tol, 'max deviation {:.3e}'.format(err)


def _relative(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)/(1.0 + np.abs(b))))


def _central(f, z, a, h):
    up, down = list(z), list(z)
    up[a] += h
    down[a] -= h
    return (f(up) - f(down))/(2.0*h)


def check_ad_product_rule(rng):
    worst = 0.0
    for _ in range(SAMPLES):
        u, v, du, dv = rng.uniform(-2.0, 2.0, 4)
        d = ad.derivative(lambda z: z[0]*ad.sin(z[1]), [u, v], [du, dv])
        worst = max(worst, abs(d - (du*np.sin(v) + u*np.cos(v)*dv)))
    return worst <= 1e-12, 'max deviation {:.3e}'.format(worst)


def check_ad_nested_symmetry(rng):
    worst = 0.0
    for name, k in MODELS:
        L = make_model(name)[0]
        for _ in range(SAMPLES):
            H = ad.hessian(L.flat, _random_point(rng, k=k).flat())
            worst = max(worst, float(np.max(np.abs(H - H.T)))/(1.0 + float(np.max(np.abs(H)))))
    return worst <= 1e-13, 'max relative asymmetry {:.3e}'.format(worst)


def check_ad_finite_differences(rng):
    worst = 0.0
    for name, k in MODELS:
        L = make_model(name)[0]
        grad = lambda z: ad.gradient(L.flat, z)
        for _ in range(SAMPLES):
            z = _random_point(rng, k=k).flat()
            g = grad(z)
            H = ad.hessian(L.flat, z)
            for a in range(len(z)):
                worst = max(worst, _relative(g[a], _central(L.flat, z, a, 1e-5)))
                worst = max(worst, _relative(H[a], _central(grad, z, a, 1e-4)))
    return worst <= 1e-5, 'max relative deviation {:.3e}'.format(worst)


def check_kappa_involution(rng):
    pp = _random_prolonged(rng, 2, 2)
    twice = kappa(kappa(pp))
    ok = all(np.array_equal(np.asarray(a), np.asarray(b)) for a, b in zip(twice, pp.blocks()))
    return ok, 'kappa o kappa is the identity' if ok else 'kappa o kappa changed the blocks'


def check_prolong_routes(rng):
    worst = 0.0
    for name, k in MODELS:
        L = make_model(name)[0]
        lift, local = prolong(L, 'lift'), prolong(L, 'local')
        for _ in range(SAMPLES):
            z = _random_prolonged(rng, k=k).flat()
            worst = max(worst, _relative(lift.flat(z), local.flat(z)))
    return worst <= 1e-12, 'max relative deviation {:.3e}'.format(worst)


def check_zero_force_prolong(rng):
    for name in ('wave', 'sine_gordon'):
        L = make_model(name)[0]
        for _ in range(SAMPLES):
            z = _random_prolonged(rng).flat()
            if force_prolong(L, None).flat(z) != prolong(L).flat(z):
                return False, 'zero force changed the prolonged {} Lagrangian'.format(name)
    return True, 'zero force adds exact zeros'


def check_energy_homogeneity(rng):
    L, _ = make_model('wave', c=1.5)
    worst = 0.0
    for _ in range(SAMPLES):
        p = _random_point(rng)
        worst = max(worst, _relative(energy(L, p), L(p)))
    return worst <= 1e-12, 'max relative deviation {:.3e}'.format(worst)


def check_prolonged_energy(rng):
    L, _ = make_model('sine_gordon')
    pairs = [prolonged_energy(L, _random_prolonged(rng)) for _ in range(SAMPLES)]
    return _close([a for a, _ in pairs], [b for _, b in pairs], 1e-12)


def check_regularity(rng):
    models = [make_model('wave', c=c)[0] for c in (0.5, 1.0, 2.0)] + [make_model('sine_gordon')[0]]
    worst = 0.0
    for L in models:
        for _ in range(50):
            pp = _random_prolonged(rng)
            report = regularity(L, JetPoint(pp.x, pp.q, pp.qd), pp.v, pp.vd)
            if not report['is_regular']:
                return False, '{} is singular at {}'.format(L.name, pp)
            expected = report['det']**2
            worst = max(worst, abs(abs(report['prolonged_det']) - expected)/expected)
    return worst <= 1e-8, 'max relative deviation of |det| from det(W)^2 {:.3e}'.format(worst)


def check_theta_routes(rng):
    L, _ = make_model('sine_gordon')
    worst = 0.0
    for _ in range(SAMPLES):
        p = _random_point(rng)
        for mu in range(2):
            worst = max(worst, _relative(theta(L, p, mu).flat(), theta_coordinate(L, p, mu).flat()))
    return worst <= 1e-12, 'max relative deviation {:.3e}'.format(worst)


def check_omega_antisymmetry(rng):
    L, _ = make_model('sine_gordon')
    p = _random_point(rng)
    A = omega(L, p, 0).A
    return _close(A, -A.T, 0.0)


def check_axioms(rng):
    failures = []
    for name, params in (('wave', {'c': 2.0}), ('sine_gordon', {}), ('cross', {})):
        L, _ = make_model(name, **params)
        if not cosymplectic_axioms_check(L, _random_point(rng))['passed']:
            failures.append(name)
    return not failures, 'failed for {}'.format(', '.join(failures)) if failures else 'wave, sine_gordon, cross'


def check_geometric_el(rng):
    L, _ = make_model('sine_gordon')
    worst = 0.0
    for _ in range(SAMPLES):
        j2 = _random_second(rng)
        p = j2.base
        f = [[[j2.qdd_entry(0, nu, mu) for nu in range(2)]] for mu in range(2)]
        res = geometric_el_residual(L, KVectorAtJet.sopde(p, f), p)
        worst = max(worst, abs(res.dq[0] + el_residual(L, j2)[0]), float(np.max(np.abs(res.dqd))))
    return worst <= 1e-10, 'max deviation {:.3e}'.format(worst)


def check_jacobi_routes(rng):
    worst = 0.0
    for name, k in MODELS:
        L = make_model(name)[0]
        for _ in range(SAMPLES):
            j2 = _random_second(rng, k=k, prolonged=True)
            worst = max(worst, _relative(jacobi_residual(L, j2, 'via_lift'), jacobi_residual(L, j2, 'direct')))
    return worst <= 1e-10, 'max relative deviation {:.3e}'.format(worst)


def check_v_slot(rng):
    worst = 0.0
    for name, k in (('wave', 2), ('sine_gordon', 2), ('harmonic', 1)):
        L = make_model(name)[0]
        Lt = prolong(L)
        for _ in range(SAMPLES):
            j2 = _random_second(rng, k=k, prolonged=True)
            worst = max(worst, _relative(doubled_residual(Lt, j2)[1], el_residual(L, j2.background())))
    return worst <= 1e-12, 'max relative deviation {:.3e}'.format(worst)


def check_doubled_slots(rng):
    L, F = make_model('damped_wave', c=1.0, tau=1.0)
    worst = 0.0
    for _ in range(SAMPLES):
        j2 = _random_second(rng, prolonged=True)
        q_slot, v_slot = doubled_residual(force_prolong(L, F), j2)
        forced = forced_el_residual(L, F, j2.background())
        worst = max(worst, abs(v_slot[0] - forced[0]), abs(q_slot[0] - adjoint_residual(L, F, j2)[0]))
    return worst <= 1e-12, 'max deviation {:.3e}'.format(worst)


def check_oracles(rng):
    worst = 0.0
    for name, params in (('wave', {'c': 1.5}), ('damped_wave', {'c': 1.0, 'tau': 2.0})):
        L, F = make_model(name, **params)
        for preset, adjoint in (('standing_mode', False), ('standing_mode', True), ('traveling_wave', False)):
            if F is None and adjoint:
                continue
            if F is not None and preset == 'traveling_wave':
                continue
            data = make_initial_data(L, F, preset, adjoint=adjoint)
            if adjoint:
                background = make_initial_data(L, F, 'standing_mode')
                j2 = prolonged_second_jet(background.section, data.section, list(rng.uniform(0.0, 3.0, 2)))
                worst = max(worst, abs(adjoint_residual(L, F, j2)[0]))
            else:
                j2 = second_jet_of_section(data.section, list(rng.uniform(0.0, 3.0, 2)))
                worst = max(worst, abs(forced_el_residual(L, F, j2)[0]))
    return worst <= 1e-10, 'max residual {:.3e}'.format(worst)


def check_cosim_matches_simulate(rng):
    L, F = make_model('damped_wave', c=1.0, tau=1.0)
    grid = GridSpec(41, 21, 2.0)
    data_q = make_initial_data(L, F, 'standing_mode')
    data_v = make_initial_data(L, F, 'standing_mode', adjoint=True)
    state, _ = simulate(L, F, data_q, grid)
    doubled, _ = cosimulate_doubled(L, F, data_q, data_v, grid)
    ok = np.array_equal(state.Q, doubled.Q)
    return ok, 'q trajectories identical' if ok else 'q trajectories differ'


def _drifts(run, levels):
    out = []
    for nt, nx in levels:
        series = np.asarray(run(nt, nx)['energy_series'])
        out.append(float(np.max(np.abs(series - series[0]))))
    return out


def check_discrete_energy(rng):
    L, _ = make_model('wave', c=1.0)
    data = make_initial_data(L, None, 'standing_mode')
    levels = ((101, 51), (201, 101))
    drifts = _drifts(lambda nt, nx: simulate(L, None, data, GridSpec(nt, nx, 10.0))[1], levels)
    dt = GridSpec(levels[-1][0], levels[-1][1], 10.0).dt
    ratio = drifts[0]/drifts[1]
    ok = drifts[1] <= ENERGY_DRIFT_C*dt*dt and 3.5 <= ratio <= 4.5
    return ok, 'drift {:.3e} at dt {:.3g}, refinement ratio {:.3f}'.format(drifts[1], dt, ratio)


def check_cross_energy(rng):
    L, F = make_model('damped_wave', c=1.0, tau=1.0)
    data_q = make_initial_data(L, F, 'standing_mode')
    data_v = make_initial_data(L, F, 'standing_mode', adjoint=True)
    drifts = _drifts(lambda nt, nx: cosimulate_doubled(L, F, data_q, data_v, GridSpec(nt, nx, 2.0))[1],
                     ((101, 51), (201, 101)))
    ratio = drifts[0]/drifts[1]
    return 3.0 <= ratio <= 5.0, 'drifts {:.3e}, {:.3e}, refinement ratio {:.3f}'.format(drifts[0], drifts[1], ratio)


def check_linearization(rng):
    L, _ = make_model('sine_gordon')
    grid = GridSpec(200, 100, 2.0)
    data_q = make_initial_data(L, None, 'gaussian', amplitude=0.5)
    data_v = make_initial_data(L, None, 'gaussian', amplitude=1.0)
    base, _ = simulate(L, None, data_q, grid)
    doubled, _ = cosimulate_doubled(L, None, data_q, data_v, grid)
    errors = []
    for eps in (1e-2, 1e-3):
        moved, _ = simulate(L, None, make_initial_data(L, None, 'gaussian', amplitude=0.5 + eps), grid)
        errors.append(float(np.max(np.abs((moved.Q - base.Q)/eps - doubled.V))))
    ratio = errors[0]/errors[1]
    return 7.0 <= ratio <= 13.0, 'errors {:.3e}, {:.3e}, ratio {:.2f}'.format(errors[0], errors[1], ratio)


def check_del_residual(rng):
    L, _ = make_model('wave', c=1.0)
    data = make_initial_data(L, None, 'traveling_wave')
    grid = GridSpec(41, 41, 2.0)
    sim = VariationalSimulator(L, None, grid)
    state = sim.reset(data)
    for a in range(grid.nt):
        state.Q[a] = data.values(grid.t[a], state.x)
    r = sim.del_residual(state, grid.nt//2)/(grid.dt*grid.dx)
    worst = float(np.max(np.abs(r)))
    return worst <= 1e-2, 'max normalized residual {:.3e}'.format(worst)


CHECKS = [
    ('ad.product_rule', check_ad_product_rule),
    ('ad.nested_symmetry', check_ad_nested_symmetry),
    ('ad.finite_differences', check_ad_finite_differences),
    ('jet.kappa_involution', check_kappa_involution),
    ('lagrangian.prolong_routes', check_prolong_routes),
    ('lagrangian.zero_force_prolong', check_zero_force_prolong),
    ('lagrangian.energy_homogeneity', check_energy_homogeneity),
    ('lagrangian.prolonged_energy', check_prolonged_energy),
    ('lagrangian.regularity', check_regularity),
    ('geometry.theta_routes', check_theta_routes),
    ('geometry.omega_antisymmetry', check_omega_antisymmetry),
    ('geometry.axioms', check_axioms),
    ('geometry.el_agreement', check_geometric_el),
    ('fieldeq.jacobi_routes', check_jacobi_routes),
    ('fieldeq.v_slot', check_v_slot),
    ('fieldeq.doubled_slots', check_doubled_slots),
    ('initial_data.oracles', check_oracles),
    ('integrator.del_consistency', check_del_residual),
    ('integrator.discrete_energy', check_discrete_energy),
    ('integrator.cross_energy', check_cross_energy),
    ('integrator.cosim_matches_simulate', check_cosim_matches_simulate),
    ('integrator.linearization', check_linearization),
]


def run_checks(seed=0, names=None):
    """
    Runs the invariant checks

        Args:
            seed (int, default=0): generator seed
            names (list(str) or None): subset of CHECKS to run

        Returns:
            results (list(tuple)): (name, passed, detail) in CHECKS order
    """
    rng = np.random.default_rng(seed)
    results = []
    for name, fn in CHECKS:
        if names is not None and name not in names:
            continue
        try:
            passed, detail = fn(rng)
        except Exception as err:
            passed, detail = False, '{}: {}'.format(type(err).__name__, err)
        logger.info('%s %s (%s)', 'pass' if passed else 'FAIL', name, detail)
        results.append((name, bool(passed), detail))
    return results
