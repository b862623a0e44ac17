# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of Lagrangian and force definitions, the preset catalog, and the
derived pointwise quantities (momenta, energy, regularity)

Also builds the prolonged Lagrangian L~ = L^C o (id x kappa) on the doubled
fields (q, v) and its forced version L~_F. Both are evaluated by
differentiating the user's L with the ad module at every call, so any
LagrangianDef gets them.
"""

import inspect
import math

import numpy as np
import scipy.linalg

from kfield.core import ad
from kfield.core.jet import JetPoint, ProlongedJetPoint, jet_dim, kappa, qd_index

# relative determinant threshold of the regularity test
REGULARITY_TOL = 1e-10


class LagrangianDef(object):
    """
    First order field Lagrangian L(x^mu, q^i, q^i_mu)

    Data Members:
        n (int): number of fields
        k (int): number of independent variables
        fn (callable): fn(x, q, qd) over lists of scalars, qd[i][mu]
        explicit_x (bool): L depends on x explicitly
        name (str): preset name or 'custom'
        description (str): reference formula
        params (dict): preset parameters
        quadratic (bool): L is a quadratic polynomial in (q, qd), field equations are linear
        wave_speed (float or None): characteristic speed for the CFL guard
    """

    def __init__(self, n, k, fn, explicit_x=False, name='custom', description='', params=None,
                 quadratic=False, wave_speed=None):
        if n < 1 or k < 1:
            raise ValueError('a Lagrangian needs n >= 1 and k >= 1, got n={}, k={}'.format(n, k))
        self.n = n
        self.k = k
        self.fn = fn
        self.explicit_x = explicit_x
        self.name = name
        self.description = description
        self.params = dict(params or {})
        self.quadratic = quadratic
        self.wave_speed = wave_speed

    @property
    def dim(self):
        return jet_dim(self.n, self.k)

    def __call__(self, p):
        return self.fn(p.x, p.q, p.qd)

    def flat(self, z):
        """Evaluates L on a flat coordinate list."""
        p = JetPoint.from_flat(z, self.n, self.k)
        return self.fn(p.x, p.q, p.qd)

    def __repr__(self):
        return 'LagrangianDef({}, n={}, k={})'.format(self.name, self.n, self.k)


class ForceDef(object):
    """
    Force F = F_i dq^i + F^mu_i dq^i_mu with coefficients depending on (x, q, qd) only

    Data Members:
        n (int): number of fields
        k (int): number of independent variables
        fn_F (callable): fn_F(x, q, qd) -> n components F_i
        fn_Fmu (callable or None): fn_Fmu(x, q, qd) -> n x k components F^mu_i, zero when None
        linear (bool): F is linear in (q, qd)
    """

    def __init__(self, n, k, fn_F, fn_Fmu=None, linear=False):
        for fn in (fn_F, fn_Fmu):
            if fn is not None:
                _check_force_signature(fn)
        self.n = n
        self.k = k
        self.fn_F = fn_F
        self.fn_Fmu = fn_Fmu
        self.linear = linear

    @classmethod
    def zero(cls, n, k):
        return cls(n, k, lambda x, q, qd: [0.0]*n, None, linear=True)

    def F(self, p):
        out = list(self.fn_F(p.x, p.q, p.qd))
        if len(out) != self.n:
            raise ValueError('force returned {} components, expected {}'.format(len(out), self.n))
        return out

    def Fmu(self, p):
        if self.fn_Fmu is None:
            return [[0.0]*self.k for _ in range(self.n)]
        out = [list(row) for row in self.fn_Fmu(p.x, p.q, p.qd)]
        if len(out) != self.n or any(len(row) != self.k for row in out):
            raise ValueError('force F^mu must have shape ({}, {})'.format(self.n, self.k))
        return out

    def flat_F(self, z):
        return self.F(JetPoint.from_flat(z, self.n, self.k))

    def flat_Fmu(self, z):
        return self.Fmu(JetPoint.from_flat(z, self.n, self.k))


def _check_force_signature(fn):
    try:
        params = inspect.signature(fn).parameters
    except (TypeError, ValueError):
        return
    names = [name for name, par in params.items()
             if par.kind in (par.POSITIONAL_ONLY, par.POSITIONAL_OR_KEYWORD) and par.default is par.empty]
    if len(names) != 3 or any(name in ('v', 'vd') for name in params):
        raise ValueError('force callables take exactly (x, q, qd); variations are not admissible arguments, '
                         'got ({})'.format(', '.join(params)))


# preset catalog

def wave(c=1.0):
    """Linear wave L = 1/2 (q_t^2 - c^2 q_x^2), n=1, k=2."""
    def fn(x, q, qd):
        return 0.5*(qd[0][0]*qd[0][0] - c*c*qd[0][1]*qd[0][1])
    return LagrangianDef(1, 2, fn, name='wave', description='L = 1/2 (q_t^2 - c^2 q_x^2)',
                         params={'c': c}, quadratic=True, wave_speed=c)


def damped_wave(c=1.0, tau=1.0):
    """Wave Lagrangian with the Maxwell interpolation force F_1 = -q_t/tau."""
    L = wave(c)
    L.name = 'damped_wave'
    L.description = 'L = 1/2 (q_t^2 - c^2 q_x^2), F = -(1/tau) q_t dq'
    L.params = {'c': c, 'tau': tau}
    F = ForceDef(1, 2, lambda x, q, qd: [-qd[0][0]/tau], None, linear=True)
    return L, F


def sine_gordon():
    """L = 1/2 (q_t^2 - q_x^2) - (1 - cos q), n=1, k=2."""
    def fn(x, q, qd):
        return 0.5*(qd[0][0]*qd[0][0] - qd[0][1]*qd[0][1]) - (1.0 - ad.cos(q[0]))
    return LagrangianDef(1, 2, fn, name='sine_gordon', description='L = 1/2 (q_t^2 - q_x^2) - (1 - cos q)',
                         wave_speed=1.0)


def harmonic(omega=1.0):
    """Oscillator L = 1/2 (qdot^2 - omega^2 q^2), n=1, k=1."""
    def fn(x, q, qd):
        return 0.5*(qd[0][0]*qd[0][0] - omega*omega*q[0]*q[0])
    return LagrangianDef(1, 1, fn, name='harmonic', description='L = 1/2 (qdot^2 - omega^2 q^2)',
                         params={'omega': omega}, quadratic=True)


def cross():
    """L = q_t q_x, regular with an indefinite velocity Hessian."""
    return LagrangianDef(1, 2, lambda x, q, qd: qd[0][0]*qd[0][1], name='cross',
                         description='L = q_t q_x', quadratic=True)


def degenerate():
    """L = q_t, linear in the velocities and therefore singular."""
    return LagrangianDef(1, 2, lambda x, q, qd: qd[0][0], name='degenerate',
                         description='L = q_t', quadratic=True)


# name -> (constructor, {parameter: default}, returns a force)
PRESETS = {
    'wave': (wave, {'c': 1.0}, False),
    'damped_wave': (damped_wave, {'c': 1.0, 'tau': 1.0}, True),
    'sine_gordon': (sine_gordon, {}, False),
    'harmonic': (harmonic, {'omega': 1.0}, False),
    'cross': (cross, {}, False),
    'degenerate': (degenerate, {}, False),
}


def make_model(name, **params):
    """
    Builds a preset by name

        Args:
            name (str): key of PRESETS
            **params: preset parameters, all finite and positive

        Returns:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force of the preset, None for conservative presets
    """
    if name not in PRESETS:
        raise ValueError('unknown preset {!r}, expected one of {}'.format(name, ', '.join(sorted(PRESETS))))
    constructor, defaults, forced = PRESETS[name]
    unknown = sorted(set(params) - set(defaults))
    if unknown:
        raise ValueError('preset {} has no parameter(s) {}, expected {}'.format(
            name, ', '.join(unknown), ', '.join(sorted(defaults)) or 'none'))
    values = dict(defaults)
    for key, value in params.items():
        value = float(value)
        if not math.isfinite(value) or value <= 0.0:
            raise ValueError('parameter {}.{} must be finite and positive, got {}'.format(name, key, value))
        values[key] = value
    out = constructor(**values)
    if forced:
        return out
    return out, None


# derived pointwise quantities

def _velocity_indices(n, k):
    return [qd_index(n, k, i, mu) for i in range(n) for mu in range(k)]


def _basis(m, a):
    e = [0.0]*m
    e[a] = 1.0
    return e


def momenta(L, p):
    """
    Multimomenta p^mu_i = dL/dq^i_mu

        Args:
            L (LagrangianDef): Lagrangian
            p (JetPoint): evaluation point

        Returns:
            momenta (np.ndarray (n, k)): field index first
    """
    z = p.flat()
    m = L.dim
    out = [[ad.derivative(L.flat, z, _basis(m, qd_index(L.n, L.k, i, mu))) for mu in range(L.k)]
           for i in range(L.n)]
    return ad.pack(out)


def liouville_direction(n, k, z, mu=None):
    """Flat components of the Liouville field (sum over mu, or the mu-th one) at z."""
    d = [0.0]*jet_dim(n, k)
    for i in range(n):
        for nu in range(k):
            if mu is None or nu == mu:
                a = qd_index(n, k, i, nu)
                d[a] = z[a]
    return d


def energy_flat(L):
    """E_L as a function of the flat coordinates, differentiable by ad."""
    def fn(z):
        z = list(z)
        return ad.derivative(L.flat, z, liouville_direction(L.n, L.k, z)) - L.flat(z)
    return fn


def energy(L, p):
    """
    Energy E_L = q^i_mu dL/dq^i_mu - L, one directional pass along the Liouville field

        Args:
            L (LagrangianDef): Lagrangian
            p (JetPoint): evaluation point

        Returns:
            E (float): energy
    """
    return energy_flat(L)(p.flat())


def _split_doubled(n, q, qd):
    return q[:n], q[n:], qd[:n], qd[n:]


def prolong(L, route='lift'):
    """
    Prolonged Lagrangian over the doubled fields (q^1..q^n, v^1..v^n)

    route='lift' evaluates L^C o (id x kappa): the kappa reordered tuple is read
    as a base jet (q, qd) plus a tangent (v, vd) and L^C is one directional
    derivative. route='local' sums dL/dq^i v^i + dL/dq^i_mu v^i_mu from the
    gradient. Both are linear in (v, vd).

        Args:
            L (LagrangianDef): Lagrangian
            route (str, default='lift'): 'lift' or 'local'

        Returns:
            Lt (LagrangianDef): n'=2n fields
    """
    n, k = L.n, L.k
    if route not in ('lift', 'local'):
        raise ValueError('unknown prolongation route {!r}'.format(route))

    def fn(x, qv, qdvd):
        q, v, qd, vd = _split_doubled(n, list(qv), list(qdvd))
        if route == 'lift':
            # kappa: (q, v; qd, vd) -> (q, qd; v, vd), a base jet and its tangent
            base_q, base_qd, tan_q, tan_qd = kappa((q, v, qd, vd))
            z = JetPoint(x, base_q, base_qd).flat()
            tangent = [0.0]*k + list(tan_q) + [entry for row in tan_qd for entry in row]
            return ad.derivative(L.flat, z, tangent)
        z = JetPoint(x, q, qd).flat()
        tangent = [0.0]*k + list(v) + [entry for row in vd for entry in row]
        total = 0.0
        for a in range(k, len(z)):
            if not ad.is_zero(tangent[a]):
                total = total + ad.derivative(L.flat, z, _basis(len(z), a))*tangent[a]
        return total

    return LagrangianDef(2*n, k, fn, explicit_x=L.explicit_x, name=L.name + '~',
                         description='prolongation of ' + (L.description or L.name),
                         params=L.params, quadratic=L.quadratic, wave_speed=L.wave_speed)


def force_prolong(L, F, route='lift'):
    """
    Forced prolonged Lagrangian L~_F = L~ + F_j v^j - F^g_j v^j_g

    The pairing sign makes the v-slot field equation of L~_F the forced
    equation sum_mu D_mu(dL/dq^i_mu - F^mu_i) - dL/dq^i = F_i.

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force, evaluated on (x, q, qd) only
            route (str, default='lift'): prolongation route

        Returns:
            LtF (LagrangianDef): n'=2n fields
    """
    if F is None:
        F = ForceDef.zero(L.n, L.k)
    if F.n != L.n or F.k != L.k:
        raise ValueError('force shape ({}, {}) does not match Lagrangian ({}, {})'.format(F.n, F.k, L.n, L.k))
    n, k = L.n, L.k
    Lt = prolong(L, route)

    def fn(x, qv, qdvd):
        q, v, qd, vd = _split_doubled(n, list(qv), list(qdvd))
        point = JetPoint(x, q, qd)
        Fi = F.F(point)
        Fmu = F.Fmu(point)
        total = Lt.fn(x, qv, qdvd)
        for j in range(n):
            total = total + Fi[j]*v[j]
            for g in range(k):
                total = total - Fmu[j][g]*vd[j][g]
        return total

    return LagrangianDef(2*n, k, fn, explicit_x=L.explicit_x, name=L.name + '~F',
                         description='forced prolongation of ' + (L.description or L.name),
                         params=L.params, quadratic=L.quadratic and F.linear, wave_speed=L.wave_speed)


def prolonged_energy(L, pp):
    """
    Energy of the prolonged Lagrangian at a ProlongedJetPoint, generic route

    Returns the pair (generic, local) where local is
    d2L/dq^i_mu dq^j v^j q^i_mu + d2L/dq^i_mu dq^j_g v^j_g q^i_mu - dL/dq^i v^i.
    """
    generic = energy(prolong(L), pp.doubled())
    base = pp.base()
    z = base.flat()
    m = L.dim
    n, k = L.n, L.k
    w = [0.0]*k + list(pp.v) + [entry for row in pp.vd for entry in row]
    local = 0.0
    for i in range(n):
        for mu in range(k):
            a = qd_index(n, k, i, mu)
            local = local + ad.derivative(L.flat, z, _basis(m, a), w)*base.qd[i][mu]
    for i in range(n):
        local = local - ad.derivative(L.flat, z, _basis(m, k + i))*pp.v[i]
    return generic, local


def velocity_hessian(L, p):
    """Velocity Hessian W[(i,mu),(j,nu)] = d2L/dq^i_mu dq^j_nu, rows ordered field first."""
    z = p.flat()
    idx = _velocity_indices(L.n, L.k)
    m = L.dim
    W = np.array([[ad.derivative(L.flat, z, _basis(m, a), _basis(m, b)) for b in idx] for a in idx],
                 dtype=float)
    return W


def is_regular_matrix(W, tol=REGULARITY_TOL):
    """Scale aware nonsingularity test |det W| > tol * max(1, |W|_max^size)."""
    det = scipy.linalg.det(W) if W.size else 1.0
    scale = max(1.0, float(np.max(np.abs(W)))**W.shape[0]) if W.size else 1.0
    return abs(det) > tol*scale, det


def regularity(L, p, v=None, vd=None):
    """
    Regularity report at a point

        Args:
            L (LagrangianDef): Lagrangian
            p (JetPoint): evaluation point
            v (list, default zeros): variation used for the prolonged block
            vd (list(list), default zeros): variation derivatives

        Returns:
            report (dict): W, det, prolonged_det, is_regular
    """
    W = velocity_hessian(L, p)
    regular, det = is_regular_matrix(W)
    n, k = L.n, L.k
    v = [0.0]*n if v is None else list(v)
    vd = [[0.0]*k for _ in range(n)] if vd is None else vd
    pp = ProlongedJetPoint(p.x, p.q, v, p.qd, vd)
    B = velocity_hessian(prolong(L), pp.doubled())
    return {
        'W': W,
        'det': float(det),
        'prolonged_det': float(scipy.linalg.det(B)),
        'is_regular': bool(regular),
    }
