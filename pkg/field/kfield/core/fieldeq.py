# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the continuous field equation residuals along sections

Total derivatives are expanded by the chain rule against the supplied second
jet: D_mu g = dg/dz . zdot_mu with
zdot_mu = (e_mu, q^i_mu, q^i_{nu mu}), so every residual is a handful of
nested ad passes. In the doubled ordering (q, v) the first n components of a
residual are the q-slot (paired with dq, the Jacobi or adjoint equation) and
the last n the v-slot (the original field equations).
"""

import numpy as np

from kfield.core import ad
from kfield.core.jet import jet_dim, q_index, qd_index
from kfield.core.lagrangian import force_prolong, prolong


def _basis(m, a):
    e = [0.0]*m
    e[a] = 1.0
    return e


def total_direction(j2, mu):
    """Flat components of the total derivative direction zdot_mu of a second jet."""
    p = j2.first_jet() if j2.prolonged else j2.base
    n, k = p.n, p.k
    d = [0.0]*k
    d[mu] = 1.0
    d += [p.qd[i][mu] for i in range(n)]
    d += [j2.qdd_entry(i, nu, mu) for i in range(n) for nu in range(k)]
    return d


def _variation_directions(j2, mu):
    # w = (0, v, vd) and its total derivative (0, vd_mu, vdd_.mu)
    base = j2.base
    n, k = base.n, base.k
    w = [0.0]*k + list(base.v) + [base.vd[i][nu] for i in range(n) for nu in range(k)]
    wdot = [0.0]*k + [base.vd[i][mu] for i in range(n)]
    wdot += [j2.vdd_entry(i, nu, mu) for i in range(n) for nu in range(k)]
    return w, wdot


def _check(L, p):
    if p.n != L.n or p.k != L.k:
        raise ValueError('jet of shape (n={}, k={}) does not match {} (n={}, k={})'.format(
            p.n, p.k, L.name, L.n, L.k))


def el_residual(L, j2):
    """
    Euler-Lagrange residual sum_mu D_mu(dL/dq^i_mu) - dL/dq^i

        Args:
            L (LagrangianDef): Lagrangian
            j2 (SecondJet): second jet over a JetPoint with L's shape

        Returns:
            r (list): n residual components, arrays for batched jets
    """
    if j2.prolonged:
        raise ValueError('el_residual expects a second jet of the fields of L, double it first')
    p = j2.base
    _check(L, p)
    n, k = L.n, L.k
    m = jet_dim(n, k)
    z = p.flat()
    r = []
    for i in range(n):
        value = -ad.derivative(L.flat, z, _basis(m, q_index(n, k, i)))
        for mu in range(k):
            value = value + ad.derivative(L.flat, z, _basis(m, qd_index(n, k, i, mu)), total_direction(j2, mu))
        r.append(value)
    return r


def forced_el_residual(L, F, j2):
    """
    Forced residual sum_mu D_mu(dL/dq^i_mu - F^mu_i) - dL/dq^i - F_i

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force on (x, q, qd)
            j2 (SecondJet): second jet

        Returns:
            r (list): n residual components
    """
    r = el_residual(L, j2)
    if F is None:
        return r
    p = j2.base
    n, k = L.n, L.k
    Fi = F.F(p)
    out = [r[i] - Fi[i] for i in range(n)]
    if F.fn_Fmu is not None:
        z = p.flat()
        for mu in range(k):
            dF = ad.derivative(F.flat_Fmu, z, total_direction(j2, mu))
            for i in range(n):
                out[i] = out[i] - dF[i][mu]
    return out


def jacobi_residual(L, j2, mode='via_lift'):
    """
    Jacobi residual of the variation carried by a prolonged second jet

    via_lift takes the q-slot of el_residual(prolong(L)) on the doubled jet;
    direct evaluates
    D_mu[d2L/dq^j dq^i_mu v^j + d2L/dq^j_g dq^i_mu v^j_g] - d2L/dq^i dq^j v^j - d2L/dq^i dq^j_g v^j_g
    from the Hessian and its derivative along the section.

        Args:
            L (LagrangianDef): Lagrangian of the background fields
            j2 (SecondJet): second jet over a ProlongedJetPoint
            mode (str, default='via_lift'): 'via_lift' or 'direct'

        Returns:
            r (list): n residual components
    """
    if not j2.prolonged:
        raise ValueError('jacobi_residual needs a second jet over a ProlongedJetPoint')
    _check(L, j2.base)
    n, k = L.n, L.k
    if mode == 'via_lift':
        return el_residual(prolong(L), j2.doubled())[:n]
    if mode != 'direct':
        raise ValueError('unknown Jacobi mode {!r}'.format(mode))
    z = j2.first_jet().flat()
    m = len(z)
    H = ad.hessian(L.flat, z)
    r = []
    for i in range(n):
        row = q_index(n, k, i)
        value = 0.0
        w, _ = _variation_directions(j2, 0)
        for b in range(m):
            value = value - H[row][b]*w[b]
        r.append(value)
    for mu in range(k):
        T = ad.directional_derivative_of_hessian(L.flat, z, total_direction(j2, mu))
        w, wdot = _variation_directions(j2, mu)
        for i in range(n):
            row = qd_index(n, k, i, mu)
            for b in range(m):
                r[i] = r[i] + T[row][b]*w[b] + H[row][b]*wdot[b]
    return r


def adjoint_residual(L, F, j2):
    """
    q-slot residual of the forced prolonged Lagrangian, the equation of the absorbing field v

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force
            j2 (SecondJet): second jet over a ProlongedJetPoint

        Returns:
            r (list): n residual components
    """
    if not j2.prolonged:
        raise ValueError('adjoint_residual needs a second jet over a ProlongedJetPoint')
    _check(L, j2.base)
    return el_residual(force_prolong(L, F), j2.doubled())[:L.n]


def doubled_residual(Lt, j2):
    """Both slots of el_residual for a doubled Lagrangian, returned as (q_slot, v_slot)."""
    r = el_residual(Lt, j2.doubled())
    n = Lt.n//2
    return r[:n], r[n:]


RESIDUAL_KINDS = ('el', 'forced', 'jacobi', 'adjoint')


def residual(kind, L, F, j2):
    """Dispatches one of RESIDUAL_KINDS, stacked into an array (n, ...)."""
    if kind == 'el':
        r = el_residual(L, j2.background())
    elif kind == 'forced':
        r = forced_el_residual(L, F, j2.background())
    elif kind == 'jacobi':
        r = jacobi_residual(L, j2)
    elif kind == 'adjoint':
        r = adjoint_residual(L, F, j2)
    else:
        raise ValueError('unknown residual kind {!r}, expected one of {}'.format(kind, ', '.join(RESIDUAL_KINDS)))
    return np.array(np.broadcast_arrays(*[np.asarray(ri, dtype=float) for ri in r]))
