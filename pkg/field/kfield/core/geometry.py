# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the canonical and Lagrangian k-cosymplectic structures at a jet point

Tensors live on the tangent space of R^k x T1kQ at one point and are stored in
the flat coordinate basis (dx^mu, dq^i, dq^i_mu) of kfield.core.jet. Two-forms
are coefficient matrices A with w(u, v) = u^T A v; a wedge da^db maps to
e_a e_b^T - e_b e_a^T. All residual signs below follow from that one
convention.
"""

import warnings

import numpy as np
import scipy.linalg

from kfield.core import ad
from kfield.core.jet import coordinate_names, jet_dim, q_index, qd_index, x_index
from kfield.core.lagrangian import energy_flat, regularity

# relative singular value cutoff of the rank computations
RANK_TOL = 1e-10


def _split(v, n, k):
    v = np.asarray(v, dtype=float)
    return v[:k].copy(), v[k:k + n].copy(), v[k + n:].reshape(n, k).copy()


class TangentAtJet(object):
    """
    Tangent vector a^mu d/dx^mu + b^i d/dq^i + c^i_mu d/dq^i_mu

    Data Members:
        a (np.ndarray (k, )): base components
        b (np.ndarray (n, )): field components
        c (np.ndarray (n, k)): velocity components
    """

    def __init__(self, a, b, c):
        self.a = np.asarray(a, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.c = np.asarray(c, dtype=float).reshape(len(self.b), len(self.a))

    @property
    def n(self):
        return len(self.b)

    @property
    def k(self):
        return len(self.a)

    def flat(self):
        return np.concatenate([self.a, self.b, self.c.ravel()])

    @classmethod
    def from_flat(cls, v, n, k):
        return cls(*_split(v, n, k))

    @classmethod
    def basis(cls, n, k, index):
        e = np.zeros(jet_dim(n, k))
        e[index] = 1.0
        return cls.from_flat(e, n, k)

    def __repr__(self):
        return 'TangentAtJet(a={}, b={}, c={})'.format(self.a.tolist(), self.b.tolist(), self.c.tolist())


class CovectorAtJet(object):
    """
    Covector over (dx^mu, dq^i, dq^i_mu)

    Data Members:
        dx (np.ndarray (k, )): dx^mu components
        dq (np.ndarray (n, )): dq^i components
        dqd (np.ndarray (n, k)): dq^i_mu components
    """

    def __init__(self, dx, dq, dqd):
        self.dx = np.asarray(dx, dtype=float)
        self.dq = np.asarray(dq, dtype=float)
        self.dqd = np.asarray(dqd, dtype=float).reshape(len(self.dq), len(self.dx))

    def flat(self):
        return np.concatenate([self.dx, self.dq, self.dqd.ravel()])

    @classmethod
    def from_flat(cls, v, n, k):
        return cls(*_split(v, n, k))

    def __call__(self, t):
        return float(np.dot(self.flat(), t.flat()))

    def to_dict(self):
        n, k = len(self.dq), len(self.dx)
        return dict(zip(coordinate_names(n, k), self.flat().tolist()))

    def __repr__(self):
        return 'CovectorAtJet(dx={}, dq={}, dqd={})'.format(self.dx.tolist(), self.dq.tolist(), self.dqd.tolist())


class TwoFormAtJet(object):
    """
    Two-form w(u, v) = u^T A v, antisymmetric by construction

    Data Members:
        A (np.ndarray (m, m)): coefficient matrix, A = M - M^T
        n (int): field count
        k (int): base dimension
    """

    def __init__(self, M, n, k):
        M = np.asarray(M, dtype=float)
        self.A = M - M.T
        self.n = n
        self.k = k

    @classmethod
    def from_wedges(cls, n, k, terms):
        """Sum of coef * dz_a ^ dz_b over terms (coef, a, b)."""
        m = jet_dim(n, k)
        M = np.zeros((m, m))
        for coef, a, b in terms:
            M[a, b] += coef
        return cls(M, n, k)

    def __call__(self, u, w):
        return float(u.flat() @ self.A @ w.flat())

    def interior(self, t):
        """i_t w, the covector w(t, .)."""
        return CovectorAtJet.from_flat(t.flat() @ self.A, self.n, self.k)

    def nonzero(self, tol=0.0):
        """Upper triangle entries (name_a, name_b, coefficient) above tol."""
        names = coordinate_names(self.n, self.k)
        out = []
        m = self.A.shape[0]
        for a in range(m):
            for b in range(a + 1, m):
                if abs(self.A[a, b]) > tol:
                    out.append((names[a], names[b], float(self.A[a, b])))
        return out


class KVectorAtJet(object):
    """
    k-vector field (X_1, ..., X_k) at one point

    Data Members:
        fields (list(TangentAtJet)): the k tangent vectors
    """

    def __init__(self, fields):
        self.fields = list(fields)

    @property
    def k(self):
        return len(self.fields)

    def __getitem__(self, mu):
        return self.fields[mu]

    @classmethod
    def sopde(cls, p, f):
        """
        Local SOPDE form X_mu = d/dx^mu + q^i_mu d/dq^i + (f_mu)^i_nu d/dq^i_nu

            Args:
                p (JetPoint): base point
                f (array-like (k, n, k)): f[mu][i][nu] = (f_mu)^i_nu

            Returns:
                X (KVectorAtJet)
        """
        n, k = p.n, p.k
        f = np.asarray(f, dtype=float).reshape(k, n, k)
        qd = np.asarray(p.qd, dtype=float)
        return cls([TangentAtJet(np.eye(k)[mu], qd[:, mu], f[mu]) for mu in range(k)])


def _check_mu(mu, k):
    if not 0 <= mu < k:
        raise IndexError('base index {} out of range for k={}'.format(mu, k))


def sbar_apply(mu, t):
    """
    Canonical tensor S^mu = d/dq^i_mu (x) dq^i applied to t

        Args:
            mu (int): base index, 0 based
            t (TangentAtJet): vector

        Returns:
            s (TangentAtJet): a=0, b=0, c[i][nu] = delta_{nu mu} b[i]
    """
    _check_mu(mu, t.k)
    c = np.zeros((t.n, t.k))
    c[:, mu] = t.b
    return TangentAtJet(np.zeros(t.k), np.zeros(t.n), c)


def liouville(p, mu=None):
    """Liouville field, the mu-th one when mu is given, their sum otherwise."""
    n, k = p.n, p.k
    qd = np.asarray(p.qd, dtype=float)
    c = np.zeros((n, k))
    if mu is None:
        c[:] = qd
    else:
        _check_mu(mu, k)
        c[:, mu] = qd[:, mu]
    return TangentAtJet(np.zeros(k), np.zeros(n), c)


def differential(fn, p):
    """dfn at p as a covector, fn a function of the flat coordinates."""
    return CovectorAtJet.from_flat(ad.gradient(fn, p.flat()), p.n, p.k)


def theta(L, p, mu):
    """
    Theta^mu_L = dL o S^mu, paired basis vector by basis vector

        Args:
            L (LagrangianDef): Lagrangian
            p (JetPoint): point
            mu (int): base index

        Returns:
            theta (CovectorAtJet)
    """
    _check_mu(mu, L.k)
    n, k = L.n, L.k
    z = p.flat()
    m = jet_dim(n, k)
    out = np.zeros(m)
    for beta in range(m):
        s = sbar_apply(mu, TangentAtJet.basis(n, k, beta)).flat()
        if np.any(s):
            out[beta] = ad.derivative(L.flat, z, list(s))
    return CovectorAtJet.from_flat(out, n, k)


def theta_coordinate(L, p, mu):
    """Theta^mu_L = dL/dq^i_mu dq^i from the coordinate formula."""
    _check_mu(mu, L.k)
    n, k = L.n, L.k
    z = p.flat()
    m = jet_dim(n, k)
    dq = np.zeros(n)
    for i in range(n):
        e = [0.0]*m
        e[qd_index(n, k, i, mu)] = 1.0
        dq[i] = ad.derivative(L.flat, z, e)
    return CovectorAtJet(np.zeros(k), dq, np.zeros((n, k)))


def _momentum_hessian_rows(L, p, mu):
    # H[alpha, i] = d^2 L / dz_alpha dq^i_mu
    n, k = L.n, L.k
    z = p.flat()
    m = jet_dim(n, k)
    H = np.zeros((m, n))
    for i in range(n):
        e_i = [0.0]*m
        e_i[qd_index(n, k, i, mu)] = 1.0
        for alpha in range(m):
            e_a = [0.0]*m
            e_a[alpha] = 1.0
            H[alpha, i] = ad.derivative(L.flat, z, e_a, e_i)
    return H


def omega(L, p, mu):
    """
    Omega^mu_L = -dTheta^mu_L = dq^i ^ d(dL/dq^i_mu)

    Includes the dx^nu ^ dq^i terms of an explicitly x dependent L.

        Args:
            L (LagrangianDef): Lagrangian
            p (JetPoint): point
            mu (int): base index

        Returns:
            omega (TwoFormAtJet)
    """
    _check_mu(mu, L.k)
    n, k = L.n, L.k
    H = _momentum_hessian_rows(L, p, mu)
    terms = [(H[alpha, i], q_index(n, k, i), alpha) for i in range(n) for alpha in range(H.shape[0])]
    return TwoFormAtJet.from_wedges(n, k, terms)


def omega_coordinate(L, p, mu):
    """Omega^mu_L with only the dq ^ dq and dq ^ dq_g blocks."""
    _check_mu(mu, L.k)
    n, k = L.n, L.k
    H = _momentum_hessian_rows(L, p, mu)
    terms = [(H[alpha, i], q_index(n, k, i), alpha) for i in range(n) for alpha in range(k, H.shape[0])]
    return TwoFormAtJet.from_wedges(n, k, terms)


def sopde_check(X, p, tol=1e-12):
    """
    SOPDE conditions dx^mu(X_nu) = delta^mu_nu and S^mu(X_mu) = Liouville_mu

        Args:
            X (KVectorAtJet): candidate
            p (JetPoint): base point
            tol (float, default=1e-12): residual tolerance

        Returns:
            report (dict): is_sopde, violations, dx_residual, sbar_residual
    """
    k = p.k
    if X.k != k:
        raise ValueError('k-vector has {} components, expected {}'.format(X.k, k))
    qd = np.asarray(p.qd, dtype=float)
    eye = np.eye(k)
    dx_res = [float(np.max(np.abs(X[mu].a - eye[mu]))) for mu in range(k)]
    sbar_res = [float(np.max(np.abs(X[mu].b - qd[:, mu]))) for mu in range(k)]
    violations = []
    for mu in range(k):
        if dx_res[mu] > tol:
            violations.append({'condition': 'dx', 'mu': mu, 'residual': dx_res[mu]})
        if sbar_res[mu] > tol:
            violations.append({'condition': 'sbar', 'mu': mu, 'residual': sbar_res[mu]})
    return {'is_sopde': not violations, 'violations': violations,
            'dx_residual': dx_res, 'sbar_residual': sbar_res}


def energy_differential(L, p):
    return differential(energy_flat(L), p)


def geometric_el_residual(L, X, p):
    """
    sum_mu i_{X_mu} Omega^mu_L - dE_L - sum_mu dL/dx^mu dx^mu

    For a SOPDE X the dq component is minus the Euler-Lagrange residual of the
    second jet with qdd[i][nu][mu] = (f_mu)^i_nu, the dq_mu components vanish.

        Args:
            L (LagrangianDef): Lagrangian
            X (KVectorAtJet): k-vector field at p
            p (JetPoint): point

        Returns:
            residual (CovectorAtJet)
    """
    if not regularity(L, p)['is_regular']:
        warnings.warn('Lagrangian {} is not regular at {}'.format(L.name, p), RuntimeWarning)
    n, k = L.n, L.k
    total = np.zeros(jet_dim(n, k))
    for mu in range(k):
        total += omega(L, p, mu).interior(X[mu]).flat()
    total -= energy_differential(L, p).flat()
    dL = differential(L.flat, p).flat()
    for mu in range(k):
        total[x_index(n, k, mu)] -= dL[x_index(n, k, mu)]
    return CovectorAtJet.from_flat(total, n, k)


def _rank(M):
    s = scipy.linalg.svdvals(M)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL*s[0]))


def _null_space(M):
    return scipy.linalg.null_space(M, rcond=RANK_TOL)


def cosymplectic_axioms_check(L, p):
    """
    Pointwise k-cosymplectic checks of (dx^mu, Omega^mu_L, V)

    Verifies the volume condition, the exact vanishing of dx^mu and Omega^mu_L
    on the vertical distribution V = span{d/dq^i_mu}, the trivial combined
    kernel and dim(cap ker Omega^mu_L) = k by numeric rank. When the kernel has
    dimension k the Reeb k-vector field is returned too.

        Args:
            L (LagrangianDef): Lagrangian
            p (JetPoint): point

        Returns:
            report (dict)
    """
    n, k = L.n, L.k
    m = jet_dim(n, k)
    if not all(np.all(np.isfinite(np.asarray(ad.primal(z), dtype=float))) for z in p.flat()):
        raise ValueError('non finite jet point {}'.format(p))
    eta = np.zeros((k, m))
    for mu in range(k):
        eta[mu, x_index(n, k, mu)] = 1.0
    forms = [omega(L, p, mu).A for mu in range(k)]
    vertical = [qd_index(n, k, i, mu) for i in range(n) for mu in range(k)]

    volume = _rank(eta) == k
    dx_vertical = bool(np.all(eta[:, vertical] == 0.0))
    omega_vertical = all(bool(np.all(A[np.ix_(vertical, vertical)] == 0.0)) for A in forms)
    stacked = np.vstack(forms)
    kernel_dim = m - _rank(stacked)
    combined_dim = m - _rank(np.vstack([eta, stacked]))

    reeb = None
    if kernel_dim == k:
        K = _null_space(stacked)
        G = eta @ K
        if _rank(G) == k:
            R = K @ scipy.linalg.solve(G, np.eye(k))
            reeb = [TangentAtJet.from_flat(R[:, mu], n, k) for mu in range(k)]
    reg = regularity(L, p)
    passed = volume and dx_vertical and omega_vertical and combined_dim == 0 and kernel_dim == k
    return {
        'volume': volume,
        'dx_vertical': dx_vertical,
        'omega_vertical': omega_vertical,
        'combined_kernel_dim': combined_dim,
        'omega_kernel_dim': kernel_dim,
        'regular': reg['is_regular'],
        'reeb': reeb,
        'passed': bool(passed and reg['is_regular']),
    }
