# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of jet coordinate containers

Points of R^k x T1kQ carry (x^mu, q^i, q^i_mu); points of R^k x T1k(TQ) add the
variation (v^i, v^i_mu). Every first jet flattens to one coordinate list

    z = [x^1..x^k, q^1..q^n, q^1_1..q^1_k, ..., q^n_1..q^n_k]

with qd[i][mu] stored field index first. Doubled points list the fields as
(q^1..q^n, v^1..v^n). Entries may be floats, numpy arrays (a batch of points)
or Duals.
"""

import numpy as np

from kfield.core import ad


def x_index(n, k, mu):
    return mu


def q_index(n, k, i):
    return k + i


def qd_index(n, k, i, mu):
    return k + n + i*k + mu


def jet_dim(n, k):
    return k + n + n*k


def coordinate_names(n, k, prolonged=False):
    """
    Names of the flat coordinates, 1-based as in the textual point syntax

        Args:
            n (int): field count
            k (int): base dimension
            prolonged (bool, default=False): names of the doubled coordinates

        Returns:
            names (list(str)): x1..xk, q1..qn, [v1..vn], q1_1.., [v1_1..]
    """
    names = ['x{}'.format(mu + 1) for mu in range(k)]
    names += ['q{}'.format(i + 1) for i in range(n)]
    if prolonged:
        names += ['v{}'.format(i + 1) for i in range(n)]
    names += ['q{}_{}'.format(i + 1, mu + 1) for i in range(n) for mu in range(k)]
    if prolonged:
        names += ['v{}_{}'.format(i + 1, mu + 1) for i in range(n) for mu in range(k)]
    return names


class JetPoint(object):
    """
    Point of R^k x T1kQ in induced coordinates

    Data Members:
        x (list): k base coordinates x^mu
        q (list): n field values q^i
        qd (list(list)): n x k first derivatives, qd[i][mu] = q^i_mu
    """

    def __init__(self, x, q, qd):
        self.x = list(x)
        self.q = list(q)
        self.qd = [list(row) for row in qd]
        if len(self.qd) != len(self.q) or any(len(row) != len(self.x) for row in self.qd):
            raise ValueError('qd must have shape (n, k) = ({}, {})'.format(len(self.q), len(self.x)))
        if len(self.x) < 1 or len(self.q) < 1:
            raise ValueError('a jet point needs n >= 1 and k >= 1')

    @property
    def n(self):
        return len(self.q)

    @property
    def k(self):
        return len(self.x)

    def flat(self):
        return self.x + self.q + [entry for row in self.qd for entry in row]

    @classmethod
    def from_flat(cls, z, n, k):
        z = list(z)
        if len(z) != jet_dim(n, k):
            raise ValueError('expected {} coordinates, got {}'.format(jet_dim(n, k), len(z)))
        qd = [z[k + n + i*k:k + n + (i + 1)*k] for i in range(n)]
        return cls(z[:k], z[k:k + n], qd)

    @classmethod
    def zeros(cls, n, k):
        return cls([0.0]*k, [0.0]*n, [[0.0]*k for _ in range(n)])

    def __repr__(self):
        return 'JetPoint(x={}, q={}, qd={})'.format(self.x, self.q, self.qd)


class ProlongedJetPoint(object):
    """
    Point of R^k x T1k(TQ), a base jet together with a variation

    Data Members:
        x (list): k base coordinates
        q (list): n field values
        v (list): n variation values v^i
        qd (list(list)): n x k first derivatives of q
        vd (list(list)): n x k first derivatives of v
    """

    def __init__(self, x, q, v, qd, vd):
        self.x = list(x)
        self.q = list(q)
        self.v = list(v)
        self.qd = [list(row) for row in qd]
        self.vd = [list(row) for row in vd]
        if len(self.v) != len(self.q) or len(self.vd) != len(self.qd):
            raise ValueError('variation blocks must match the field blocks')
        # shape checks of the (q, qd) part
        self.base()

    @property
    def n(self):
        return len(self.q)

    @property
    def k(self):
        return len(self.x)

    def base(self):
        """Projection onto the underlying first jet."""
        return JetPoint(self.x, self.q, self.qd)

    def doubled(self):
        """First jet of the doubled field (q^1..q^n, v^1..v^n)."""
        return JetPoint(self.x, self.q + self.v, self.qd + self.vd)

    @classmethod
    def from_doubled(cls, jp):
        if jp.n % 2:
            raise ValueError('a doubled jet point has an even number of fields')
        n = jp.n//2
        return cls(jp.x, jp.q[:n], jp.q[n:], jp.qd[:n], jp.qd[n:])

    def flat(self):
        return self.doubled().flat()

    def blocks(self):
        """Fiber blocks in T1k(TQ) order (q, v, qd, vd)."""
        return (self.q, self.v, self.qd, self.vd)

    @classmethod
    def zeros(cls, n, k):
        return cls([0.0]*k, [0.0]*n, [0.0]*n, [[0.0]*k for _ in range(n)], [[0.0]*k for _ in range(n)])

    def __repr__(self):
        return 'ProlongedJetPoint(x={}, q={}, v={}, qd={}, vd={})'.format(
            self.x, self.q, self.v, self.qd, self.vd)


def kappa(blocks):
    """
    Canonical involution in coordinates, swaps the two middle fiber blocks

    (q, v; qd, vd) in T1k(TQ) order becomes (q, qd; v, vd) in T(T1kQ) order.
    Values are not touched; applying the map twice gives the input back.

        Args:
            blocks (tuple or ProlongedJetPoint): four fiber blocks

        Returns:
            swapped (tuple): four blocks
    """
    if isinstance(blocks, ProlongedJetPoint):
        blocks = blocks.blocks()
    if len(blocks) != 4:
        raise ValueError('kappa acts on four coordinate blocks')
    first, second, third, fourth = blocks
    return (first, third, second, fourth)


def _symmetric_upper(dd, n, k, label):
    upper = {}
    for i in range(n):
        for mu in range(k):
            for nu in range(mu, k):
                a = dd[i][mu][nu]
                b = dd[i][nu][mu]
                if not np.allclose(ad.primal(a), ad.primal(b), rtol=1e-10, atol=1e-12):
                    raise ValueError('{}[{}] is not symmetric in ({}, {})'.format(label, i, mu, nu))
                upper[(i, mu, nu)] = a
    return upper


class SecondJet(object):
    """
    First jet plus the symmetric second derivatives of the section

    Only the upper triangle mu <= nu is stored; reads mirror it.

    Data Members:
        base (JetPoint or ProlongedJetPoint): underlying first jet
        prolonged (bool): base carries a variation
    """

    def __init__(self, base, qdd, vdd=None):
        self.base = base
        self.prolonged = isinstance(base, ProlongedJetPoint)
        n, k = base.n, base.k
        self._qdd = _symmetric_upper(qdd, n, k, 'qdd')
        self._vdd = None
        if self.prolonged:
            if vdd is None:
                vdd = np.zeros((n, k, k))
            self._vdd = _symmetric_upper(vdd, n, k, 'vdd')
        elif vdd is not None:
            raise ValueError('vdd requires a ProlongedJetPoint base')

    @property
    def n(self):
        return self.base.n

    @property
    def k(self):
        return self.base.k

    def qdd_entry(self, i, mu, nu):
        return self._qdd[(i, min(mu, nu), max(mu, nu))]

    def vdd_entry(self, i, mu, nu):
        if self._vdd is None:
            raise ValueError('second jet carries no variation')
        return self._vdd[(i, min(mu, nu), max(mu, nu))]

    @property
    def qdd(self):
        return [[[self.qdd_entry(i, mu, nu) for nu in range(self.k)] for mu in range(self.k)]
                for i in range(self.n)]

    @property
    def vdd(self):
        return [[[self.vdd_entry(i, mu, nu) for nu in range(self.k)] for mu in range(self.k)]
                for i in range(self.n)]

    def first_jet(self):
        return self.base.base() if self.prolonged else self.base

    def background(self):
        """Second jet of the background fields alone."""
        if not self.prolonged:
            return self
        return SecondJet(self.base.base(), self.qdd)

    def doubled(self):
        """Second jet of the doubled field, fields ordered (q, v)."""
        if not self.prolonged:
            raise ValueError('only a prolonged second jet can be doubled')
        return SecondJet(self.base.doubled(), self.qdd + self.vdd)

    def __repr__(self):
        return 'SecondJet(base={}, qdd={})'.format(self.base, self.qdd)


class AnalyticSection(object):
    """
    Section x -> psi(x) of R^k x Q with derivative access up to order two

    Derivatives come from the supplied callables when given, otherwise from
    the ad module applied to psi itself.

    Data Members:
        fn (callable): list of k base coordinates -> list of n field values
        n (int): field count
        k (int): base dimension
        first (callable or None): x -> (n, k) first derivatives
        second (callable or None): x -> (n, k, k) second derivatives
    """

    def __init__(self, fn, n, k, first=None, second=None):
        self.fn = fn
        self.n = n
        self.k = k
        self.first = first
        self.second = second

    def value(self, x):
        return list(self.fn(list(x)))

    def jacobian(self, x):
        if self.first is not None:
            return self.first(list(x))
        return ad.jacobian(lambda z: list(self.fn(z)), list(x))

    def hessians(self, x):
        if self.second is not None:
            return self.second(list(x))
        return [ad.hessian(lambda z, i=i: self.fn(z)[i], list(x)) for i in range(self.n)]


def jet_of_section(psi, x):
    """
    First prolongation of a section at x

        Args:
            psi (AnalyticSection): section
            x (list): k base coordinates

        Returns:
            jet (JetPoint): (x, psi(x), dpsi/dx(x))
    """
    x = list(x)
    return JetPoint(x, psi.value(x), psi.jacobian(x))


def second_jet_of_section(psi, x):
    """
    Second jet of a section at x

        Args:
            psi (AnalyticSection): section
            x (list): k base coordinates

        Returns:
            jet (SecondJet): first jet plus symmetric second derivatives
    """
    return SecondJet(jet_of_section(psi, x), psi.hessians(list(x)))


def prolonged_second_jet(psi, phi, x):
    """Second jet of the pair (background psi, variation phi) at x."""
    x = list(x)
    base = ProlongedJetPoint(x, psi.value(x), phi.value(x), psi.jacobian(x), phi.jacobian(x))
    return SecondJet(base, psi.hessians(x), phi.hessians(x))


def parse_point(text, n, k, prolonged=False):
    """
    Parses the textual point syntax 'q1=0.5,q1_2=3', unspecified entries are 0

        Args:
            text (str): comma separated name=value pairs
            n (int): field count
            k (int): base dimension
            prolonged (bool, default=False): accept v names and return a ProlongedJetPoint

        Returns:
            point (JetPoint or ProlongedJetPoint)
    """
    names = coordinate_names(n, k, prolonged)
    values = dict((name, 0.0) for name in names)
    for item in (text or '').split(','):
        item = item.strip()
        if not item:
            continue
        if '=' not in item:
            raise ValueError('malformed point entry {!r}, expected name=value'.format(item))
        name, raw = [part.strip() for part in item.split('=', 1)]
        if name not in values:
            raise ValueError('unknown coordinate {!r}, expected one of {}'.format(name, ', '.join(names)))
        try:
            values[name] = float(raw)
        except ValueError:
            raise ValueError('coordinate {} has non numeric value {!r}'.format(name, raw))
    x = [values['x{}'.format(mu + 1)] for mu in range(k)]
    q = [values['q{}'.format(i + 1)] for i in range(n)]
    qd = [[values['q{}_{}'.format(i + 1, mu + 1)] for mu in range(k)] for i in range(n)]
    if not prolonged:
        return JetPoint(x, q, qd)
    v = [values['v{}'.format(i + 1)] for i in range(n)]
    vd = [[values['v{}_{}'.format(i + 1, mu + 1)] for mu in range(k)] for i in range(n)]
    return ProlongedJetPoint(x, q, v, qd, vd)
