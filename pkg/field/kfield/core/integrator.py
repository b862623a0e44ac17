# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of the discrete variational integrator for 1+1 dimensional fields

The space-time grid carries nodal values Q[a, b, i] at t_a = a dt,
x_b = x_min + b dx. The discrete action sums a cell Lagrangian over grid cells;
forces enter through a discrete pairing functional Phi(Q, V) that is linear in
the variation V, so the doubled (Q, V) system is itself variational. Each time
row is solved from the discrete Euler-Lagrange equations of the previous row:
once by a prefactored sparse solve when the equations are linear, by Newton
iteration with an AD Jacobian otherwise.

Every term of the discrete action lives on a site (cell, node or half step)
whose jet (q, q_t, q_x) is a fixed linear stencil of nodal values, so every
residual is a site density (the gradient of the site integrand in its jet)
scattered back onto the nodes with the stencil weights.
"""

import logging
import math
from collections import namedtuple
from enum import Enum

import numpy as np
import scipy.sparse
import scipy.sparse.linalg
from numba import njit

from kfield.core import ad
from kfield.core.fieldeq import adjoint_residual, forced_el_residual
from kfield.core.jet import JetPoint, ProlongedJetPoint, SecondJet
from kfield.core.lagrangian import force_prolong, prolong

logger = logging.getLogger(__name__)

# nodal magnitude treated as a blow-up
BLOWUP_LIMIT = 1e8


class BoundaryCondition(Enum):
    PERIODIC = 'periodic'
    DIRICHLET = 'dirichlet'


class CellRule(Enum):
    AVERAGED_CORNER = 'averaged_corner'
    FORWARD_CORNER = 'forward_corner'


class ForceQuadrature(Enum):
    CENTERED = 'centered'
    CELL_AVERAGE = 'cell_average'


class NewtonDivergence(RuntimeError):
    """Newton iteration did not bring a time row below the residual tolerance."""

    def __init__(self, row, residual, iterations):
        self.row = row
        self.residual = residual
        self.iterations = iterations
        super(NewtonDivergence, self).__init__(
            'Newton iteration for time row {} stopped at residual {:.3e} after {} iterations'.format(
                row, residual, iterations))


class CFLViolation(RuntimeError):
    """Refused or unstable march, carries the Courant number c dt/dx."""

    def __init__(self, courant, message):
        self.courant = courant
        super(CFLViolation, self).__init__('{} (Courant number {:.6g})'.format(message, courant))


@njit(cache=True)
def l2_error_rows(Q, E, dx):
    """
    L2-in-space error of every time row

        Args:
            Q (np.ndarray (nt, N, n)): discrete solution
            E (np.ndarray (nt, N, n)): reference samples
            dx (float): grid spacing

        Returns:
            err (np.ndarray (nt, )): sqrt(dx sum_b |Q - E|^2)
    """
    nt = Q.shape[0]
    out = np.empty(nt)
    for a in range(nt):
        s = 0.0
        for b in range(Q.shape[1]):
            for i in range(Q.shape[2]):
                d = Q[a, b, i] - E[a, b, i]
                s += d*d
        out[a] = np.sqrt(dx*s)
    return out


@njit(cache=True)
def mode_amplitudes(U, basis):
    """Projection of every row of U (nt, N) onto one spatial mode."""
    norm = 0.0
    for b in range(basis.shape[0]):
        norm += basis[b]*basis[b]
    out = np.empty(U.shape[0])
    for a in range(U.shape[0]):
        s = 0.0
        for b in range(U.shape[1]):
            s += U[a, b]*basis[b]
        out[a] = s/norm
    return out


@njit(cache=True)
def peak_indices(values):
    """Indices of the local maxima of |values|, the first sample included when it is one."""
    m = values.shape[0]
    out = np.empty(m, dtype=np.int64)
    count = 0
    if m > 1 and abs(values[0]) >= abs(values[1]):
        out[count] = 0
        count += 1
    for r in range(1, m - 1):
        y = abs(values[r])
        if y >= abs(values[r - 1]) and y > abs(values[r + 1]):
            out[count] = r
            count += 1
    return out[:count]


class GridSpec(object):
    """
    Uniform space-time grid

    Data Members:
        nt (int): time nodes, >= 3
        nx (int): space nodes including both ends, >= 3
        t_end (float): final time
        x_min (float): left end
        x_max (float): right end
    """

    def __init__(self, nt, nx, t_end, x_min=0.0, x_max=2*math.pi):
        if int(nt) != nt or int(nx) != nx:
            raise ValueError('grid node counts must be integers, got nt={}, nx={}'.format(nt, nx))
        self.nt = int(nt)
        self.nx = int(nx)
        self.t_end = float(t_end)
        self.x_min = float(x_min)
        self.x_max = float(x_max)
        if self.nt < 3 or self.nx < 3:
            raise ValueError('grid needs nt >= 3 and nx >= 3, got nt={}, nx={}'.format(self.nt, self.nx))
        if not (math.isfinite(self.t_end) and self.t_end > 0.0):
            raise ValueError('t_end must be finite and positive, got {}'.format(self.t_end))
        if not (math.isfinite(self.x_min) and math.isfinite(self.x_max) and self.x_max > self.x_min):
            raise ValueError('need x_min < x_max, got [{}, {}]'.format(self.x_min, self.x_max))

    @property
    def dt(self):
        return self.t_end/(self.nt - 1)

    @property
    def dx(self):
        return (self.x_max - self.x_min)/(self.nx - 1)

    @property
    def t(self):
        return np.arange(self.nt)*self.dt

    @property
    def x(self):
        return self.x_min + np.arange(self.nx)*self.dx

    def __repr__(self):
        return 'GridSpec(nt={}, nx={}, t_end={}, x=[{}, {}])'.format(self.nt, self.nx, self.t_end, self.x_min, self.x_max)


class SchemeConfig(object):
    """
    Scheme parameters

    Data Members:
        cell_rule (CellRule): cell quadrature of the Lagrangian
        force_quadrature (ForceQuadrature): quadrature of the force pairing
        newton_tol (float): residual max-norm tolerance
        newton_max_iter (int): Newton iteration cap
    """

    def __init__(self, cell_rule=CellRule.AVERAGED_CORNER, force_quadrature=ForceQuadrature.CENTERED,
                 newton_tol=1e-12, newton_max_iter=50):
        self.cell_rule = CellRule(cell_rule)
        self.force_quadrature = ForceQuadrature(force_quadrature)
        self.newton_tol = float(newton_tol)
        self.newton_max_iter = int(newton_max_iter)
        if not self.newton_tol > 0.0:
            raise ValueError('newton tol must be positive, got {}'.format(self.newton_tol))
        if self.newton_max_iter < 1:
            raise ValueError('newton max_iter must be >= 1, got {}'.format(self.newton_max_iter))


class DiscreteState(object):
    """
    Nodal values of a march

    With periodic boundaries column nx-1 is column 0 and is stored once.

    Data Members:
        grid (GridSpec): grid
        bc (BoundaryCondition): boundary condition
        n (int): fields per family
        Q (np.ndarray (nt, N, n)): field values, nan where not yet computed
        V (np.ndarray (nt, N, n) or None): variation values of a co-simulation
    """

    def __init__(self, grid, bc, n, doubled=False):
        self.grid = grid
        self.bc = BoundaryCondition(bc)
        self.n = n
        shape = (grid.nt, self.columns, n)
        self.Q = np.full(shape, np.nan)
        self.V = np.full(shape, np.nan) if doubled else None

    @property
    def columns(self):
        if self.bc is BoundaryCondition.PERIODIC:
            return self.grid.nx - 1
        return self.grid.nx

    @property
    def x(self):
        return self.grid.x[:self.columns]

    def full(self, family='q'):
        """Values on all nx columns, the periodic column mirrored."""
        U = self.Q if family == 'q' else self.V
        if U is None:
            raise ValueError('state carries no {} family'.format(family))
        if self.bc is BoundaryCondition.PERIODIC:
            return np.concatenate([U, U[:, :1, :]], axis=1)
        return U.copy()

    def trajectory_rows(self, every=1):
        """(t, x, field, value) tuples, time-major, then space, then field name."""
        if every < 1:
            raise ValueError('output every must be >= 1, got {}'.format(every))
        families = [('q', self.full('q'))]
        if self.V is not None:
            families.append(('v', self.full('v')))
        t = self.grid.t
        x = self.grid.x
        for a in range(0, self.grid.nt, every):
            for b in range(self.grid.nx):
                for name, U in families:
                    for i in range(self.n):
                        yield (t[a], x[b], '{}{}'.format(name, i + 1), U[a, b, i])


StencilEntry = namedtuple('StencilEntry', ['dr', 'dc', 'val', 't', 'x'])


class Site(object):
    """
    Family of integration sites, one per column, anchored on a time row

    Data Members:
        entries (list(StencilEntry)): jet weights on nodes (anchor row + dr, anchor column + dc)
        t_off (float): site time offset in units of dt
        x_off (float): site space offset in units of dx
        rows (tuple): first and last admissible anchor row
        mask (np.ndarray or None): admissible anchor columns
    """

    def __init__(self, entries, t_off, x_off, rows, mask):
        self.entries = entries
        self.t_off = t_off
        self.x_off = x_off
        self.rows = rows
        self.mask = mask


def cell_entries(rule, dt, dx):
    """Corner weights (q1=(a,b), q2=(a+1,b), q3=(a,b+1), q4=(a+1,b+1)) of a cell rule."""
    rule = CellRule(rule)
    if rule is CellRule.AVERAGED_CORNER:
        ht, hx = 0.5/dt, 0.5/dx
        return [StencilEntry(0, 0, 0.25, -ht, -hx), StencilEntry(1, 0, 0.25, ht, -hx),
                StencilEntry(0, 1, 0.25, -ht, hx), StencilEntry(1, 1, 0.25, ht, hx)], 0.5, 0.5
    return [StencilEntry(0, 0, 1.0, -1.0/dt, -1.0/dx), StencilEntry(1, 0, 0.0, 1.0/dt, 0.0),
            StencilEntry(0, 1, 0.0, 0.0, 1.0/dx)], 0.0, 0.0


def node_entries(dt, dx):
    """
    Centered node jet: value, (Q_{a+1} - Q_{a-1})/(2 dt) smoothed over the
    columns with weights (1, 2, 1)/4, and (Q_{b+1} - Q_{b-1})/(2 dx)

    The smoothing matches the column averaging of the averaged corner cells, so
    the damping and kinetic terms share one spatial symbol and the alternating
    column mode is neither damped nor amplified.
    """
    qt, qt_side, qx = 0.25/dt, 0.125/dt, 0.5/dx
    return [StencilEntry(0, 0, 1.0, 0.0, 0.0),
            StencilEntry(1, 0, 0.0, qt, 0.0), StencilEntry(-1, 0, 0.0, -qt, 0.0),
            StencilEntry(1, 1, 0.0, qt_side, 0.0), StencilEntry(1, -1, 0.0, qt_side, 0.0),
            StencilEntry(-1, 1, 0.0, -qt_side, 0.0), StencilEntry(-1, -1, 0.0, -qt_side, 0.0),
            StencilEntry(0, 1, 0.0, 0.0, qx), StencilEntry(0, -1, 0.0, 0.0, -qx)]


def half_entries(dt, dx):
    """Half step jet between rows a and a+1 at column b."""
    qx = 0.25/dx
    return [StencilEntry(0, 0, 0.5, -1.0/dt, 0.0), StencilEntry(1, 0, 0.5, 1.0/dt, 0.0),
            StencilEntry(0, 1, 0.0, 0.0, qx), StencilEntry(0, -1, 0.0, 0.0, -qx),
            StencilEntry(1, 1, 0.0, 0.0, qx), StencilEntry(1, -1, 0.0, 0.0, -qx)]


def _shift(u, s):
    # value at column b + s
    if s == 0:
        return u
    return ad.apply_linear(lambda w: np.roll(w, -s), u)


def _accumulate(total, weight, u):
    if weight == 0.0:
        return total
    return total + weight*u


def _coloring(U, h, cyclic):
    """Column colors of a banded Jacobian and, per color, the column that feeds each row."""
    m = 2*h + 1
    color = np.empty(U, dtype=np.int64)
    M = m*(U//m) if cyclic else U
    for j in range(U):
        color[j] = j % m if j < M else m + (j - M)
    ncolors = int(color.max()) + 1
    owner = np.full((ncolors, U), -1, dtype=np.int64)
    for u in range(U):
        for o in range(-h, h + 1):
            w = u + o
            if cyclic:
                w %= U
            elif w < 0 or w >= U:
                continue
            c = color[w]
            if owner[c, u] not in (-1, w):
                raise RuntimeError('Jacobian coloring conflict at column {}'.format(u))
            owner[c, u] = w
    return [(np.nonzero(color == c)[0], owner[c]) for c in range(ncolors)]


def discrete_lagrangian_cell(L, corners, dt, dx, rule=CellRule.AVERAGED_CORNER, t0=0.0, x0=0.0):
    """
    Cell value dt*dx*L at the cell jet reconstructed from its corners

        Args:
            L (LagrangianDef): k=2 Lagrangian
            corners (tuple): (q_{a,b}, q_{a+1,b}, q_{a,b+1}, q_{a+1,b+1}), each n values
            dt (float): time step
            dx (float): space step
            rule (CellRule, default averaged corner): cell rule
            t0 (float, default=0.0): time of the base corner
            x0 (float, default=0.0): position of the base corner

        Returns:
            value (float): cell contribution to the discrete action
    """
    entries, t_off, x_off = cell_entries(rule, dt, dx)
    index = {(0, 0): 0, (1, 0): 1, (0, 1): 2, (1, 1): 3}
    n = L.n
    q = [0.0]*n
    qd = [[0.0, 0.0] for _ in range(n)]
    for e in entries:
        corner = corners[index[(e.dr, e.dc)]]
        for i in range(n):
            q[i] = _accumulate(q[i], e.val, corner[i])
            qd[i][0] = _accumulate(qd[i][0], e.t, corner[i])
            qd[i][1] = _accumulate(qd[i][1], e.x, corner[i])
    x = [t0 + t_off*dt, x0 + x_off*dx]
    return dt*dx*L.fn(x, q, qd)


class VariationalSimulator(object):
    """
    Discrete variational integrator for a k=2 Lagrangian with optional force

    Data Members:
        L (LagrangianDef): Lagrangian
        F (ForceDef or None): force
        grid (GridSpec): grid
        bc (BoundaryCondition): boundary condition
        scheme (SchemeConfig): scheme parameters
        linear (bool): equations are linear with constant coefficients, rows use one prefactored solve
        courant (float): c dt/dx with the model's wave speed (1 when unknown)
    """

    def __init__(self, L, F, grid, bc=BoundaryCondition.PERIODIC, scheme=None):
        if L.k != 2:
            raise ValueError('the discrete integrator runs k=2 models, got k={}'.format(L.k))
        if F is not None and (F.n != L.n or F.k != L.k):
            raise ValueError('force shape does not match the Lagrangian')
        self.L = L
        self.F = F
        self.grid = grid
        self.bc = BoundaryCondition(bc)
        self.scheme = scheme if scheme is not None else SchemeConfig()
        self.n = L.n
        self.linear = bool(L.quadratic and (F is None or F.linear) and not L.explicit_x)
        speed = L.wave_speed if L.wave_speed is not None else 1.0
        self.courant = speed*grid.dt/grid.dx

        dt, dx = grid.dt, grid.dx
        periodic = self.bc is BoundaryCondition.PERIODIC
        N = grid.nx - 1 if periodic else grid.nx
        self.N = N
        entries, t_off, x_off = cell_entries(self.scheme.cell_rule, dt, dx)
        if periodic:
            cell_mask = node_mask = None
        else:
            cell_mask = np.ones(N)
            cell_mask[-1] = 0.0
            node_mask = np.ones(N)
            node_mask[0] = node_mask[-1] = 0.0
        self.cell = Site(entries, t_off, x_off, (0, grid.nt - 2), cell_mask)
        self.node = Site(node_entries(dt, dx), 0.0, 0.0, (1, grid.nt - 2), node_mask)
        # the variation pairs the force on the last row as well, Q row nt is extrapolated
        self.node_v = Site(node_entries(dt, dx), 0.0, 0.0, (1, grid.nt - 1), node_mask)
        self.half = Site(half_entries(dt, dx), 0.5, 0.0, (0, grid.nt - 2), node_mask)

        self.Lt = None
        self.v_force_in_cells = F is not None and self.scheme.force_quadrature is ForceQuadrature.CELL_AVERAGE
        self.has_fmu = F is not None and F.fn_Fmu is not None

        self.unknown = np.arange(N) if periodic else np.arange(1, N - 1)
        # node F^x scattered across columns reaches two columns through the smoothed q_t
        bandwidth = 2 if self.has_fmu and not self.v_force_in_cells else 1
        self.coloring = _coloring(len(self.unknown), bandwidth, periodic)
        self._factor = {}
        self._data = (None, None)

    # site evaluation

    def _site_z(self, site, r, row_fn, nf, components=(True, True, True)):
        val = [0.0]*nf
        tt = [0.0]*nf
        xx = [0.0]*nf
        for e in site.entries:
            use = (components[0] and e.val != 0.0, components[1] and e.t != 0.0, components[2] and e.x != 0.0)
            if not any(use):
                continue
            row = row_fn(r + e.dr)
            for i in range(nf):
                u = _shift(row[i], e.dc)
                if use[0]:
                    val[i] = _accumulate(val[i], e.val, u)
                if use[1]:
                    tt[i] = _accumulate(tt[i], e.t, u)
                if use[2]:
                    xx[i] = _accumulate(xx[i], e.x, u)
        t = (r + site.t_off)*self.grid.dt
        x = self.grid.x_min + (np.arange(self.N) + site.x_off)*self.grid.dx
        z = [t, x] + val
        for i in range(nf):
            z += [tt[i], xx[i]]
        return z

    @staticmethod
    def _jet_gradient(fn, z, nf, fields):
        m = len(z)
        out = ([], [], [])
        for i in fields:
            for slot, a in enumerate((2 + i, 2 + nf + 2*i, 2 + nf + 2*i + 1)):
                e = [0.0]*m
                e[a] = 1.0
                out[slot].append(ad.derivative(fn, z, e))
        return out

    @staticmethod
    def _masked(site, density):
        if site.mask is None:
            return density
        return tuple([g*site.mask for g in comp] for comp in density)

    def _assemble(self, a, terms, nout):
        R = [0.0]*nout
        for site, density_fn, active in terms:
            cache = {}
            lo, hi = site.rows
            for e in site.entries:
                weights = [w if on else 0.0 for w, on in zip((e.val, e.t, e.x), active)]
                if not any(weights):
                    continue
                r = a - e.dr
                if r < lo or r > hi:
                    continue
                if r not in cache:
                    cache[r] = density_fn(r)
                density = cache[r]
                for i in range(nout):
                    contrib = 0.0
                    for w, comp in zip(weights, density):
                        contrib = _accumulate(contrib, w, comp[i])
                    R[i] = R[i] + _shift(contrib, -e.dc)
        return R

    # residual rows

    def q_residual(self, a, row_fn):
        """
        Discrete Euler-Lagrange residual of time row a, the derivative of the
        discrete action (cells plus force pairing) with respect to Q[a]

            Args:
                a (int): time row, 1 <= a <= nt-2
                row_fn (callable): r -> list of n column arrays of Q[r], rows a-1..a+1

            Returns:
                R (list): n residual arrays over the stored columns
        """
        L, F, n = self.L, self.F, self.n

        def cell_density(r):
            z = self._site_z(self.cell, r, row_fn, n)
            gv, gt, gx = self._jet_gradient(L.flat, z, n, range(n))
            if self.v_force_in_cells:
                point = JetPoint.from_flat(z, n, 2)
                Fi, Fmu = F.F(point), F.Fmu(point)
                gv = [gv[i] + Fi[i] for i in range(n)]
                gt = [gt[i] - Fmu[i][0] for i in range(n)]
                gx = [gx[i] - Fmu[i][1] for i in range(n)]
            return self._masked(self.cell, (gv, gt, gx))

        terms = [(self.cell, cell_density, (True, True, True))]
        if F is not None and not self.v_force_in_cells:
            def node_density(r):
                z = self._site_z(self.node, r, row_fn, n)
                point = JetPoint.from_flat(z, n, 2)
                Fi, Fmu = F.F(point), F.Fmu(point)
                return self._masked(self.node, (Fi, [0.0]*n, [-Fmu[i][1] for i in range(n)]))

            terms.append((self.node, node_density, (True, False, self.has_fmu)))
            if self.has_fmu:
                def half_density(r):
                    z = self._site_z(self.half, r, row_fn, n)
                    Fmu = F.Fmu(JetPoint.from_flat(z, n, 2))
                    return self._masked(self.half, ([0.0]*n, [-Fmu[i][0] for i in range(n)], [0.0]*n))

                terms.append((self.half, half_density, (False, True, False)))
        return self._assemble(a, terms, n)

    def v_residual(self, a, qrow_fn, vrow_fn):
        """
        q-slot residual of the doubled discrete action at time row a, the
        discrete equation of the variation

            Args:
                a (int): time row
                qrow_fn (callable): r -> Q[r] columns, rows a-2..a+2
                vrow_fn (callable): r -> V[r] columns, rows a-1..a+1

            Returns:
                R (list): n residual arrays
        """
        L, F, n = self.L, self.F, self.n
        if self.Lt is None:
            self.Lt = force_prolong(L, F) if self.v_force_in_cells else prolong(L)
        Lt = self.Lt

        def doubled(r):
            return list(qrow_fn(r)) + list(vrow_fn(r))

        def cell_density(r):
            z = self._site_z(self.cell, r, doubled, 2*n)
            return self._masked(self.cell, self._jet_gradient(Lt.flat, z, 2*n, range(n)))

        terms = [(self.cell, cell_density, (True, True, True))]
        if F is not None and not self.v_force_in_cells:
            last = self.grid.nt - 1

            def qrows(r):
                if r > last:
                    return [2.0*u - w for u, w in zip(qrow_fn(last), qrow_fn(last - 1))]
                return qrow_fn(r)

            def node_density(r):
                z = self._site_z(self.node_v, r, qrows, n)
                w = self._site_z(self.node_v, r, vrow_fn, n, components=(True, False, True))

                def pairing(zq):
                    point = JetPoint.from_flat(zq, n, 2)
                    Fi, Fmu = F.F(point), F.Fmu(point)
                    total = 0.0
                    for i in range(n):
                        total = total + Fi[i]*w[2 + i] - Fmu[i][1]*w[2 + n + 2*i + 1]
                    return total
                return self._masked(self.node_v, self._jet_gradient(pairing, z, n, range(n)))

            terms.append((self.node_v, node_density, (True, True, True)))
            if self.has_fmu:
                def half_density(r):
                    z = self._site_z(self.half, r, qrow_fn, n)
                    w = self._site_z(self.half, r, vrow_fn, n, components=(False, True, False))

                    def pairing(zq):
                        Fmu = F.Fmu(JetPoint.from_flat(zq, n, 2))
                        total = 0.0
                        for i in range(n):
                            total = total - Fmu[i][0]*w[2 + n + 2*i]
                        return total
                    return self._masked(self.half, self._jet_gradient(pairing, z, n, range(n)))

                terms.append((self.half, half_density, (True, True, True)))
        return self._assemble(a, terms, n)

    # row solves

    def _embed(self, values, boundary):
        if self.bc is BoundaryCondition.PERIODIC:
            return values
        full = np.empty(self.N)
        full[1:-1] = values
        full[0], full[-1] = boundary
        return full

    def _seeded_row(self, x, d, boundary, tag):
        row = []
        for i in range(self.n):
            real = self._embed(x[:, i], boundary[i])
            if d is None or not np.any(d[:, i]):
                row.append(real)
            else:
                row.append(ad.Dual(real, self._embed(d[:, i], (0.0, 0.0)), tag))
        return row

    def _unknown_part(self, R):
        out = np.empty((len(self.unknown), self.n))
        for i in range(self.n):
            out[:, i] = np.broadcast_to(np.asarray(R[i], dtype=float), (self.N, ))[self.unknown]
        return out

    def _residual_at(self, residual_fn, x, boundary):
        return self._unknown_part(residual_fn(self._seeded_row(x, None, boundary, 0)))

    def _linearize(self, residual_fn, x, boundary):
        U, n = len(self.unknown), self.n
        tag = 1
        rows, cols, vals = [], [], []
        r = None
        for members, owner in self.coloring:
            valid = np.nonzero(owner >= 0)[0]
            for f in range(n):
                d = np.zeros((U, n))
                d[members, f] = 1.0
                R = residual_fn(self._seeded_row(x, d, boundary, tag))
                if r is None:
                    r = self._unknown_part([ad.strip(Ri, tag) for Ri in R])
                T = self._unknown_part([ad.tangent(Ri, tag) for Ri in R])
                for i in range(n):
                    rows.append(valid*n + i)
                    cols.append(owner[valid]*n + f)
                    vals.append(T[valid, i])
        J = scipy.sparse.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                                    shape=(U*n, U*n)).tocsc()
        return r, J

    def _solve_row(self, key, residual_fn, guess, boundary, row):
        """Solves residual_fn(row) = 0 on the unknown columns, returns (values, iterations)."""
        U, n = len(self.unknown), self.n
        if self.linear:
            if key not in self._factor:
                r, J = self._linearize(residual_fn, guess, boundary)
                self._factor[key] = scipy.sparse.linalg.factorized(J)
            else:
                r = self._residual_at(residual_fn, guess, boundary)
            return guess - self._factor[key](r.ravel()).reshape(U, n), 1

        tol = self.scheme.newton_tol
        x = guess.copy()
        norm = np.inf
        for it in range(self.scheme.newton_max_iter + 1):
            r, J = self._linearize(residual_fn, x, boundary)
            norm = float(np.max(np.abs(r)))
            if norm <= tol:
                if it > 1:
                    logger.debug('row %d converged in %d Newton iterations, residual %.3e', row, it, norm)
                return x, it
            if not np.isfinite(norm) or it == self.scheme.newton_max_iter:
                break
            x = x - scipy.sparse.linalg.spsolve(J, r.ravel()).reshape(U, n)
        raise NewtonDivergence(row, norm, self.scheme.newton_max_iter)

    # initial rows

    def _boundary(self, data, t):
        if self.bc is BoundaryCondition.PERIODIC:
            return [None]*self.n
        if data is None:
            raise ValueError('dirichlet rows need initial data for the boundary values')
        ends = data.values(t, [self.grid.x_min, self.grid.x_max])
        return [(ends[0, i], ends[1, i]) for i in range(self.n)]

    def _section_jets(self, data, xs):
        t0 = np.zeros_like(xs)
        sec = data.section
        value = [np.broadcast_to(np.asarray(v, dtype=float), xs.shape) for v in sec.value([t0, xs])]
        jac = sec.jacobian([t0, xs])
        hes = sec.hessians([t0, xs])
        qt = [np.broadcast_to(np.asarray(jac[i][0], dtype=float), xs.shape) for i in range(self.n)]
        qx = [np.broadcast_to(np.asarray(jac[i][1], dtype=float), xs.shape) for i in range(self.n)]
        qtx = [np.broadcast_to(np.asarray(hes[i][0][1], dtype=float), xs.shape) for i in range(self.n)]
        qxx = [np.broadcast_to(np.asarray(hes[i][1][1], dtype=float), xs.shape) for i in range(self.n)]
        return t0, value, qt, qx, qtx, qxx

    @staticmethod
    def _affine_solve(residual_of, n, shape):
        # residuals are affine in the unknown second time derivatives
        zero = np.zeros(shape)
        r0 = np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in residual_of([zero]*n)], axis=-1)
        A = np.empty(shape + (n, n))
        for j in range(n):
            probe = [np.ones(shape) if i == j else zero for i in range(n)]
            rj = np.stack([np.broadcast_to(np.asarray(v, dtype=float), shape) for v in residual_of(probe)], axis=-1)
            A[..., j] = rj - r0
        try:
            return np.linalg.solve(A, -r0[..., None])[..., 0]
        except np.linalg.LinAlgError:
            raise ValueError('time Hessian is singular, the Taylor start needs an invertible d2L/dq_t dq_t')

    def taylor_start(self, data_q, data_v=None):
        """
        Rows 0 and 1 from initial data: q1 = q0 + dt qdot0 + dt^2/2 q_tt, with
        q_tt solved from the continuum forced field equation

            Args:
                data_q (InitialData): field data
                data_v (InitialData or None): variation data, solved with the adjoint equation

            Returns:
                rows (tuple): (Q0, Q1) and, with data_v, (V0, V1), arrays (N, n)
        """
        n, dt = self.n, self.grid.dt
        xs = self.grid.x[:self.N]
        t0, q0, qt, qx, qtx, qxx = self._section_jets(data_q, xs)
        x = [t0, xs]
        qd = [[qt[i], qx[i]] for i in range(n)]

        def qdd_of(s):
            return [[[s[i], qtx[i]], [qtx[i], qxx[i]]] for i in range(n)]

        def q_residual(s):
            return forced_el_residual(self.L, self.F, SecondJet(JetPoint(x, q0, qd), qdd_of(s)))

        s = self._affine_solve(q_residual, n, xs.shape)
        Q0 = np.stack(q0, axis=-1)
        Q1 = Q0 + dt*np.stack(qt, axis=-1) + 0.5*dt*dt*s
        if data_v is None:
            return Q0, Q1

        _, v0, vt, vx, vtx, vxx = self._section_jets(data_v, xs)
        vd = [[vt[i], vx[i]] for i in range(n)]
        qdd = qdd_of([s[:, i] for i in range(n)])

        def v_residual(u):
            base = ProlongedJetPoint(x, q0, v0, qd, vd)
            vdd = [[[u[i], vtx[i]], [vtx[i], vxx[i]]] for i in range(n)]
            return adjoint_residual(self.L, self.F, SecondJet(base, qdd, vdd))

        u = self._affine_solve(v_residual, n, xs.shape)
        V0 = np.stack(v0, axis=-1)
        V1 = V0 + dt*np.stack(vt, axis=-1) + 0.5*dt*dt*u
        return Q0, Q1, V0, V1

    def _apply_boundary(self, U, r, data):
        if self.bc is BoundaryCondition.DIRICHLET:
            ends = self._boundary(data, self.grid.t[r])
            for i in range(self.n):
                U[r, 0, i], U[r, -1, i] = ends[i]

    def reset(self, data_q, data_v=None):
        """
        Fresh state with rows 0 and 1 filled

            Args:
                data_q (InitialData): field data
                data_v (InitialData or None): variation data of a co-simulation

            Returns:
                state (DiscreteState)
        """
        if self.linear and self.L.wave_speed is not None and self.courant > 1.0:
            raise CFLViolation(self.courant, 'refusing to start the linear march beyond c dt/dx = 1')
        state = DiscreteState(self.grid, self.bc, self.n, doubled=data_v is not None)
        rows = self.taylor_start(data_q, data_v)
        state.Q[0], state.Q[1] = rows[0], rows[1]
        for r in (0, 1):
            self._apply_boundary(state.Q, r, data_q)
        if data_v is not None:
            state.V[0], state.V[1] = rows[2], rows[3]
            for r in (0, 1):
                self._apply_boundary(state.V, r, data_v)
        self._data = (data_q, data_v)
        return state

    @staticmethod
    def _rows_of(U):
        return lambda r: [U[r, :, i] for i in range(U.shape[2])]

    def _check_row(self, U, r):
        peak = float(np.max(np.abs(U[r])))
        if not np.isfinite(peak) or peak > BLOWUP_LIMIT:
            raise CFLViolation(self.courant, 'march blew up at time row {} (max |value| {:.3e})'.format(r, peak))

    def step(self, state, a):
        """
        Solves time row a+1 of Q from rows a-1 and a

            Args:
                state (DiscreteState): state with rows a-1, a populated
                a (int): 1 <= a <= nt-2

            Returns:
                iterations (int): Newton iterations (1 on the linear path)
        """
        if not 1 <= a <= self.grid.nt - 2:
            raise IndexError('time row {} out of range 1..{}'.format(a, self.grid.nt - 2))
        known = self._rows_of(state.Q)
        boundary = self._boundary(self._data[0], self.grid.t[a + 1])

        def residual_fn(row):
            return self.q_residual(a, lambda r: row if r == a + 1 else known(r))

        guess = (2.0*state.Q[a] - state.Q[a - 1])[self.unknown]
        x, iters = self._solve_row('q', residual_fn, guess, boundary, a + 1)
        state.Q[a + 1, self.unknown] = x
        self._apply_boundary(state.Q, a + 1, self._data[0])
        self._check_row(state.Q, a + 1)
        return iters

    def step_variation(self, state, a):
        """Solves time row a+1 of V, Q must be marched to row min(a+2, nt-1)."""
        if not 1 <= a <= self.grid.nt - 2:
            raise IndexError('time row {} out of range 1..{}'.format(a, self.grid.nt - 2))
        qrows = self._rows_of(state.Q)
        vknown = self._rows_of(state.V)
        boundary = self._boundary(self._data[1], self.grid.t[a + 1])

        def residual_fn(row):
            return self.v_residual(a, qrows, lambda r: row if r == a + 1 else vknown(r))

        guess = (2.0*state.V[a] - state.V[a - 1])[self.unknown]
        x, iters = self._solve_row('v', residual_fn, guess, boundary, a + 1)
        state.V[a + 1, self.unknown] = x
        self._apply_boundary(state.V, a + 1, self._data[1])
        self._check_row(state.V, a + 1)
        return iters

    def run(self, state):
        """
        Marches Q, then V when the state is doubled, to the final row

            Args:
                state (DiscreteState): state from reset()

            Returns:
                diagnostics (dict): energy_series, newton_iters, observed_cfl, path
        """
        iters = []
        for a in range(1, self.grid.nt - 1):
            iters.append(self.step(state, a))
        v_iters = []
        if state.V is not None:
            for a in range(1, self.grid.nt - 1):
                v_iters.append(self.step_variation(state, a))
        path = 'linear' if self.linear else 'newton'
        logger.info('marched %s on %d x %d nodes (%s path, max %d iterations per row)',
                    self.L.name, self.grid.nt, self.grid.nx, path, max(iters + v_iters + [0]))
        diagnostics = {
            'energy_series': self.energy_series(state).tolist(),
            'newton_iters': iters,
            'observed_cfl': self.courant,
            'path': path,
        }
        if state.V is not None:
            diagnostics['variation_newton_iters'] = v_iters
        return diagnostics

    def del_residual(self, state, a, b=None):
        """
        Discrete Euler-Lagrange residual at node (a, b), or the whole row when b is None

        The residual is the derivative of the discrete action, cell values
        dt*dx*L included, with respect to Q[a, b]; it is O(dt dx h^2) on smooth
        solutions.

            Args:
                state (DiscreteState): rows a-1..a+1 populated
                a (int): time row, 1 <= a <= nt-2
                b (int or None): stored column

            Returns:
                r (np.ndarray (n, ) or (N, n))
        """
        if not 1 <= a <= self.grid.nt - 2:
            raise IndexError('time row {} out of range 1..{}'.format(a, self.grid.nt - 2))
        R = self.q_residual(a, self._rows_of(state.Q))
        full = np.stack([np.broadcast_to(np.asarray(Ri, dtype=float), (self.N, )) for Ri in R], axis=-1)
        full = self.grid.dt*self.grid.dx*full
        if b is None:
            return full
        lo, hi = (0, self.N - 1) if self.bc is BoundaryCondition.PERIODIC else (1, self.N - 2)
        if not lo <= b <= hi:
            raise IndexError('column {} out of range {}..{}'.format(b, lo, hi))
        return full[b]

    def energy_series(self, state):
        """
        Discrete time-energy sum_b dx (phi_t dL/dphi_t - L) at every half step

        For a doubled state the density is that of the forced prolonged
        Lagrangian, conserved along exact solutions.
        """
        doubled = state.V is not None
        Lc = force_prolong(self.L, self.F) if doubled else self.L
        nf = Lc.n
        if doubled:
            Q, V = state.Q, state.V
            rows = lambda r: [Q[r, :, i] for i in range(self.n)] + [V[r, :, i] for i in range(self.n)]
        else:
            rows = self._rows_of(state.Q)
        mask = self.half.mask if self.half.mask is not None else 1.0
        out = np.empty(self.grid.nt - 1)
        for r in range(self.grid.nt - 1):
            z = self._site_z(self.half, r, rows, nf)
            direction = [0.0]*len(z)
            for i in range(nf):
                direction[2 + nf + 2*i] = z[2 + nf + 2*i]
            e = ad.derivative(Lc.flat, z, direction) - Lc.flat(z)
            out[r] = self.grid.dx*float(np.sum(np.broadcast_to(np.asarray(e, dtype=float), (self.N, ))*mask))
        return out

    def errors(self, state, data, family='q'):
        """L2-in-space error of every row against an exact section."""
        U = state.Q if family == 'q' else state.V
        E = np.stack([data.oracle(t, state.x) for t in self.grid.t])
        return l2_error_rows(np.ascontiguousarray(U), np.ascontiguousarray(E), self.grid.dx)


def del_residual(L, F, state, node, scheme=None):
    """Discrete Euler-Lagrange residual at node (a, b) of a populated state."""
    a, b = node
    return VariationalSimulator(L, F, state.grid, state.bc, scheme).del_residual(state, a, b)


def step(L, F, state, a, scheme=None, data=None):
    """
    Advances a populated state over the slab a -> a+1

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force
            state (DiscreteState): rows a-1 and a populated
            a (int): 1 <= a <= nt-2
            scheme (SchemeConfig or None): scheme parameters
            data (InitialData or None): boundary values, required with the Dirichlet condition

        Returns:
            state (DiscreteState): the same state with row a+1 solved
            iterations (int): Newton iterations (1 on the linear path)
    """
    sim = VariationalSimulator(L, F, state.grid, state.bc, scheme)
    sim._data = (data, None)
    iterations = sim.step(state, a)
    return state, iterations


def simulate(L, F, data_q, grid, bc=BoundaryCondition.PERIODIC, scheme=None):
    """
    Runs a march from initial data

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force
            data_q (InitialData): initial data
            grid (GridSpec): grid
            bc (BoundaryCondition): boundary condition
            scheme (SchemeConfig or None): scheme parameters

        Returns:
            state (DiscreteState): marched state
            diagnostics (dict): see VariationalSimulator.run
    """
    sim = VariationalSimulator(L, F, grid, bc, scheme)
    state = sim.reset(data_q)
    diagnostics = sim.run(state)
    if data_q.exact:
        err = sim.errors(state, data_q)
        diagnostics['final_l2_error'] = float(err[-1])
        diagnostics['max_l2_error'] = float(np.max(err))
    return state, diagnostics


def cosimulate_doubled(L, F, data_q, data_v, grid, bc=BoundaryCondition.PERIODIC, scheme=None):
    """
    Marches the doubled system of the forced prolonged Lagrangian

    Q is marched first with the same equations as simulate(), so its trajectory
    is identical; V follows from the q-slot equations.

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force
            data_q (InitialData): field initial data
            data_v (InitialData): variation initial data
            grid (GridSpec): grid
            bc (BoundaryCondition): boundary condition
            scheme (SchemeConfig or None): scheme parameters

        Returns:
            state (DiscreteState): state with Q and V
            diagnostics (dict)
    """
    sim = VariationalSimulator(L, F, grid, bc, scheme)
    state = sim.reset(data_q, data_v)
    diagnostics = sim.run(state)
    if data_q.exact:
        diagnostics['final_l2_error'] = float(sim.errors(state, data_q)[-1])
    if data_v.exact:
        diagnostics['final_l2_error_v'] = float(sim.errors(state, data_v, 'v')[-1])
    return state, diagnostics


def envelope_rate(state, wavenumber=1.0, family='q', field=0):
    """
    Exponential rate of the oscillation envelope of one spatial mode

    Peaks of |a(t)|, a the projection on sin(wavenumber x), are refined by a
    parabola through the neighboring samples, then log|peak| is fitted by a line.

        Returns:
            rate (float): slope of the log envelope
    """
    U = state.Q if family == 'q' else state.V
    basis = np.sin(wavenumber*state.x)
    amp = mode_amplitudes(np.ascontiguousarray(U[:, :, field]), basis)
    peaks = peak_indices(amp)
    dt = state.grid.dt
    times, values = [], []
    for r in peaks:
        y0 = abs(amp[r])
        if 0 < r < len(amp) - 1:
            ym, yp = abs(amp[r - 1]), abs(amp[r + 1])
            curv = ym - 2.0*y0 + yp
            delta = 0.5*(ym - yp)/curv if curv != 0.0 else 0.0
            times.append((r + delta)*dt)
            values.append(y0 - 0.25*(ym - yp)*delta)
        else:
            times.append(r*dt)
            values.append(y0)
    if len(times) < 2:
        raise ValueError('need at least two envelope peaks, found {}'.format(len(times)))
    return float(np.polyfit(np.array(times), np.log(np.array(values)), 1)[0])


DEFAULT_LEVELS = ((50, 25), (100, 50), (200, 100), (400, 200))


def convergence_study(L, F, data_q, t_end, x_min=0.0, x_max=2*math.pi, levels=DEFAULT_LEVELS,
                      bc=BoundaryCondition.PERIODIC, scheme=None):
    """
    Errors against the exact section on a sequence of grids

        Args:
            L (LagrangianDef): Lagrangian
            F (ForceDef or None): force
            data_q (InitialData): exact initial data
            t_end (float): final time
            x_min (float): left end
            x_max (float): right end
            levels (list): (nt, nx) pairs, coarse to fine
            bc (BoundaryCondition): boundary condition
            scheme (SchemeConfig or None): scheme parameters

        Returns:
            table (list(dict)): nt, nx, h, error (max over time of the L2 error), order
    """
    if not data_q.exact:
        raise ValueError('convergence study needs initial data with a closed form solution')
    table = []
    for nt, nx in levels:
        grid = GridSpec(nt, nx, t_end, x_min, x_max)
        state, diagnostics = simulate(L, F, data_q, grid, bc, scheme)
        row = {'nt': grid.nt, 'nx': grid.nx, 'h': grid.dx, 'error': diagnostics['max_l2_error'], 'order': None}
        if table:
            prev = table[-1]
            row['order'] = math.log(prev['error']/row['error'])/math.log(prev['h']/row['h'])
        table.append(row)
        logger.info('level %d x %d: h=%.4g error=%.4g', grid.nt, grid.nx, grid.dx, row['error'])
    return table
