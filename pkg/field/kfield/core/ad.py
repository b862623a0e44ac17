# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of forward mode automatic differentiation with nestable dual numbers

Every quantity in kfield that needs a partial derivative of a user supplied
Lagrangian goes through this module. A Dual carries a tag; nesting a Dual of a
higher tag around one of a lower tag gives mixed partials without perturbation
confusion. Payloads may be numpy arrays, so one pass evaluates a derivative at
a whole batch of points (grid columns, random samples).
"""

import numpy as np


class Dual(object):
    """
    Dual number real + eps*e_tag, with e_tag**2 = 0

    Data Members:
        real (float, np.ndarray or Dual): primal part, may itself be a Dual of a lower tag
        eps (float, np.ndarray or Dual): tangent part along the seeded direction
        tag (int): perturbation identifier, larger tags always wrap smaller ones
    """

    __slots__ = ('real', 'eps', 'tag')

    # numpy hands mixed ndarray/Dual arithmetic back to the reflected Dual operators
    __array_ufunc__ = None

    def __init__(self, real, eps, tag):
        self.real = real
        self.eps = eps
        self.tag = tag

    def __repr__(self):
        return 'Dual({!r}, {!r}, tag={})'.format(self.real, self.eps, self.tag)

    def _outranked_by(self, other):
        return isinstance(other, Dual) and other.tag > self.tag

    def _same(self, other):
        return isinstance(other, Dual) and other.tag == self.tag

    def __add__(self, other):
        if self._outranked_by(other):
            return other.__radd__(self)
        if self._same(other):
            return Dual(self.real + other.real, self.eps + other.eps, self.tag)
        return Dual(self.real + other, self.eps, self.tag)

    def __radd__(self, other):
        return Dual(other + self.real, self.eps, self.tag)

    def __sub__(self, other):
        if self._outranked_by(other):
            return other.__rsub__(self)
        if self._same(other):
            return Dual(self.real - other.real, self.eps - other.eps, self.tag)
        return Dual(self.real - other, self.eps, self.tag)

    def __rsub__(self, other):
        return Dual(other - self.real, -self.eps, self.tag)

    def __mul__(self, other):
        if self._outranked_by(other):
            return other.__rmul__(self)
        if self._same(other):
            return Dual(self.real*other.real, self.real*other.eps + self.eps*other.real, self.tag)
        return Dual(self.real*other, self.eps*other, self.tag)

    def __rmul__(self, other):
        return Dual(other*self.real, other*self.eps, self.tag)

    def __truediv__(self, other):
        if self._outranked_by(other):
            return other.__rtruediv__(self)
        if self._same(other):
            return Dual(self.real/other.real,
                        (self.eps*other.real - self.real*other.eps)/(other.real*other.real),
                        self.tag)
        return Dual(self.real/other, self.eps/other, self.tag)

    def __rtruediv__(self, other):
        return Dual(other/self.real, -other*self.eps/(self.real*self.real), self.tag)

    def __pow__(self, other):
        if isinstance(other, Dual) and other.tag >= self.tag:
            return exp(other*log(self))
        if np.ndim(other) == 0 and not isinstance(other, Dual):
            if other == 0:
                return Dual(self.real**0, 0.0*self.eps, self.tag)
            if other == 1:
                return self
        return Dual(self.real**other, other*self.real**(other - 1)*self.eps, self.tag)

    def __rpow__(self, other):
        value = other**self.real
        return Dual(value, value*np.log(other)*self.eps, self.tag)

    def __neg__(self):
        return Dual(-self.real, -self.eps, self.tag)

    def __pos__(self):
        return self

    def __abs__(self):
        return Dual(abs(self.real), _sign(self.real)*self.eps, self.tag)


def _sign(u):
    return np.sign(primal(u))


def primal(u):
    """
    Strips every perturbation from u

        Args:
            u (float, np.ndarray or Dual): value

        Returns:
            value (float or np.ndarray): innermost primal part
    """
    while isinstance(u, Dual):
        u = u.real
    return u


def tangent(y, tag):
    """
    Coefficient of the perturbation with the given tag, recursive over lists

        Args:
            y (float, np.ndarray, Dual or list): function output
            tag (int): perturbation to extract

        Returns:
            dy: same structure as y with the tag removed
    """
    if isinstance(y, (list, tuple)):
        return [tangent(item, tag) for item in y]
    if isinstance(y, Dual) and y.tag == tag:
        return y.eps
    # outputs carrying only lower tags do not depend on this perturbation
    return 0.0


def strip(y, tag):
    """Primal part with respect to one tag, recursive over lists."""
    if isinstance(y, (list, tuple)):
        return [strip(item, tag) for item in y]
    if isinstance(y, Dual) and y.tag == tag:
        return y.real
    return y


def max_tag(obj):
    """Largest tag found in obj (0 when obj holds no Dual)."""
    if isinstance(obj, Dual):
        return obj.tag
    if isinstance(obj, (list, tuple)):
        return max([max_tag(item) for item in obj], default=0)
    return 0


def fresh_tag(*objs):
    """Tag strictly larger than any tag found in objs."""
    return 1 + max_tag(list(objs))


def apply_linear(fn, u):
    """
    Maps a linear operation (indexing, roll, scatter) over every component of u

        Args:
            fn (callable): linear map acting on plain values
            u (float, np.ndarray or Dual): operand

        Returns:
            fn(u) with the same perturbation structure
    """
    if isinstance(u, Dual):
        return Dual(apply_linear(fn, u.real), apply_linear(fn, u.eps), u.tag)
    if np.ndim(u) == 0 and u == 0:
        return 0.0
    return fn(u)


def _unary(u, f, df):
    if isinstance(u, Dual):
        return Dual(_unary(u.real, f, df), df(u.real)*u.eps, u.tag)
    return f(u)


def sin(u):
    return _unary(u, np.sin, cos)


def cos(u):
    return _unary(u, np.cos, lambda r: -sin(r))


def tan(u):
    return _unary(u, np.tan, lambda r: 1.0/cos(r)**2)


def exp(u):
    return _unary(u, np.exp, exp)


def log(u):
    return _unary(u, np.log, lambda r: 1.0/r)


def sqrt(u):
    return _unary(u, np.sqrt, lambda r: 0.5/sqrt(r))


def sinh(u):
    return _unary(u, np.sinh, cosh)


def cosh(u):
    return _unary(u, np.cosh, sinh)


def tanh(u):
    return _unary(u, np.tanh, lambda r: 1.0 - tanh(r)**2)


def arctan(u):
    return _unary(u, np.arctan, lambda r: 1.0/(1.0 + r*r))


def is_zero(d):
    return not isinstance(d, Dual) and np.ndim(d) == 0 and d == 0


def nested(f, p, dirs):
    """
    Mixed directional derivative D^d f(p)[dirs[0], ..., dirs[d-1]]

    One perturbation level per direction; coordinates with an exactly zero
    direction component are left unseeded.

        Args:
            f (callable): function of a list of m scalars, returns a scalar or a list
            p (list): m evaluation coordinates, plain or Dual, scalar or array valued
            dirs (list): directions, each a list of m components

        Returns:
            value with the structure of f's output
    """
    base = fresh_tag(p, dirs)
    z = list(p)
    tags = []
    for level, direction in enumerate(dirs):
        tag = base + level
        tags.append(tag)
        z = [zi if is_zero(di) else Dual(zi, di, tag) for zi, di in zip(z, direction)]
    y = f(z)
    for tag in reversed(tags):
        y = tangent(y, tag)
    return y


def _basis(m, a):
    e = [0.0]*m
    e[a] = 1.0
    return e


def pack(values):
    """Stacks plain results into an array, keeps Dual valued results as nested lists."""
    if max_tag(values) > 0:
        return values
    return np.array(_broadcast(values))


def _leaves(values):
    if isinstance(values, list):
        for item in values:
            for leaf in _leaves(item):
                yield leaf
    else:
        yield values


def _broadcast(values):
    # one common shape over every leaf, rows of scalar zeros included
    shape = np.broadcast_shapes(*[np.shape(leaf) for leaf in _leaves(values)])

    def fill(item):
        if isinstance(item, list):
            return [fill(entry) for entry in item]
        return np.broadcast_to(np.asarray(item, dtype=float), shape)
    return fill(values)


def derivative(f, p, *dirs):
    """Directional derivative of order len(dirs), see nested()."""
    return nested(f, p, list(dirs))


def gradient(f, p):
    """
    Gradient of a scalar callable, one forward pass per coordinate

        Args:
            f (callable): function of a list of m scalars
            p (list or np.ndarray): evaluation point, m entries

        Returns:
            grad (np.ndarray (m, ...)): partials, or a list when p carries Duals
    """
    p = list(p)
    m = len(p)
    return pack([nested(f, p, [_basis(m, a)]) for a in range(m)])


def hessian(f, p):
    """
    Hessian of a scalar callable, every entry computed from its own nested pass

        Args:
            f (callable): function of a list of m scalars
            p (list or np.ndarray): evaluation point

        Returns:
            hess (np.ndarray (m, m, ...)): second partials
    """
    p = list(p)
    m = len(p)
    return pack([[nested(f, p, [_basis(m, a), _basis(m, b)]) for b in range(m)] for a in range(m)])


def directional_derivative_of_hessian(f, p, direction):
    """
    Derivative of the Hessian of f along direction, D^3 f(p)[., ., direction]

        Args:
            f (callable): function of a list of m scalars
            p (list or np.ndarray): evaluation point
            direction (list or np.ndarray): m components

        Returns:
            dhess (np.ndarray (m, m, ...)): third partials contracted with direction
    """
    p = list(p)
    direction = list(direction)
    m = len(p)
    return pack([[nested(f, p, [_basis(m, a), _basis(m, b), direction]) for b in range(m)]
                  for a in range(m)])


def jacobian(f, p):
    """
    Jacobian of a list valued callable

        Args:
            f (callable): function of a list of m scalars returning r scalars
            p (list or np.ndarray): evaluation point

        Returns:
            jac (np.ndarray (r, m, ...)): jac[i][a] = d f_i / d u_a
    """
    p = list(p)
    m = len(p)
    columns = [nested(f, p, [_basis(m, a)]) for a in range(m)]
    rows = [[columns[a][i] for a in range(m)] for i in range(len(columns[0]))]
    return pack(rows)
