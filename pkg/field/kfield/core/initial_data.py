# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
Prototype of initial data presets for the 1+1 dimensional presets

Each preset is an analytic section psi(t, x): the closed form solution when the
model has one (standing and traveling waves, the damped and anti-damped
standing modes), otherwise the Taylor section q0(x) + t qdot0(x). The
integrator reads q0 and qdot0 from the section at t = 0, Dirichlet boundaries
read the section at the boundary columns, and error diagnostics compare with
the section when it is exact.
"""

import math

import numpy as np

from kfield.core import ad
from kfield.core.jet import AnalyticSection

IC_PRESETS = ('standing_mode', 'traveling_wave', 'gaussian')

IC_DEFAULTS = {'amplitude': 1.0, 'wavenumber': 1.0, 'center': math.pi, 'width': 0.5}


class InitialData(object):
    """
    Initial data of one field family together with its generating section

    Data Members:
        name (str): preset name
        section (AnalyticSection): psi(t, x), k=2
        exact (bool): section solves the field equations
        params (dict): preset parameters
    """

    def __init__(self, name, section, exact, params):
        self.name = name
        self.section = section
        self.exact = exact
        self.params = dict(params)

    @property
    def n(self):
        return self.section.n

    def values(self, t, x):
        """Section samples, array (len(x), n)."""
        x = np.asarray(x, dtype=float)
        t = np.full(x.shape, float(t))
        out = self.section.value([t, x])
        return np.stack(np.broadcast_arrays(*[np.asarray(v, dtype=float) for v in out]), axis=-1)

    def oracle(self, t, x):
        if not self.exact:
            raise ValueError('initial data {} has no closed form solution for this model'.format(self.name))
        return self.values(t, x)


def _damping(L, F):
    """tau of a damped_wave force, None for conservative models."""
    if F is None:
        return None
    tau = L.params.get('tau')
    if L.name != 'damped_wave' or tau is None:
        return False
    return tau


def make_initial_data(L, F, preset, adjoint=False, **params):
    """
    Builds an initial data preset for a k=2 model

        Args:
            L (LagrangianDef): model Lagrangian, k=2
            F (ForceDef or None): model force
            preset (str): one of IC_PRESETS
            adjoint (bool, default=False): data of the absorbing field, damping sign reversed
            **params: amplitude, wavenumber, center, width

        Returns:
            data (InitialData)
    """
    if L.k != 2:
        raise ValueError('initial data presets are defined for k=2 models, got k={}'.format(L.k))
    if preset not in IC_PRESETS:
        raise ValueError('unknown initial data preset {!r}, expected one of {}'.format(preset, ', '.join(IC_PRESETS)))
    unknown = sorted(set(params) - set(IC_DEFAULTS))
    if unknown:
        raise ValueError('initial data has no parameter(s) {}'.format(', '.join(unknown)))
    values = dict(IC_DEFAULTS)
    values.update(dict((key, float(value)) for key, value in params.items()))
    for key in ('wavenumber', 'width'):
        if not values[key] > 0.0:
            raise ValueError('initial data {} must be positive, got {}'.format(key, values[key]))
    if not all(math.isfinite(value) for value in values.values()):
        raise ValueError('initial data parameters must be finite')

    A = values['amplitude']
    kappa = values['wavenumber']
    n = L.n
    tau = _damping(L, F)
    wave_like = L.name in ('wave', 'damped_wave') and L.wave_speed is not None

    if preset == 'standing_mode':
        if wave_like and tau is None:
            c = L.wave_speed
            fn = _fields(n, lambda t, x: A*ad.cos(c*kappa*t)*ad.sin(kappa*x))
            return InitialData(preset, AnalyticSection(fn, n, 2), True, values)
        if wave_like and tau:
            c = L.wave_speed
            s = -tau if adjoint else tau
            disc = c*c*kappa*kappa - 1.0/(4.0*tau*tau)
            if disc <= 0.0:
                raise ValueError('standing mode oracle needs an underdamped mode, c*kappa > 1/(2 tau)')
            omega = math.sqrt(disc)
            fn = _fields(n, lambda t, x: A*ad.exp(-t/(2.0*s))*(ad.cos(omega*t) + ad.sin(omega*t)/(2.0*s*omega))
                         * ad.sin(kappa*x))
            return InitialData(preset, AnalyticSection(fn, n, 2), True, values)
        fn = _fields(n, lambda t, x: A*ad.sin(kappa*x) + 0.0*t)
        return InitialData(preset, AnalyticSection(fn, n, 2), False, values)

    if preset == 'traveling_wave':
        c = L.wave_speed if L.wave_speed is not None else 1.0
        fn = _fields(n, lambda t, x: A*ad.sin(kappa*(x - c*t)))
        if wave_like and tau is None:
            return InitialData(preset, AnalyticSection(fn, n, 2), True, values)
        # Taylor section of the undamped traveling wave
        taylor = _fields(n, lambda t, x: A*ad.sin(kappa*x) - t*A*kappa*c*ad.cos(kappa*x))
        return InitialData(preset, AnalyticSection(taylor, n, 2), False, values)

    center = values['center']
    width = values['width']
    fn = _fields(n, lambda t, x: A*ad.exp(-(x - center)*(x - center)/(2.0*width*width)) + 0.0*t)
    return InitialData(preset, AnalyticSection(fn, n, 2), False, values)


def _fields(n, profile):
    # every field component carries the same profile
    def fn(z):
        t, x = z[0], z[1]
        value = profile(t, x)
        return [value for _ in range(n)]
    return fn
