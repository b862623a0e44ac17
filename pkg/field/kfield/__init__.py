# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT



"""
kfield: Lagrangian field theories on first jets

Forward mode AD, jet coordinates, the Lagrangian k-cosymplectic structure,
prolongation to the tangent bundle with forces, field equation residuals and a
discrete variational integrator for 1+1 dimensional fields.
"""

__version__ = '0.1.0'
