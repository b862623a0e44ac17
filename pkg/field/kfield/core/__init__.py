# Copyright (c) 2026 The kfield authors
# SPDX-License-Identifier: MIT

from kfield.core.lagrangian import ForceDef, LagrangianDef, make_model
from kfield.core.jet import JetPoint, ProlongedJetPoint, SecondJet, AnalyticSection
from kfield.core.integrator import GridSpec, SchemeConfig, VariationalSimulator, simulate, cosimulate_doubled
