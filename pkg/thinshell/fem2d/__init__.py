"""
===========================================
2-D shield solvers (:mod:`thinshell.fem2d`)
===========================================

.. :currentmodule: thinshell.fem2d

Eddy-current problems of a planar shield driven by a pair of wires, solved
either with the shield replaced by a thin-shell crack or with the shield
volume resolved. Both solvers return a :class:`FieldSolution`, which the
probe functions sample.

.. rubric:: Solvers

.. autosummary::
    :toctree: generated/

    solve_ts
    solve_reference

.. rubric:: Probes and losses

.. autosummary::
    :toctree: generated/

    probe_line
    probe_point
    probe_depth
    circulation
    step_losses
    total_loss
    relative_difference
    dof_count
    standard_probes

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    FieldSolution
    SourceSpec
    ProbeSeries
    ProbeSpec
    TSCouplingBlock
    TSDiscretization
    ReferenceDiscretization
    UndefinedMetricError
"""

from thinshell.fem2d.probes import ProbeSeries, ProbeSpec, UndefinedMetricError
from thinshell.fem2d.probes import circulation, dof_count, probe_depth, probe_line, probe_point
from thinshell.fem2d.probes import relative_difference, standard_probes, step_losses, total_loss
from thinshell.fem2d.reference import ReferenceDiscretization, solve_reference
from thinshell.fem2d.solution import COMPONENTS, FieldSolution
from thinshell.fem2d.source import SourceSpec
from thinshell.fem2d.ts import TSCouplingBlock, TSDiscretization, solve_ts
