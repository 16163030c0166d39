"""
======================================
Scenario runner (:mod:`thinshell.cli`)
======================================

.. :currentmodule: thinshell.cli

Command-line runs of the shield benchmarks: ``thinshell run``,
``thinshell compare``, ``thinshell sweep`` and ``thinshell mesh``.

.. rubric:: Functions

.. autosummary::
    :toctree: generated/

    load_scenario
    run_scenario
    sweep
    compare
    read_result

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    Scenario
    ScenarioError
    RunResult
    StoredResult
"""

from thinshell.cli.report import StoredResult, compare, read_result
from thinshell.cli.runner import RunResult, run_scenario, sweep
from thinshell.cli.scenario import BUILTIN, Scenario, ScenarioError, load_scenario
