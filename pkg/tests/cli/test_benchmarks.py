'''
Full-scale shield benchmarks. Each test meshes the 4 m air box with the
default element sizes; run with --runslow.
'''

import thinshell
from thinshell.cli import runner
from thinshell.cli.scenario import load_scenario

import numpy as np
import pytest


def run(name, **overrides):
    return runner.run_scenario(load_scenario(name, overrides=overrides))

def difference(result, reference, probe):
    return thinshell.fem2d.relative_difference(result.probes[probe], reference.probes[probe])


@pytest.mark.slow
def test_shield1_lines():
    reference = run('shield1', model='reference')
    ts = run('shield1')
    assert difference(ts, reference, 'AA') <= 1.5
    assert difference(ts, reference, 'BB') <= 1.5

@pytest.mark.slow
def test_shield2_depth_profile():
    reference = run('shield2', model='reference')
    ts = run('shield2')
    a, b = ts.probes['P2'].values, reference.probes['P2'].values
    assert np.max(np.abs(a - b)) <= 0.02 * np.max(np.abs(b))

@pytest.mark.slow
@pytest.mark.parametrize('name, reference_loss, ts_loss', [
    ('shield3', 2.4915, 2.5099),
    ('shield4', 0.7514, 0.7592),
])
def test_pulse_losses(name, reference_loss, ts_loss):
    reference = run(name, model='reference')
    assert reference.loss == pytest.approx(reference_loss, rel=0.05)

    differences = []
    for n in [1, 2, 3]:
        ts = run(name, basis={'n': n})
        differences.append(difference(ts, reference, 'P1'))
    assert differences[1] <= differences[0]
    assert differences[2] <= differences[1]
    assert ts.loss == pytest.approx(ts_loss, rel=0.05)
    assert ts.loss == pytest.approx(reference.loss, rel=0.02)

@pytest.mark.slow
def test_shield3_p1_at_n2():
    reference = run('shield3', model='reference')
    ts = run('shield3', basis={'n': 2})
    assert difference(ts, reference, 'P1') == pytest.approx(2.95, abs=1.5)

@pytest.mark.slow
def test_nonlinear_p1():
    reference = run('nonlinear', model='reference')
    ts = run('nonlinear')
    assert reference.solution.max_iterations <= 12
    assert ts.solution.max_iterations <= 12
    assert difference(ts, reference, 'P1') < 2.0

@pytest.mark.slow
def test_dof_economy():
    ts_mesh = runner.build_mesh(load_scenario('shield1'))
    reference_mesh = runner.build_mesh(load_scenario('shield1', overrides={'model': 'reference'}))
    reference_dofs = thinshell.mesh2d.estimate_dofs(reference_mesh)
    dofs = [thinshell.mesh2d.estimate_dofs(ts_mesh, n) for n in [1, 2, 3]]
    assert dofs[0] <= 0.3 * reference_dofs
    assert dofs[2] - dofs[1] == dofs[1] - dofs[0]
    assert dofs[1] - dofs[0] > 0
