import thinshell
from thinshell.fem2d import SourceSpec, TSCouplingBlock
from thinshell.fem2d.lib.topology import EdgeTopology
from thinshell.hyperbasis import SheetSpec, build_basis, classical_ibc
from thinshell.materials import MaterialModel
from thinshell.mesh2d import GeometrySpec, TopologyError
from thinshell.numerics import TimeGrid

from dataclasses import replace
import numpy as np
import pytest


################################################################################
## Fixtures

@pytest.fixture
def geometry():
    return GeometrySpec(shield_width=0.2, shield_thickness=1e-3, wire_size=0.02,
                        wire_separation=0.1, wire_gap=0.03, air_box=(0.6, 0.6))

@pytest.fixture
def mesh(geometry):
    return thinshell.mesh2d.generate_mesh(geometry, 0.02, 0.1)

@pytest.fixture
def sheet():
    return SheetSpec.from_relative(1e-3, 1000, 1e6)

@pytest.fixture
def steel():
    return MaterialModel.linear(mu_r=1000, sigma=1e6)

def loop_around_plus_wire():
    return [[-0.07, -0.0605], [-0.03, -0.0605], [-0.03, -0.0205], [-0.07, -0.0205]]


################################################################################
## Tests

def test_zero_source(mesh, sheet, steel):
    basis = build_basis(sheet, 5000, 1)
    source = SourceSpec.pulse(0.0, 20e-6)
    sol = thinshell.fem2d.solve_ts(mesh, basis, steel, source, grid=TimeGrid(50e-6, 5))
    assert sol.model == 'ts'
    assert sol.steps == 5
    assert np.all(sol.values == 0)
    assert thinshell.fem2d.total_loss(sol) == 0

def test_dofs(mesh, sheet, steel):
    for n in [1, 2]:
        basis = build_basis(sheet, 50, n)
        sol = thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.sinusoid(6000, 50), mode='harmonic')
        assert sol.dofs == thinshell.mesh2d.estimate_dofs(mesh, n)
        assert sol.values.shape == (1, sol.dofs)
        assert thinshell.fem2d.dof_count(sol) == sol.dofs

@pytest.mark.parametrize('ratio', [0.25, 1, 10, 1000])
def test_trace_admittance_matches_ibc(mesh, sheet, steel, ratio):
    delta = ratio * sheet.thickness
    f = 2 / (sheet.mu * sheet.sigma * 2 * np.pi * delta**2)
    basis = build_basis(sheet, f, 1)
    block = TSCouplingBlock.build(mesh, basis, EdgeTopology.of(mesh), [], len(mesh.nodes))
    ibc = classical_ibc(sheet, f)
    for segment in [0, block.segments // 2]:
        jumps = block.trace_admittance(steel, f, segment)
        assert jumps.eta_e == pytest.approx(ibc.eta_e, rel=1e-8)
        assert jumps.eta_h == pytest.approx(ibc.eta_h, rel=1e-8)

def test_linearity(mesh, sheet, steel):
    basis = build_basis(sheet, 50, 1)
    full = thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.sinusoid(6000, 50), mode='harmonic')
    half = thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.sinusoid(3000, 50), mode='harmonic')
    scale = np.max(np.abs(full.values))
    assert scale > 0
    assert np.max(np.abs(full.values - 2 * half.values)) < 1e-9 * scale
    assert thinshell.fem2d.total_loss(full) == pytest.approx(4 * thinshell.fem2d.total_loss(half))
    assert thinshell.fem2d.total_loss(full) > 0

def test_step_currents_start_from_rest():
    source = SourceSpec.sinusoid(6000, 50)
    times = TimeGrid(0.005, 5).times
    currents = source.step_currents(times)
    assert currents.shape == (6, 2)
    assert np.all(currents[0] == 0)
    assert currents[1:] == pytest.approx(source.wire_currents(times)[1:])
    assert source.wire_currents(times)[0, 0] == pytest.approx(6000)

def test_ampere_circulation(mesh, sheet, steel):
    basis = build_basis(sheet, 50, 1)
    sol = thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.sinusoid(6000, 50, phase=0.4),
                                   mode='harmonic')
    circulation = thinshell.fem2d.circulation(sol, loop_around_plus_wire())
    phasor = 6000 * np.exp(0.4j)
    assert abs(circulation[0] - phasor) < 5e-3 * 6000

def test_ampere_circulation_transient(mesh, sheet, steel):
    basis = build_basis(sheet, 5000, 2)
    grid = TimeGrid(50e-6, 10)
    sol = thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.pulse(6000, 20e-6), grid=grid)
    circulation = thinshell.fem2d.circulation(sol, loop_around_plus_wire())
    currents = sol.currents[:, 0]
    assert np.max(np.abs(circulation - currents)) < 5e-3 * 6000
    assert circulation[-1] == pytest.approx(6000, rel=5e-3)

def test_transient_losses(mesh, sheet, steel):
    basis = build_basis(sheet, 5000, 2)
    grid = TimeGrid(50e-6, 10)
    sol = thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.pulse(6000, 20e-6), grid=grid)
    losses = thinshell.fem2d.step_losses(sol)
    assert losses.shape == (11,)
    assert losses[0] == 0
    assert np.all(losses[1:] > 0)
    assert thinshell.fem2d.total_loss(sol) == pytest.approx(np.sum(grid.dt * losses[1:]))

def test_shield_free(geometry, steel):
    bare = thinshell.mesh2d.generate_mesh(replace(geometry, include_shield=False), 0.02, 0.1)
    sol = thinshell.fem2d.solve_ts(bare, None, steel, SourceSpec.sinusoid(6000, 50), mode='harmonic')
    assert sol.dofs == len(bare.nodes)
    assert thinshell.fem2d.total_loss(sol) == 0
    circulation = thinshell.fem2d.circulation(sol, loop_around_plus_wire())
    assert circulation[0] == pytest.approx(6000, rel=5e-3)

def test_topology_errors(geometry, mesh, sheet, steel):
    basis = build_basis(sheet, 50, 1)
    source = SourceSpec.sinusoid(6000, 50)
    volume = thinshell.mesh2d.generate_mesh(replace(geometry, resolve_shield_volume=True), 0.02, 0.1,
                                            through_thickness_layers=2)
    with pytest.raises(TopologyError):
        thinshell.fem2d.solve_ts(volume, basis, steel, source, mode='harmonic')

    bare = thinshell.mesh2d.generate_mesh(replace(geometry, include_shield=False), 0.02, 0.1)
    with pytest.raises(TopologyError):
        thinshell.fem2d.solve_ts(bare, basis, steel, source, mode='harmonic')

    with pytest.raises(ValueError):
        thinshell.fem2d.solve_ts(mesh, None, steel, source, mode='harmonic')

    with pytest.raises(TopologyError):
        thinshell.fem2d.solve_ts(replace(mesh, cut_paths=()), basis, steel, source, mode='harmonic')

def test_invalid_runs(mesh, sheet, steel):
    basis = build_basis(sheet, 50, 1)
    iron = MaterialModel.saturable(mu_r0=12500, mu0_m0=1.31, sigma=1e6)
    with pytest.raises(ValueError):
        thinshell.fem2d.solve_ts(mesh, basis, iron, SourceSpec.sinusoid(6000, 50), mode='harmonic')
    with pytest.raises(ValueError):
        thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.pulse(6000, 1e-5), mode='harmonic')
    with pytest.raises(ValueError):
        thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.sinusoid(6000, 50))
    with pytest.raises(ValueError):
        thinshell.fem2d.solve_ts(mesh, basis, steel, SourceSpec.sinusoid(6000, 50), mode='static')

def test_nonlinear_newton(mesh, sheet):
    iron = MaterialModel.saturable(mu_r0=12500, mu0_m0=1.31, sigma=1e6)
    basis = build_basis(SheetSpec.from_relative(1e-3, 1000, 1e6), 1000, 2)
    source = SourceSpec.sinusoid(6000, 1000, phase=-np.pi / 2)
    sol = thinshell.fem2d.solve_ts(mesh, basis, iron, source, grid=TimeGrid(1e-3, 40))
    assert np.all(sol.converged)
    assert sol.max_iterations <= 12
    assert thinshell.fem2d.total_loss(sol) > 0
