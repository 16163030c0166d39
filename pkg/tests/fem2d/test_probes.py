import thinshell
from thinshell.fem2d import ProbeSeries, ProbeSpec, SourceSpec, UndefinedMetricError
from thinshell.hyperbasis import SheetSpec, build_basis
from thinshell.materials import MaterialModel
from thinshell.mesh2d import GeometrySpec
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
def basis():
    return build_basis(SheetSpec.from_relative(1e-3, 1000, 1e6), 50, 2)

@pytest.fixture
def harmonic(mesh, basis):
    return thinshell.fem2d.solve_ts(mesh, basis, MaterialModel.linear(1000, 1e6),
                                    SourceSpec.sinusoid(6000, 50), mode='harmonic')

@pytest.fixture
def transient(mesh, basis):
    return thinshell.fem2d.solve_ts(mesh, basis, MaterialModel.linear(1000, 1e6),
                                    SourceSpec.pulse(6000, 20e-6), grid=TimeGrid(50e-6, 8))


################################################################################
## Metrics

def test_relative_difference():
    relative_difference = thinshell.fem2d.relative_difference
    assert relative_difference([1.5, 3.0], [1.0, 2.0]) == pytest.approx(50.0)
    assert relative_difference([1.0, 2.0], [1.0, 2.0]) == 0.0
    assert relative_difference([1j, 0.0], [1.0, 0.0]) == pytest.approx(100 * np.sqrt(2))

    with pytest.raises(UndefinedMetricError):
        relative_difference([1.0, 2.0], [0.0, 0.0])
    with pytest.raises(ValueError):
        relative_difference([1.0, 2.0, 3.0], [1.0, 2.0])

def test_relative_difference_series():
    a = ProbeSeries('P1', 'point', 'hy', 'time', np.arange(3.0), np.array([1.0, 2.0, 2.0]), np.zeros((1, 2)))
    b = replace(a, values=np.array([1.0, 2.0, 4.0]))
    assert thinshell.fem2d.relative_difference(a, b) == pytest.approx(100 * 2 / np.sqrt(21))

def test_dof_count(mesh, harmonic):
    assert thinshell.fem2d.dof_count(harmonic) == harmonic.dofs
    assert thinshell.fem2d.dof_count(mesh, n=3) == thinshell.mesh2d.estimate_dofs(mesh, 3)
    with pytest.raises(TypeError):
        thinshell.fem2d.dof_count('mesh')


################################################################################
## Probes

def test_probe_line(harmonic):
    series = thinshell.fem2d.probe_line(harmonic, ((-0.1, 0.1), (0.1, 0.1)), 'b', samples=11, name='BB')
    assert series.name == 'BB'
    assert series.kind == 'line'
    assert series.coordinate == pytest.approx(np.linspace(0.0, 0.2, 11))
    assert series.points[:, 1] == pytest.approx(np.full(11, 0.1))
    assert not series.is_complex
    assert np.all(series.values > 0)

    hy = thinshell.fem2d.probe_line(harmonic, ((-0.1, 0.1), (0.1, 0.1)), 'hy', samples=11)
    assert hy.is_complex

    with pytest.raises(ValueError):
        thinshell.fem2d.probe_line(harmonic, ((0, 0.1), (0, 0.2)), samples=1)
    with pytest.raises(ValueError):
        thinshell.fem2d.probe_line(harmonic, ((0, 0.1), (0, 0.2)), component='jz')
    with pytest.raises(ValueError):
        thinshell.fem2d.probe_line(harmonic, ((0, 0.1), (0, 2.0)))

def test_probe_point(harmonic, transient):
    phasor = thinshell.fem2d.probe_point(harmonic, (0.0, 0.1), 'hy', name='P1')
    assert phasor.coordinate_name == 'frequency'
    assert phasor.coordinate == pytest.approx([50.0])
    assert phasor.values.shape == (1,)
    assert phasor.is_complex

    series = thinshell.fem2d.probe_point(transient, (0.0, 0.1), 'hy')
    assert series.coordinate_name == 'time'
    assert series.coordinate == pytest.approx(transient.times)
    assert series.values.shape == (9,)
    assert series.values[0] == 0

def test_probe_depth_traces(harmonic, basis):
    x = 0.05
    series = thinshell.fem2d.probe_depth(harmonic, x, 'hx', samples=11)
    assert series.coordinate == pytest.approx(np.linspace(-0.5e-3, 0.5e-3, 11))
    assert series.points[:, 0] == pytest.approx(np.full(11, x))

    discretization = harmonic.discretization
    coefficients = discretization.node_coefficients(harmonic.values, harmonic.currents)[0]
    chain = discretization.chain_x
    plus, minus = basis.trace_indices

    def interpolate(column):
        return np.interp(x, chain, column.real) + 1j * np.interp(x, chain, column.imag)

    assert series.values[-1] == pytest.approx(interpolate(coefficients[:, plus]))
    assert series.values[0] == pytest.approx(interpolate(coefficients[:, minus]))

def test_probe_depth_needs_shield(geometry):
    bare = thinshell.mesh2d.generate_mesh(replace(geometry, include_shield=False), 0.02, 0.1)
    sol = thinshell.fem2d.solve_ts(bare, None, MaterialModel.linear(1000, 1e6),
                                   SourceSpec.sinusoid(6000, 50), mode='harmonic')
    with pytest.raises(ValueError):
        thinshell.fem2d.probe_depth(sol, 0.05)

def test_to_frame(harmonic, transient):
    frame = thinshell.fem2d.probe_point(harmonic, (0.0, 0.1), 'hy').to_frame()
    assert list(frame.columns) == ['frequency', 'value', 'imag']

    frame = thinshell.fem2d.probe_point(transient, (0.0, 0.1), 'hy').to_frame()
    assert list(frame.columns) == ['time', 'value']
    assert len(frame) == 9

    frame = thinshell.fem2d.probe_depth(transient, 0.05, samples=5).to_frame()
    assert list(frame.columns) == ['y', 'value']


################################################################################
## Probe specifications

def test_standard_probes(geometry):
    probes = thinshell.fem2d.standard_probes(geometry)
    assert list(probes) == ['AA', 'BB', 'CC', 'P1', 'P2', 'P3']
    assert probes['P1'].location == (0.0, 0.10)
    assert probes['P2'].location == pytest.approx(0.05)
    assert probes['P3'].location == pytest.approx(0.098)
    assert probes['BB'].location == ((-0.1, 0.1), (0.1, 0.1))
    assert probes['CC'].location[0][0] == pytest.approx(0.098)

def test_probe_spec(harmonic):
    spec = ProbeSpec('BB', 'line', 'b', ((-0.1, 0.1), (0.1, 0.1)))
    series = spec.evaluate(harmonic, samples=5)
    assert series.name == 'BB'
    assert len(series.values) == 5

    depth = ProbeSpec('P2', 'depth', 'hx', 0.05).evaluate(harmonic)
    assert len(depth.values) == 21

    with pytest.raises(ValueError):
        ProbeSpec('X', 'surface', 'b', ())
    with pytest.raises(ValueError):
        ProbeSpec('X', 'line', 'ez', ())
