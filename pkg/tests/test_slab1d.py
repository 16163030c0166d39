import thinshell
from thinshell.hyperbasis import SheetSpec, build_basis, classical_ibc
from thinshell.materials import MaterialModel
from thinshell.numerics import NewtonSettings, TimeGrid
from thinshell.slab1d import SlabBC, SlabSystem

import numpy as np
import pytest


################################################################################
## Fixtures

SHIELDS = {
    'shield1': (1.0, 1e6, 50.0),
    'shield2': (1000.0, 1e7, 50.0),
    'shield3': (1000.0, 1e6, 5000.0),
    'shield4': (100.0, 1e7, 5000.0),
}

DEPTHS = np.linspace(-0.5e-3, 0.5e-3, 9)

@pytest.fixture
def sheet():
    return SheetSpec.from_relative(1e-3, 1000, 1e6)

def frequency_for_ratio(sheet, ratio):
    delta = ratio * sheet.thickness
    return 2 / (sheet.mu * sheet.sigma * 2 * np.pi * delta**2)

def pulse_history_difference(n):
    sheet = SheetSpec.from_relative(1e-3, 1000, 1e6)
    material = MaterialModel.linear(1000, 1e6)
    grid = TimeGrid(50e-6, 120)
    bc = SlabBC.pulse(1.0, 0.6, 20e-6)
    system = SlabSystem.from_basis(build_basis(sheet, 5000, n), material)
    history = thinshell.slab1d.solve_transient_spectral(system, bc, grid)
    oracle = thinshell.slab1d.reference_slab_fd(sheet, material, bc, grid, cells=4096)
    return thinshell.fem2d.relative_difference(history.field(DEPTHS), oracle.at(DEPTHS))


################################################################################
## Elementary matrices

def test_assemble_SM(sheet):
    basis = build_basis(sheet, 5000, 3)
    S, M = thinshell.slab1d.assemble_SM(basis)
    assert S.shape == (12, 12)
    assert S == pytest.approx(S.T)
    assert M == pytest.approx(M.T)
    assert np.all(np.linalg.eigvalsh(M) > 0)
    assert np.all(np.linalg.eigvalsh(S) > -1e-9 * np.max(np.abs(S)))

def test_assemble_SM_hat_limit(sheet):
    basis = build_basis(sheet, frequency_for_ratio(sheet, 1000), 1)
    S, M = thinshell.slab1d.assemble_SM(basis)
    d = sheet.thickness
    t = basis.trace_indices
    assert M[np.ix_(t, t)] == pytest.approx(d * np.array([[1 / 3, 1 / 6], [1 / 6, 1 / 3]]), rel=1e-3)
    assert S[np.ix_(t, t)] == pytest.approx(np.array([[1, -1], [-1, 1]]) / d, rel=1e-3)

def test_assemble_SM_invalid(sheet):
    with pytest.raises(ValueError):
        thinshell.slab1d.assemble_SM(build_basis(sheet, 5000, 1), quad_order=1)


################################################################################
## Harmonic regime

@pytest.mark.parametrize('ratio', [0.1, 1, 10, 1000])
def test_jump_coefficients_match_ibc(sheet, ratio):
    f = frequency_for_ratio(sheet, ratio)
    system = SlabSystem.from_basis(build_basis(sheet, f, 1))
    jumps = thinshell.slab1d.harmonic_jump_coefficients(system, f)
    ibc = classical_ibc(sheet, f)
    assert jumps.eta_h == pytest.approx(ibc.eta_h, rel=1e-8)
    assert jumps.eta_e == pytest.approx(ibc.eta_e, rel=1e-8)

def test_jump_coefficients_thin_limit(sheet):
    f = frequency_for_ratio(sheet, 1000)
    system = SlabSystem.from_basis(build_basis(sheet, f, 1))
    jumps = thinshell.slab1d.harmonic_jump_coefficients(system, f)
    d = sheet.thickness
    assert jumps.eta_e == pytest.approx(sheet.sigma * d / 2, rel=1e-3)
    assert jumps.eta_h == pytest.approx(-1j * 2 * np.pi * f * sheet.mu * d / 2, rel=1e-3)

def test_impedance_from_admittance():
    Y = np.array([[3.0, -1.0], [-1.0, 3.0]])
    ibc = thinshell.slab1d.impedance_from_admittance(Y, 50)
    assert ibc.eta_e == pytest.approx(0.25)
    assert ibc.eta_h == pytest.approx(-2.0)
    assert ibc.frequency == 50

def test_harmonic_spectral_matches_analytic(sheet):
    f = 5000
    system = SlabSystem.from_basis(build_basis(sheet, f, 1))
    bc = SlabBC.harmonic(1.0, 0.5, f, phase_minus=0.3)
    coefficients = thinshell.slab1d.solve_harmonic_spectral(system, bc)
    field = coefficients @ system.basis.theta(DEPTHS)
    exact = thinshell.slab1d.analytic_harmonic(sheet, bc, DEPTHS)
    assert field == pytest.approx(exact, rel=1e-7, abs=1e-9)

    loss = 0.5 * sheet.rho * np.real(coefficients.conj() @ system.S @ coefficients)
    assert loss == pytest.approx(thinshell.slab1d.analytic_harmonic_loss(sheet, bc), rel=1e-6)

@pytest.mark.parametrize('name', list(SHIELDS))
def test_analytic_matches_fd_oracle(name):
    mu_r, sigma, f = SHIELDS[name]
    sheet = SheetSpec.from_relative(1e-3, mu_r, sigma)
    bc = SlabBC.harmonic(1.0, 0.6, f, phase_minus=0.5)
    y, h = thinshell.slab1d.reference_slab_fd_harmonic(sheet, bc, cells=4096)
    exact = thinshell.slab1d.analytic_harmonic(sheet, bc, DEPTHS)
    approx = np.interp(DEPTHS, y, h.real) + 1j * np.interp(DEPTHS, y, h.imag)
    assert np.max(np.abs(approx - exact)) < 5e-4 * np.max(np.abs(exact))

def test_harmonic_requires_harmonic_bc(sheet):
    system = SlabSystem.from_basis(build_basis(sheet, 5000, 1))
    bc = SlabBC.pulse(1.0, 1.0, 20e-6)
    with pytest.raises(ValueError):
        thinshell.slab1d.solve_harmonic_spectral(system, bc)
    with pytest.raises(ValueError):
        thinshell.slab1d.analytic_harmonic(sheet, bc, 0.0)


################################################################################
## Transient regime

def test_pulse_matches_fd_oracle():
    differences = [pulse_history_difference(n) for n in [1, 2, 3]]
    assert differences[2] < 2.0
    assert differences[1] <= differences[0]
    assert differences[2] <= differences[1]

def test_transient_energy_balance(sheet):
    grid = TimeGrid(50e-6, 120)
    system = SlabSystem.from_basis(build_basis(sheet, 5000, 2))
    history = thinshell.slab1d.solve_transient_spectral(system, SlabBC.pulse(1.0, 0.6, 20e-6), grid)
    loss = thinshell.slab1d.energy_loss(system, history)
    influx = np.sum(np.diff(history.times) * thinshell.slab1d.boundary_influx(system, history)[1:])
    h = history.coefficients[-1]
    stored = 0.5 * system.mu * h @ system.M @ h
    assert loss > 0
    assert influx >= loss + stored - 1e-9 * influx

def test_transient_faces_follow_bc(sheet):
    grid = TimeGrid(50e-6, 40)
    system = SlabSystem.from_basis(build_basis(sheet, 5000, 2))
    bc = SlabBC.pulse(2.0, -1.0, 20e-6)
    history = thinshell.slab1d.solve_transient_spectral(system, bc, grid)
    faces = history.field([0.5e-3, -0.5e-3])
    assert faces[:, 0] == pytest.approx(bc.sample(grid)[0], abs=1e-12)
    assert faces[:, 1] == pytest.approx(bc.sample(grid)[1], abs=1e-12)
    assert faces[-1] == pytest.approx([2.0, -1.0])

def test_zero_drive_gives_zero_field(sheet):
    grid = TimeGrid(50e-6, 10)
    system = SlabSystem.from_basis(build_basis(sheet, 5000, 2))
    history = thinshell.slab1d.solve_transient_spectral(system, SlabBC.pulse(0.0, 0.0, 20e-6), grid)
    assert np.all(history.coefficients == 0)
    assert thinshell.slab1d.energy_loss(system, history) == 0

def test_history_to_frame(sheet):
    grid = TimeGrid(50e-6, 10)
    system = SlabSystem.from_basis(build_basis(sheet, 5000, 1))
    history = thinshell.slab1d.solve_transient_spectral(system, SlabBC.pulse(1.0, 1.0, 20e-6), grid)
    frame = history.to_frame(system)
    assert list(frame.columns) == ['t', 'c1+', 's1+', 'c1-', 's1-', 'loss']
    assert len(frame) == 11
    assert frame['loss'].iloc[0] == 0

def test_bc_sample_mismatch():
    grid = TimeGrid(1.0, 10)
    bc = SlabBC.waveforms(np.zeros(5), None)
    with pytest.raises(ValueError):
        bc.sample(grid)

def test_fd_oracle_needs_cells(sheet):
    material = MaterialModel.linear(1000, 1e6)
    with pytest.raises(ValueError):
        thinshell.slab1d.reference_slab_fd(sheet, material, SlabBC.pulse(1, 1, 1e-5),
                                           TimeGrid(1e-5, 4), cells=8)


################################################################################
## Nonlinear regime

def nonlinear_setup(steps):
    material = MaterialModel.saturable(mu_r0=12500, mu0_m0=1.31, sigma=1e6)
    sheet = SheetSpec.from_relative(1e-3, 1000, 1e6)
    grid = TimeGrid(1e-3, steps)
    phase = -np.pi / 2
    bc = SlabBC.waveforms(lambda t: 6000 * np.cos(2 * np.pi * 1000 * t + phase),
                          lambda t: 4000 * np.cos(2 * np.pi * 1000 * t + phase))
    return material, sheet, grid, bc

def test_nonlinear_newton_converges():
    material, sheet, grid, bc = nonlinear_setup(60)
    basis = build_basis(sheet, 1000, 2)
    history = thinshell.slab1d.solve_transient_nonlinear(basis, material, bc, grid)
    assert np.all(history.converged)
    assert np.max(history.iterations) <= 12
    faces = history.field([0.5e-3])[:, 0]
    assert faces == pytest.approx(bc.sample(grid)[0], abs=1e-9)

def test_fd_oracle_flags_newton_failure():
    material, sheet, grid, bc = nonlinear_setup(10)
    with pytest.warns(UserWarning, match='did not converge'):
        oracle = thinshell.slab1d.reference_slab_fd(sheet, material, bc, grid, cells=64,
                                                    newton=NewtonSettings(max_iterations=1))
    assert oracle.converged.shape == (11,)
    assert oracle.converged[0]
    assert not np.all(oracle.converged[1:])
    assert np.all(oracle.iterations[1:] <= 1)

@pytest.mark.slow
def test_nonlinear_matches_fd_oracle():
    material, sheet, grid, bc = nonlinear_setup(120)
    basis = build_basis(sheet, 1000, 3)
    history = thinshell.slab1d.solve_transient_nonlinear(basis, material, bc, grid)
    oracle = thinshell.slab1d.reference_slab_fd(sheet, material, bc, grid, cells=2048)
    assert np.max(oracle.iterations) <= 12
    difference = thinshell.fem2d.relative_difference(history.field(DEPTHS), oracle.at(DEPTHS))
    assert difference < 2.0
