"""
======================================================
One-dimensional slab solvers (:mod:`thinshell.slab1d`)
======================================================

.. currentmodule:: thinshell.slab1d

Flux diffusion across a sheet of thickness :math:`d`,

.. math::

    \\partial_t (\\mu h) = \\rho \\, \\partial_y^2 h,
    \\qquad -d/2 \\le y \\le d/2,

with the tangential field prescribed on both faces. The spectral solver
expands :math:`h` in a :class:`~thinshell.hyperbasis.BasisSet` and integrates
the semi-discrete system :math:`\\rho S h + \\mu M \\dot h = 0` with implicit
Euler. The face values are the two first-cosine coefficients, so boundary
conditions are imposed by fixing those coefficients.

A finite-difference solver on a fine grid and the closed-form harmonic
solution serve as references.

.. rubric:: Spectral model

.. autosummary::
    :toctree: generated/

    assemble_SM
    solve_harmonic_spectral
    solve_transient_spectral
    solve_transient_nonlinear
    harmonic_jump_coefficients
    impedance_from_admittance
    instantaneous_loss
    energy_loss
    boundary_influx

.. rubric:: References

.. autosummary::
    :toctree: generated/

    analytic_harmonic
    analytic_harmonic_loss
    reference_slab_fd
    reference_slab_fd_harmonic

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    SlabBC
    SlabSystem
    SlabHistory
    FDHistory
"""

from dataclasses import dataclass, field, replace
import logging
import numpy as np
import pandas as pd
import scipy.linalg
import scipy.sparse
import warnings

from thinshell import materials
from thinshell.hyperbasis import ImpedanceCoefficients, psi, dpsi
from thinshell.materials import MaterialModel
from thinshell.numerics import (NewtonSettings, composite_rule, factorize,
                                gauss_legendre, newton_solve)
from thinshell.waveforms import half_cosine_ramp

logger = logging.getLogger(__name__)


@dataclass
class SlabBC:
    """
    Tangential field on the two faces of the slab.

    Either a harmonic condition (phasors `h_plus`, `h_minus` at `frequency`)
    or a pair of waveforms. A waveform is a callable of time or an array
    sampled on the :class:`~thinshell.numerics.TimeGrid` of the run.

    Attributes
    ----------
    h_plus, h_minus : complex
        Phasors on the faces y = +d/2 and y = -d/2 (A/m).
    frequency : float
        Frequency of the harmonic condition (Hz).
    waveform_plus, waveform_minus : callable or ndarray
        Time-domain values on the faces (A/m).
    """

    h_plus: complex = 0j
    h_minus: complex = 0j
    frequency: float = None
    waveform_plus: object = field(default=None, repr=False)
    waveform_minus: object = field(default=None, repr=False)

    @classmethod
    def harmonic(cls, hat_plus, hat_minus, frequency, phase_plus=0.0, phase_minus=0.0):
        """
        Harmonic condition from magnitudes and phases.
        """
        if not frequency > 0:
            raise ValueError(f'Frequency must be positive (got {frequency}).')
        return cls(h_plus=hat_plus * np.exp(1j * phase_plus),
                   h_minus=hat_minus * np.exp(1j * phase_minus),
                   frequency=frequency)

    @classmethod
    def waveforms(cls, plus, minus):
        return cls(waveform_plus=plus, waveform_minus=minus)

    @classmethod
    def pulse(cls, amplitude_plus, amplitude_minus, rise_time):
        """
        Half-cosine ramps to constant face values.
        """
        return cls.waveforms(
            lambda t: amplitude_plus * half_cosine_ramp(t, rise_time),
            lambda t: amplitude_minus * half_cosine_ramp(t, rise_time))

    @property
    def is_harmonic(self):
        return self.frequency is not None

    def sample(self, grid):
        """
        Face values at the grid times.

        Returns
        -------
        ndarray, shape (2, steps + 1)
            Rows are the + and - faces.
        """
        t = grid.times
        if self.is_harmonic:
            rot = np.exp(2j * np.pi * self.frequency * t)
            return np.vstack([(self.h_plus * rot).real, (self.h_minus * rot).real])

        def values(w):
            if w is None:
                return np.zeros_like(t)
            if callable(w):
                return np.broadcast_to(np.asarray(w(t), dtype=np.float64), t.shape).copy()
            w = np.asarray(w, dtype=np.float64)
            if w.shape != t.shape:
                raise ValueError(
                    f'Waveform has {w.size} samples but the time grid has {t.size}.')
            return w

        return np.vstack([values(self.waveform_plus), values(self.waveform_minus)])


def assemble_SM(basis, quad_order=20):
    """
    Elementary stiffness and mass matrices of a basis.

    Parameters
    ----------
    basis : BasisSet
        Shape functions.
    quad_order : int, optional
        Gauss-Legendre points per panel, at least 2.

    Returns
    -------
    S, M : ndarray, shape (4n, 4n)
        :math:`S_{pq} = \\int \\theta_p' \\theta_q' dy` (1/m) and
        :math:`M_{pq} = \\int \\theta_p \\theta_q dy` (m).

    Notes
    -----
    The thickness is split into panels about half the smallest skin depth
    wide, so boundary layers of high-frequency members are resolved.
    """
    if quad_order < 2:
        raise ValueError(f'Quadrature order must be >= 2 (got {quad_order}).')
    d = basis.sheet.thickness
    panels = max(int(np.ceil(2 * d / np.min(basis.deltas))), int(np.ceil(20 / quad_order)), 1)
    y, w = composite_rule(-0.5 * d, 0.5 * d, panels, quad_order)
    theta = basis.theta(y)
    dtheta = basis.dtheta(y)
    S = (dtheta * w) @ dtheta.T
    M = (theta * w) @ theta.T
    return 0.5 * (S + S.T), 0.5 * (M + M.T)


@dataclass
class SlabSystem:
    """
    Assembled spectral system of a slab.

    Attributes
    ----------
    basis : BasisSet
        Shape functions.
    S, M : ndarray
        Elementary matrices from :func:`assemble_SM`.
    material : MaterialModel
        Slab material. Defaults to a linear material with the basis
        parametrisation.
    """

    basis: object
    S: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    material: MaterialModel = None

    def __post_init__(self):
        if self.material is None:
            sheet = self.basis.sheet
            self.material = MaterialModel.linear(mu_r=sheet.mu_r, sigma=sheet.sigma)

    @classmethod
    def from_basis(cls, basis, material=None, quad_order=20):
        S, M = assemble_SM(basis, quad_order)
        return cls(basis=basis, S=S, M=M, material=material)

    @property
    def rho(self):
        return self.material.rho

    @property
    def mu(self):
        if not self.material.is_linear:
            raise ValueError('A linear material is required.')
        return self.material.mu_initial

    @property
    def traces(self):
        return self.basis.trace_indices

    @property
    def internal(self):
        return self.basis.internal_indices


@dataclass
class SlabHistory:
    """
    Coefficient history of a spectral slab run.

    Attributes
    ----------
    times : ndarray
        Grid times (s).
    coefficients : ndarray, shape (steps + 1, 4n)
        Basis coefficients (A/m) per step.
    basis : BasisSet
        Shape functions.
    iterations : ndarray
        Newton iterations per step (nonlinear runs only).
    converged : ndarray of bool
        Newton convergence per step (nonlinear runs only).
    """

    times: np.ndarray
    coefficients: np.ndarray = field(repr=False)
    basis: object = field(repr=False)
    iterations: np.ndarray = field(default=None, repr=False)
    converged: np.ndarray = field(default=None, repr=False)

    def field(self, y):
        """
        Field :math:`h(y, t)` at positions `y`, shape ``(steps + 1, len(y))``.
        """
        return self.coefficients @ self.basis.theta(y)

    def to_frame(self, system):
        """
        Per-step table with columns t, one column per coefficient, and loss.
        """
        data = pd.DataFrame(self.coefficients, columns=self.basis.labels)
        data.insert(0, 't', self.times)
        data['loss'] = instantaneous_loss(system, self.coefficients)
        return data


def _dirichlet_solver(matrix, traces, internal):
    solver = factorize(matrix[np.ix_(internal, internal)])
    coupling = matrix[np.ix_(internal, traces)]
    return solver, coupling


def solve_harmonic_spectral(system, bc):
    """
    Phasor coefficients of the spectral system under a harmonic condition.

    Parameters
    ----------
    system : SlabSystem
        Linear spectral system.
    bc : SlabBC
        Harmonic face values.

    Returns
    -------
    ndarray of complex, shape (4n,)
    """
    if not bc.is_harmonic:
        raise ValueError('A harmonic boundary condition is required.')
    omega = 2 * np.pi * bc.frequency
    K = system.rho * system.S + 1j * omega * system.mu * system.M
    traces, internal = system.traces, system.internal
    coefficients = np.zeros(system.basis.size, dtype=np.complex128)
    coefficients[traces] = [bc.h_plus, bc.h_minus]
    if internal.size:
        solver, coupling = _dirichlet_solver(K, traces, internal)
        coefficients[internal] = solver.solve(-coupling @ coefficients[traces])
    return coefficients


def harmonic_jump_coefficients(system, frequency):
    """
    Impedance coefficients obtained by eliminating the interior of the slab.

    The interior coefficients of the harmonic system are condensed onto the
    two face values. The resulting 2x2 admittance maps the face fields
    :math:`(h^+, h^-)` to :math:`(e^+, -e^-)` with :math:`e = \\rho \\partial_y h`,
    from which the jump coefficients follow.

    Parameters
    ----------
    system : SlabSystem
        Linear spectral system.
    frequency : float
        Frequency (Hz).

    Returns
    -------
    ImpedanceCoefficients
    """
    omega = 2 * np.pi * frequency
    K = system.rho * system.S + 1j * omega * system.mu * system.M
    traces, internal = system.traces, system.internal
    Y = K[np.ix_(traces, traces)]
    if internal.size:
        solver, coupling = _dirichlet_solver(K, traces, internal)
        Y = Y - coupling.T @ solver.solve(coupling)
    return impedance_from_admittance(Y, frequency)


def impedance_from_admittance(Y, frequency):
    """
    Jump coefficients from a 2x2 face admittance.

    `Y` maps :math:`(h^+, h^-)` to :math:`(e^+, -e^-)`. The diagonal and
    off-diagonal pairs are averaged.
    """
    Y = np.asarray(Y)
    eta_e = 2 / ((Y[0, 0] - Y[0, 1]) + (Y[1, 1] - Y[1, 0]))
    eta_h = -0.5 * ((Y[0, 0] + Y[0, 1]) + (Y[1, 0] + Y[1, 1]))
    return ImpedanceCoefficients(eta_h=complex(eta_h), eta_e=complex(eta_e), frequency=frequency)


def solve_transient_spectral(system, bc, grid, initial=None):
    """
    Implicit Euler integration of the linear spectral system.

    Each step solves :math:`(\\rho S + \\mu M/\\Delta t) h^k = \\mu M h^{k-1}/\\Delta t`
    with the two face coefficients set to the boundary values.

    Parameters
    ----------
    system : SlabSystem
        Linear spectral system.
    bc : SlabBC
        Face values, sampled on `grid`.
    grid : TimeGrid
        Time grid.
    initial : array_like, optional
        Coefficients at t = 0. Zero by default.

    Returns
    -------
    SlabHistory
    """
    size = system.basis.size
    dt = grid.dt
    faces = bc.sample(grid)
    mass = system.mu * system.M / dt
    K = system.rho * system.S + mass
    traces, internal = system.traces, system.internal
    solver, coupling = _dirichlet_solver(K, traces, internal)

    h = np.zeros((grid.steps + 1, size))
    if initial is not None:
        h[0] = initial
    for k in range(1, grid.steps + 1):
        h[k, traces] = faces[:, k]
        rhs = (mass @ h[k - 1])[internal] - coupling @ faces[:, k]
        h[k, internal] = solver.solve(rhs)
    return SlabHistory(times=grid.times, coefficients=h, basis=system.basis)


def solve_transient_nonlinear(basis, material, bc, grid, newton=None, quad_points=20, initial=None):
    """
    Implicit Euler integration with a saturable permeability.

    Each step solves, by Newton-Raphson on the interior coefficients,

    .. math::

        \\rho S h^k + \\frac{1}{\\Delta t} \\int_{-d/2}^{d/2}
        \\left(b(h^k) - b(h^{k-1})\\right) \\theta \\, dy = 0,
        \\qquad b(h) = \\mu(|h|) h,

    with the integral evaluated by Gauss-Legendre quadrature through the
    thickness on every iteration.

    Parameters
    ----------
    basis : BasisSet
        Shape functions, usually parametrised at an operating permeability.
    material : MaterialModel
        Slab material.
    bc : SlabBC
        Face values, sampled on `grid`.
    grid : TimeGrid
        Time grid.
    newton : NewtonSettings, optional
        Stopping rule for each step.
    quad_points : int, optional
        Quadrature points through the thickness.
    initial : array_like, optional
        Coefficients at t = 0. Zero by default.

    Returns
    -------
    SlabHistory
        Includes per-step iteration counts and convergence flags. Steps that
        did not converge are reported with a warning.
    """
    if newton is None:
        newton = NewtonSettings()
    d = basis.sheet.thickness
    S, _ = assemble_SM(basis)
    rule = gauss_legendre(quad_points)
    y, w = rule.on_interval(-0.5 * d, 0.5 * d)
    theta = basis.theta(y)
    rho = material.rho
    dt = grid.dt
    faces = bc.sample(grid)
    traces, internal = basis.trace_indices, basis.internal_indices

    def flux(h_nodes):
        return materials.permeability(material, np.abs(h_nodes)) * h_nodes

    h = np.zeros((grid.steps + 1, basis.size))
    if initial is not None:
        h[0] = initial
    iterations = np.zeros(grid.steps + 1, dtype=int)
    converged = np.ones(grid.steps + 1, dtype=bool)

    for k in range(1, grid.steps + 1):
        b_prev = flux(h[k - 1] @ theta)
        current = h[k - 1].copy()
        current[traces] = faces[:, k]

        def residual_and_jacobian(x):
            current[internal] = x
            h_nodes = current @ theta
            r = rho * S @ current + theta @ (w * (flux(h_nodes) - b_prev)) / dt
            mu_d = materials.incremental_permeability(material, h_nodes)
            J = rho * S + (theta * (w * mu_d / dt)) @ theta.T
            return r[internal], J[np.ix_(internal, internal)]

        scale = np.linalg.norm(rho * S @ current) + np.linalg.norm(theta @ (w * np.abs(b_prev))) / dt
        settings = replace(newton, absolute_residual_tol=max(newton.absolute_residual_tol, 1e-13 * scale))
        x, iterations[k], converged[k] = newton_solve(residual_and_jacobian, current[internal], settings)
        current[internal] = x
        h[k] = current
        logger.debug('step %d: %d newton iterations', k, iterations[k])

    if not np.all(converged):
        warnings.warn(f'Newton iterations did not converge in {np.sum(~converged)} '
                      f'of {grid.steps} steps.')
    return SlabHistory(times=grid.times, coefficients=h, basis=basis,
                       iterations=iterations, converged=converged)


def instantaneous_loss(system, coefficients):
    """
    Joule loss per unit sheet area, :math:`\\rho h^T S h` (W/m^2).

    Parameters
    ----------
    system : SlabSystem
        Provides S and the resistivity.
    coefficients : ndarray or SlabHistory
        One coefficient vector or a history of them.

    Returns
    -------
    float or ndarray
        Loss per coefficient vector.
    """
    if isinstance(coefficients, SlabHistory):
        coefficients = coefficients.coefficients
    h = np.asarray(coefficients)
    return system.rho * np.einsum('...i,ij,...j->...', h, system.S, h).real


def energy_loss(system, history):
    """
    Energy dissipated per unit area over a run (J/m^2).

    The step losses are summed with the step widths, the quadrature
    consistent with implicit Euler.
    """
    loss = instantaneous_loss(system, history)
    return np.sum(np.diff(history.times) * loss[1:])


def boundary_influx(system, history):
    """
    Power entering the slab through its faces per step (W/m^2).

    The reactions of the two face rows of the discrete system are the
    electric fields :math:`\\pm e` on the faces. The influx is their product
    with the face values.

    Returns
    -------
    ndarray, shape (steps + 1,)
        Influx per step; zero at the initial time.
    """
    h = history.coefficients
    dt = np.diff(history.times)[:, None]
    reaction = system.rho * h[1:] @ system.S + system.mu * (h[1:] - h[:-1]) @ system.M / dt
    traces = system.traces
    influx = np.sum(reaction[:, traces] * h[1:, traces], axis=1)
    return np.concatenate([[0.0], influx])


def analytic_harmonic(sheet, bc, y):
    """
    Closed-form harmonic field :math:`h^+ \\psi^+(y) + h^- \\psi^-(y)`.

    Parameters
    ----------
    sheet : SheetSpec
        Sheet parameters.
    bc : SlabBC
        Harmonic face values.
    y : float or array_like
        Positions (m).

    Returns
    -------
    complex or ndarray
        Field phasors (A/m).
    """
    if not bc.is_harmonic:
        raise ValueError('A harmonic boundary condition is required.')
    return bc.h_plus * psi(sheet, bc.frequency, '+', y) + bc.h_minus * psi(sheet, bc.frequency, '-', y)


def analytic_harmonic_loss(sheet, bc, quad_order=20):
    """
    Period-averaged loss per unit area of the closed-form solution (W/m^2),
    :math:`\\frac{\\rho}{2} \\int |\\partial_y h|^2 dy`.
    """
    if not bc.is_harmonic:
        raise ValueError('A harmonic boundary condition is required.')
    d = sheet.thickness
    delta = np.sqrt(2 / (sheet.mu * sheet.sigma * 2 * np.pi * bc.frequency))
    panels = max(int(np.ceil(4 * d / delta)), 1)
    y, w = composite_rule(-0.5 * d, 0.5 * d, panels, quad_order)
    dh = bc.h_plus * dpsi(sheet, bc.frequency, '+', y) + bc.h_minus * dpsi(sheet, bc.frequency, '-', y)
    return 0.5 * sheet.rho * np.sum(w * np.abs(dh)**2)


@dataclass
class FDHistory:
    """
    Nodal history of the finite-difference reference.

    Attributes
    ----------
    y : ndarray
        Node positions (m), from -d/2 to d/2.
    times : ndarray
        Grid times (s).
    values : ndarray, shape (steps + 1, cells + 1)
        Field at the nodes (A/m).
    iterations : ndarray
        Newton iterations per step (nonlinear runs only).
    converged : ndarray of bool
        Newton convergence per step (nonlinear runs only).
    """

    y: np.ndarray
    times: np.ndarray
    values: np.ndarray = field(repr=False)
    iterations: np.ndarray = field(default=None, repr=False)
    converged: np.ndarray = field(default=None, repr=False)

    def at(self, y):
        """
        Linear interpolation of the history to positions `y`.
        """
        y = np.atleast_1d(y)
        return np.stack([np.interp(y, self.y, row) for row in self.values])


def _check_cells(cells):
    if int(cells) != cells or cells < 16:
        raise ValueError(f'The reference needs at least 16 cells (got {cells}).')
    return int(cells)


def _second_difference(cells, spacing):
    main = np.full(cells - 1, -2.0)
    off = np.ones(cells - 2)
    return scipy.sparse.diags([off, main, off], [-1, 0, 1], format='csc') / spacing**2


def reference_slab_fd_harmonic(sheet, bc, cells=4096):
    """
    Complex finite-difference solution of the harmonic slab problem.

    Parameters
    ----------
    sheet : SheetSpec
        Sheet parameters.
    bc : SlabBC
        Harmonic face values.
    cells : int, optional
        Number of cells, at least 16.

    Returns
    -------
    y : ndarray
        Node positions (m).
    h : ndarray of complex
        Nodal phasors (A/m).
    """
    cells = _check_cells(cells)
    if not bc.is_harmonic:
        raise ValueError('A harmonic boundary condition is required.')
    d = sheet.thickness
    y = np.linspace(-0.5 * d, 0.5 * d, cells + 1)
    spacing = d / cells
    omega = 2 * np.pi * bc.frequency
    n = cells - 1
    ab = np.zeros((3, n), dtype=np.complex128)
    ab[0, 1:] = sheet.rho / spacing**2
    ab[1, :] = -2 * sheet.rho / spacing**2 - 1j * omega * sheet.mu
    ab[2, :-1] = sheet.rho / spacing**2
    rhs = np.zeros(n, dtype=np.complex128)
    rhs[0] -= sheet.rho / spacing**2 * bc.h_minus
    rhs[-1] -= sheet.rho / spacing**2 * bc.h_plus
    h = np.empty(cells + 1, dtype=np.complex128)
    h[0], h[-1] = bc.h_minus, bc.h_plus
    h[1:-1] = scipy.linalg.solve_banded((1, 1), ab, rhs)
    return y, h


def reference_slab_fd(sheet, material, bc, grid, cells=4096, newton=None):
    """
    Finite-difference reference for the transient slab problem.

    Second-order central differences in y, implicit Euler in t and the face
    values imposed at the end nodes. Saturable materials are solved with
    Newton-Raphson on the nodal flux :math:`b = \\mu(|h|) h`.

    Parameters
    ----------
    sheet : SheetSpec
        Provides the thickness.
    material : MaterialModel
        Slab material.
    bc : SlabBC
        Face values, sampled on `grid`.
    grid : TimeGrid
        Time grid.
    cells : int, optional
        Number of cells, at least 16.
    newton : NewtonSettings, optional
        Stopping rule for saturable materials.

    Returns
    -------
    FDHistory
    """
    cells = _check_cells(cells)
    d = sheet.thickness
    y = np.linspace(-0.5 * d, 0.5 * d, cells + 1)
    spacing = d / cells
    dt = grid.dt
    rho = material.rho
    faces = bc.sample(grid)
    lap = _second_difference(cells, spacing)

    values = np.zeros((grid.steps + 1, cells + 1))
    iterations = np.zeros(grid.steps + 1, dtype=int)
    converged = np.ones(grid.steps + 1, dtype=bool)
    boundary = np.zeros(cells - 1)

    if material.is_linear:
        mu = material.mu_initial
        eye = scipy.sparse.identity(cells - 1, format='csc')
        solver = factorize(mu / dt * eye - rho * lap)
        for k in range(1, grid.steps + 1):
            boundary[0], boundary[-1] = faces[1, k], faces[0, k]
            rhs = mu / dt * values[k - 1, 1:-1] + rho * boundary / spacing**2
            values[k, 1:-1] = solver.solve(rhs)
            values[k, 0], values[k, -1] = faces[1, k], faces[0, k]
        return FDHistory(y=y, times=grid.times, values=values)

    if newton is None:
        newton = NewtonSettings()

    def flux(h):
        return materials.permeability(material, np.abs(h)) * h

    for k in range(1, grid.steps + 1):
        boundary[0], boundary[-1] = faces[1, k], faces[0, k]
        b_prev = flux(values[k - 1, 1:-1])

        def residual_and_jacobian(x):
            r = (flux(x) - b_prev) / dt - rho * (lap @ x + boundary / spacing**2)
            J = scipy.sparse.diags(materials.incremental_permeability(material, x) / dt) - rho * lap
            return r, J.tocsc()

        scale = np.linalg.norm(b_prev) / dt + rho * np.linalg.norm(boundary) / spacing**2
        settings = replace(newton, absolute_residual_tol=max(newton.absolute_residual_tol, 1e-13 * scale))
        x, iterations[k], converged[k] = newton_solve(residual_and_jacobian, values[k - 1, 1:-1], settings)
        values[k, 1:-1] = x
        values[k, 0], values[k, -1] = faces[1, k], faces[0, k]

    if not np.all(converged):
        warnings.warn(f'Newton iterations did not converge in {np.sum(~converged)} '
                      f'of {grid.steps} steps.')
    return FDHistory(y=y, times=grid.times, values=values, iterations=iterations,
                     converged=converged)
