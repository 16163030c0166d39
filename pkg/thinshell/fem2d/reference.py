"""
Volume-resolved reference solver

.. :currentmodule:`thinshell.fem2d`

Nodal vector potential :math:`A_z` on a mesh that resolves the shield
thickness, with

.. math::

    -\\nabla \\cdot (\\nu \\nabla A) = J_s - \\sigma (\\partial_t A + U)

and :math:`A = 0` on the outer boundary. The uniform term `U` is the
multiplier that keeps the net shield current at zero. The wires are
stranded conductors with uniform current density.
"""

import logging
import numpy as np
import scipy.sparse
import warnings

from thinshell import materials
from thinshell.constants import MU0
from thinshell.fem2d.lib.assembly import (
    ElementGeometry,
    load_vector,
    mass_matrix,
    nodal_gradients,
    stiffness_matrix)
from thinshell.fem2d.solution import Discretization, FieldSolution, validate_run
from thinshell.mesh2d import BoundaryTag, Region, TopologyError, estimate_dofs
from thinshell.numerics import NewtonSettings, factorize, newton_solve

logger = logging.getLogger(__name__)


def _curl(gradients):
    return np.stack([gradients[..., 1], -gradients[..., 0]], axis=-1)


class ReferenceDiscretization(Discretization):
    """
    Field representation of the vector potential model.

    Attributes
    ----------
    shield : ndarray of int
        Shield triangles.
    has_multiplier : bool
        Whether the last unknown is the net-current multiplier.
    frequency : float
        Frequency of harmonic solutions (Hz).
    """

    def __init__(self, mesh, element_geometry):
        self.mesh = mesh
        self.element_geometry = element_geometry
        self.node_count = len(mesh.nodes)
        self.shield = np.flatnonzero(mesh.regions == Region.SHIELD)
        self.has_multiplier = self.shield.size > 0
        self.shield_area = float(element_geometry.areas[self.shield].sum())
        self._shield_mass = mass_matrix(mesh, element_geometry, 1.0, self.shield)
        self._shield_ones = load_vector(mesh, element_geometry, 1.0, self.shield)
        self.frequency = None

    @property
    def dofs(self):
        return self.node_count + int(self.has_multiplier)

    def flux_density(self, elements, values):
        """
        :math:`b = (\\partial_y A, -\\partial_x A)` on triangles, shape
        ``(S, m, 2)``.
        """
        grad = nodal_gradients(self.mesh, self.element_geometry, values[:, :self.node_count], elements)
        return _curl(grad)

    def element_fields(self, elements, values, currents, material):
        b = self.flux_density(elements, values)
        h = b / MU0
        in_shield = self.mesh.regions[elements] == Region.SHIELD
        if np.any(in_shield):
            bs = b[:, in_shield]
            if material.is_linear:
                h[:, in_shield] = bs / material.mu_initial
            else:
                norm = np.linalg.norm(bs, axis=-1)
                magnitude = materials.field_from_flux(material, norm)
                scale = np.where(norm > 0, magnitude / np.where(norm > 0, norm, 1.0), 0.0)
                h[:, in_shield] = bs * scale[..., None]
        return h, b

    def region_classes(self, elements):
        return (self.mesh.regions[elements] == Region.SHIELD).astype(int)

    def _multiplier(self, values):
        if not self.has_multiplier:
            return np.zeros(len(values), dtype=values.dtype)
        return values[:, -1]

    def losses(self, values, currents, material, dt=None):
        if not self.has_multiplier:
            return np.zeros(len(values))
        M1, ones = self._shield_mass, self._shield_ones
        a, d = values[:, :self.node_count], self._multiplier(values)
        sigma = material.sigma
        if dt is None:
            omega = 2 * np.pi * self.frequency
            quadratic = np.einsum('si,si->s', a.conj(), (M1 @ a.T).T).real
            cross = 2 * (d.conj() * (a @ ones)).real
            return 0.5 * sigma * omega**2 * (quadratic + cross + np.abs(d)**2 * self.shield_area)
        dt = np.asarray(dt, dtype=np.float64)
        delta = np.diff(a, axis=0) / dt[:, None]
        u = d[1:] / dt
        quadratic = np.einsum('si,si->s', delta, (M1 @ delta.T).T)
        power = sigma * (quadratic + 2 * u * (delta @ ones) + u**2 * self.shield_area)
        return np.concatenate([[0.0], power])


def _outer_nodes(mesh):
    return np.unique(mesh.boundary_edges[mesh.boundary_tags == BoundaryTag.OUTER])


def _wire_load(mesh, element_geometry):
    """
    Load columns of unit currents in the two wires, shape (N, 2).
    """
    out = np.zeros((len(mesh.nodes), 2))
    for w, region in enumerate((Region.WIRE_PLUS, Region.WIRE_MINUS)):
        elements = np.flatnonzero(mesh.regions == region)
        if elements.size == 0:
            raise TopologyError(f'The mesh has no {region.name} triangles.')
        area = element_geometry.areas[elements].sum()
        out[:, w] = load_vector(mesh, element_geometry, 1 / area, elements)
    return out


def _block(matrix, column, corner):
    """
    Border `matrix` with a symmetric row and column.
    """
    column = scipy.sparse.csc_matrix(column.reshape(-1, 1))
    return scipy.sparse.bmat([[matrix, column], [column.T, corner]], format='csc')


def solve_reference(mesh, material, source, mode='transient', grid=None, newton=None):
    """
    Solve the volume-resolved vector potential model.

    Parameters
    ----------
    mesh : Mesh2D
        Mesh that resolves the shield volume, or a mesh without a shield.
    material : MaterialModel
        Shield material.
    source : SourceSpec
        Wire currents.
    mode : {'harmonic', 'transient'}
        Phasor solve or implicit Euler on `grid` from rest.
    grid : TimeGrid
        Time grid of transient runs.
    newton : NewtonSettings, optional
        Stopping rule of nonlinear steps.

    Returns
    -------
    FieldSolution
        Values hold the nodal potential followed, when a shield is present,
        by the multiplier scaled by the time step (transient) or divided by
        :math:`j\\omega` (harmonic).

    Raises
    ------
    TopologyError
        When the mesh has a crack.

    Examples
    --------
    >>> geom = GeometrySpec(resolve_shield_volume=True)
    >>> mesh = generate_mesh(geom, 1e-3, 0.5)
    >>> sol = solve_reference(mesh, MaterialModel.linear(200, 6e6),
    ...                       SourceSpec.sinusoid(6000, 50), mode='harmonic')
    """
    validate_run(mode, material, source, grid)
    if mesh.has_crack:
        raise TopologyError('The reference model needs a mesh without a crack.')

    element_geometry = ElementGeometry.of(mesh)
    discretization = ReferenceDiscretization(mesh, element_geometry)
    n_nodes = len(mesh.nodes)
    dimension = discretization.dofs
    if dimension != estimate_dofs(mesh):
        raise RuntimeError('Unknown count differs from the mesh estimate.')

    shield = discretization.shield
    outside = np.setdiff1d(np.arange(len(mesh.triangles)), shield)
    K_air = stiffness_matrix(mesh, element_geometry, 1 / MU0, outside)
    load = _wire_load(mesh, element_geometry)
    sigma = material.sigma
    M_sh = sigma * discretization._shield_mass
    c = sigma * discretization._shield_ones
    corner = sigma * discretization.shield_area

    free = np.setdiff1d(np.arange(dimension), _outer_nodes(mesh))
    logger.info('reference model: %d unknowns (%d nodes, %d shield triangles)',
                dimension, n_nodes, shield.size)
    common = dict(model='reference', mesh=mesh, material=material,
                  discretization=discretization, dofs=dimension)

    if mode == 'harmonic':
        omega = 2 * np.pi * source.frequency
        discretization.frequency = source.frequency
        currents = source.wire_phasors()
        K = K_air + stiffness_matrix(mesh, element_geometry, 1 / material.mu_initial, shield)
        K = K + 1j * omega * M_sh
        if discretization.has_multiplier:
            K = _block(K, 1j * omega * c, 1j * omega * corner)
        rhs = np.zeros(dimension, dtype=np.complex128)
        rhs[:n_nodes] = load @ currents[0]
        u = np.zeros((1, dimension), dtype=np.complex128)
        u[0, free] = factorize(K.tocsc()[free][:, free]).solve(rhs[free])
        return FieldSolution(mode='harmonic', values=u, currents=currents,
                             frequency=source.frequency, **common)

    times, dt = grid.times, grid.dt
    currents = source.step_currents(times)
    u = np.zeros((len(times), dimension))

    def bordered(matrix):
        if discretization.has_multiplier:
            return _block(matrix, c, corner)
        return matrix.tocsc()

    def history(previous):
        rhs = np.zeros(dimension)
        rhs[:n_nodes] = M_sh @ previous[:n_nodes]
        if discretization.has_multiplier:
            rhs[-1] = c @ previous[:n_nodes]
        return rhs

    if material.is_linear or shield.size == 0:
        K = K_air + stiffness_matrix(mesh, element_geometry, 1 / material.mu_initial, shield)
        solver = factorize(bordered(dt * K + M_sh)[free][:, free])
        for k in range(1, len(times)):
            rhs = history(u[k - 1])
            rhs[:n_nodes] += dt * load @ currents[k]
            u[k, free] = solver.solve(rhs[free])
        return FieldSolution(mode='transient', values=u, currents=currents, times=times, **common)

    if newton is None:
        newton = NewtonSettings()
    scale = dt * np.linalg.norm(load @ np.max(np.abs(currents), axis=0))
    settings = NewtonSettings(newton.max_iterations, newton.relative_residual_tol,
                              max(newton.absolute_residual_tol, 1e-12 * scale))
    linear = bordered(dt * K_air + M_sh)
    curls = _curl(element_geometry.gradients[shield])
    weights = dt * element_geometry.areas[shield]
    tri = mesh.triangles[shield]
    rows = np.broadcast_to(tri[:, :, None], (shield.size, 3, 3)).ravel()
    cols = np.broadcast_to(tri[:, None, :], (shield.size, 3, 3)).ravel()

    steps = len(times)
    iterations = np.zeros(steps, dtype=int)
    converged = np.ones(steps, dtype=bool)
    for k in range(1, steps):
        fixed = history(u[k - 1])
        fixed[:n_nodes] += dt * load @ currents[k]
        trial = u[k - 1].copy()

        def residual_and_jacobian(x):
            trial[free] = x
            b = np.einsum('mk,mkd->md', trial[tri], curls)
            norm = np.linalg.norm(b, axis=-1)
            magnitude = materials.field_from_flux(material, norm)
            h = b * np.where(norm > 0, magnitude / np.where(norm > 0, norm, 1.0), 0.0)[:, None]
            local = weights[:, None] * np.einsum('md,mkd->mk', h, curls)
            r = linear @ trial - fixed
            np.add.at(r, tri.ravel(), local.ravel())
            tangent = np.linalg.inv(materials.differential_permeability(material, h))
            blocks = weights[:, None, None] * np.einsum(
                'mid,mde,mje->mij', curls, tangent, curls, optimize=True)
            J = linear + scipy.sparse.coo_matrix((blocks.ravel(), (rows, cols)),
                                                 shape=(dimension, dimension)).tocsc()
            return r[free], J.tocsc()[free][:, free]

        x, iterations[k], converged[k] = newton_solve(residual_and_jacobian, u[k - 1, free], settings)
        u[k, free] = x
        logger.debug('step %d: %d newton iterations', k, iterations[k])

    if not np.all(converged):
        warnings.warn(f'Newton iterations did not converge in {np.sum(~converged)} '
                      f'of {steps - 1} steps.')
    return FieldSolution(mode='transient', values=u, currents=currents, times=times,
                         iterations=iterations, converged=converged, **common)
