"""
Thin-shell solver

.. :currentmodule:`thinshell.fem2d`

The magnetic field in the air is :math:`h = \\nabla\\phi + \\sum_w I_w t_w`,
with a nodal potential :math:`\\phi` and one source cochain :math:`t_w` per
wire. The shield is a crack with duplicated nodes. Along it the sheet field
is expanded in the hyperbolic basis,

.. math::

    h_x(x, y) = \\sum_p c_p(x) \\theta_p(y),

where the two trace coefficients are the tangential fields of the two crack
sides and the remaining ``4n - 2`` coefficients are nodal unknowns, linear
along each crack segment. The sheet adds
:math:`\\int (\\mu \\partial_t c^T M c' + \\rho c^T S c') dx` to the weak
form of Faraday's law.
"""

from dataclasses import dataclass, field
import logging
import numpy as np
import scipy.sparse
import warnings

from thinshell import materials
from thinshell.constants import MU0
from thinshell.fem2d.lib.assembly import ElementGeometry, nodal_gradients, stiffness_matrix
from thinshell.fem2d.lib.topology import EdgeTopology, cut_cochain
from thinshell.fem2d.solution import Discretization, FieldSolution, validate_run
from thinshell.mesh2d import BoundaryTag, PointLocator, Region, TopologyError, estimate_dofs
from thinshell.numerics import NewtonSettings, factorize, gauss_legendre, newton_solve
from thinshell.slab1d import assemble_SM, impedance_from_admittance

logger = logging.getLogger(__name__)

# integrals of products of the constant and the two end hats over a unit segment
_SEGMENT_MASS = np.array([[1.0, 1 / 2, 1 / 2],
                          [1 / 2, 1 / 3, 1 / 6],
                          [1 / 2, 1 / 6, 1 / 3]])


@dataclass
class TSCouplingBlock:
    """
    Sheet terms of the crack segments.

    Each segment carries ``8n - 2`` local sheet functions: the two traces
    (constant along the segment) and the ``4n - 2`` internal functions at
    each end node (linear hats). They depend on ``8n`` global unknowns
    ``[phi+_a, phi+_b, phi-_a, phi-_b, internal_a, internal_b]`` and on the
    wire currents.

    Attributes
    ----------
    basis : BasisSet
        Through-thickness functions.
    S, M : ndarray
        Elementary matrices of the basis.
    lengths : ndarray, shape (m,)
        Segment lengths (m).
    dofs : ndarray, shape (m, 8n)
        Global unknowns of each segment.
    trace_sources : ndarray, shape (m, 2, W)
        Source cochain values on the + and - side edges of each segment.
    """

    basis: object
    S: np.ndarray = field(repr=False)
    M: np.ndarray = field(repr=False)
    lengths: np.ndarray = field(repr=False)
    dofs: np.ndarray = field(repr=False)
    trace_sources: np.ndarray = field(repr=False)

    def __post_init__(self):
        n = self.basis.n
        internal = self.basis.internal_indices
        self.sheet_index = np.concatenate([self.basis.trace_indices, internal, internal])
        self.shape_index = np.concatenate([[0, 0], np.full(4 * n - 2, 1), np.full(4 * n - 2, 2)])

    @classmethod
    def build(cls, mesh, basis, topology, cochains, internal_offset, quad_order=20):
        """
        Coupling block of the crack of `mesh`.
        """
        plus, minus = mesh.crack_chains
        m = len(plus) - 1
        width = basis.size - 2
        chain = np.arange(m + 1) * width + internal_offset
        internal = chain[:, None] + np.arange(width)[None, :]
        dofs = np.column_stack([plus[:-1], plus[1:], minus[:-1], minus[1:],
                                internal[:-1], internal[1:]])
        lengths = np.linalg.norm(mesh.nodes[plus[1:]] - mesh.nodes[plus[:-1]], axis=1)

        sources = np.zeros((m, 2, len(cochains)))
        for side, nodes in enumerate((plus, minus)):
            edges, signs = topology.find(nodes[:-1], nodes[1:])
            for w, cochain in enumerate(cochains):
                sources[:, side, w] = signs * cochain[edges]

        S, M = assemble_SM(basis, quad_order)
        return cls(basis=basis, S=S, M=M, lengths=lengths, dofs=dofs, trace_sources=sources)

    @property
    def segments(self):
        return len(self.lengths)

    @property
    def local_size(self):
        return len(self.sheet_index)

    def local_matrices(self, sheet_matrix):
        """
        Segment matrices :math:`K_{pq} X_{st} L` of a through-thickness
        matrix `K`, shape ``(m, 8n - 2, 8n - 2)``.
        """
        p, s = self.sheet_index, self.shape_index
        pattern = sheet_matrix[np.ix_(p, p)] * _SEGMENT_MASS[np.ix_(s, s)]
        return self.lengths[:, None, None] * pattern[None]

    def transforms(self):
        """
        Maps from global unknowns and wire currents to local sheet functions.

        Returns
        -------
        T : ndarray, shape (m, 8n - 2, 8n)
        T_source : ndarray, shape (m, 8n - 2, W)
        """
        m, size = self.segments, self.local_size
        inv = 1 / self.lengths
        T = np.zeros((m, size, size + 2))
        T[:, 0, 0], T[:, 0, 1] = -inv, inv
        T[:, 1, 2], T[:, 1, 3] = -inv, inv
        T[:, 2:, 4:] = np.eye(size - 2)[None]
        T_source = self.trace_sources * inv[:, None, None]
        T_source = np.concatenate([T_source, np.zeros((m, size - 2, T_source.shape[-1]))], axis=1)
        return T, T_source

    def gather(self, values, currents):
        """
        Local sheet coefficients, shape ``(S, m, 8n - 2)``.
        """
        T, T_source = self.transforms()
        u = values[:, self.dofs]
        return np.einsum('mab,smb->sma', T, u) + np.einsum('maw,sw->sma', T_source, currents)

    def scatter_vector(self, local, dimension):
        """
        Sum local residuals, shape ``(m, 8n - 2)``, into a global vector.
        """
        T, _ = self.transforms()
        contributions = np.einsum('mab,ma->mb', T, local)
        out = np.zeros(dimension, dtype=contributions.dtype)
        np.add.at(out, self.dofs.ravel(), contributions.ravel())
        return out

    def scatter_matrix(self, local, dimension):
        """
        Sum local matrices :math:`T^T K T` into a sparse global matrix.
        """
        T, _ = self.transforms()
        blocks = np.einsum('mba,mbc,mcd->mad', T, local, T, optimize=True)
        k = self.dofs.shape[1]
        rows = np.broadcast_to(self.dofs[:, :, None], (self.segments, k, k)).ravel()
        cols = np.broadcast_to(self.dofs[:, None, :], (self.segments, k, k)).ravel()
        return scipy.sparse.coo_matrix((blocks.ravel(), (rows, cols)),
                                       shape=(dimension, dimension)).tocsc()

    def assemble(self, sheet_matrix, dimension):
        """
        Global matrix and wire-source columns of one sheet term.

        Returns
        -------
        matrix : scipy.sparse.csc_matrix, shape (N, N)
        sources : ndarray, shape (N, W)
        """
        local = self.local_matrices(sheet_matrix)
        T, T_source = self.transforms()
        matrix = self.scatter_matrix(local, dimension)
        columns = np.einsum('mba,mbc,mcw->maw', T, local, T_source, optimize=True)
        sources = np.zeros((dimension, columns.shape[-1]))
        for w in range(columns.shape[-1]):
            np.add.at(sources[:, w], self.dofs.ravel(), columns[..., w].ravel())
        return matrix, sources

    def quadrature_shapes(self, quad_points):
        """
        Local sheet functions at 2 points along and `quad_points` across each
        segment.

        Returns
        -------
        shapes : ndarray, shape (8n - 2, 2, Q)
        weights : ndarray, shape (2, Q)
            Product weights per unit segment length (m).
        """
        d = self.basis.sheet.thickness
        y, wy = gauss_legendre(quad_points).on_interval(-0.5 * d, 0.5 * d)
        xi = 0.5 * (1 + np.array([-1, 1]) / np.sqrt(3))
        along = np.stack([np.ones(2), 1 - xi, xi])
        theta = self.basis.theta(y)
        shapes = theta[self.sheet_index][:, None, :] * along[self.shape_index][:, :, None]
        return shapes, 0.5 * wy[None, :] * np.ones((2, 1))

    def trace_admittance(self, material, frequency, segment=0):
        """
        Impedance coefficients of one segment with its internal functions
        eliminated.

        Returns
        -------
        ImpedanceCoefficients
        """
        omega = 2 * np.pi * frequency
        K = (material.rho * self.local_matrices(self.S)[segment]
             + 1j * omega * material.mu_initial * self.local_matrices(self.M)[segment])
        t, i = np.arange(2), np.arange(2, self.local_size)
        Y = K[np.ix_(t, t)] - K[np.ix_(t, i)] @ np.linalg.solve(K[np.ix_(i, i)], K[np.ix_(i, t)])
        return impedance_from_admittance(Y / self.lengths[segment], frequency)


class TSDiscretization(Discretization):
    """
    Field representation of the thin-shell model.
    """

    def __init__(self, mesh, element_geometry, topology, cochains, coupling):
        self.mesh = mesh
        self.element_geometry = element_geometry
        self.topology = topology
        self.cochains = cochains
        self.coupling = coupling
        self.node_count = len(mesh.nodes)
        self.source_means = np.stack([topology.whitney_means(element_geometry, c) for c in cochains])
        self._locator = None
        if coupling is not None:
            plus, _ = mesh.crack_chains
            self.chain_x = mesh.nodes[plus, 0]
            self.crack_y = float(np.mean(mesh.nodes[plus, 1]))
            if np.ptp(mesh.nodes[plus, 1]) > 1e-12 or np.any(np.diff(self.chain_x) <= 0):
                self.chain_x = None

    @property
    def locator(self):
        if self._locator is None:
            self._locator = PointLocator(self.mesh)
        return self._locator

    @property
    def basis(self):
        return None if self.coupling is None else self.coupling.basis

    @property
    def dofs(self):
        if self.coupling is None:
            return self.node_count
        return self.node_count + (self.basis.size - 2) * (self.coupling.segments + 1)

    def element_fields(self, elements, values, currents, material):
        h = nodal_gradients(self.mesh, self.element_geometry, values[:, :self.node_count], elements)
        h = h + np.einsum('sw,wmd->smd', currents, self.source_means[:, elements])
        return h, MU0 * h

    def region_classes(self, elements):
        return np.zeros(len(elements), dtype=int)

    def losses(self, values, currents, material, dt=None):
        if self.coupling is None:
            return np.zeros(len(values))
        local = self.coupling.gather(values, currents)
        S = self.coupling.local_matrices(self.coupling.S)
        power = material.rho * np.einsum('sma,mab,smb->s', local.conj(), S, local).real
        return power if dt is not None else 0.5 * power

    def node_coefficients(self, values, currents):
        """
        Sheet coefficients at the crack nodes, shape ``(S, m + 1, 4n)``.
        Traces are averaged over the segments meeting at a node.
        """
        basis = self.basis
        local = self.coupling.gather(values, currents)
        traces = local[..., :2]
        nodal = np.zeros((len(values), self.coupling.segments + 1, 2), dtype=local.dtype)
        nodal[:, :-1] += traces
        nodal[:, 1:] += traces
        nodal[:, 1:-1] *= 0.5
        width = basis.size - 2
        internal = values[:, self.node_count:].reshape(len(values), -1, width)
        out = np.zeros((len(values), self.coupling.segments + 1, basis.size), dtype=local.dtype)
        out[..., basis.trace_indices] = nodal
        out[..., basis.internal_indices] = internal
        return out

    def in_sheet(self, points):
        if self.coupling is None:
            return np.zeros(len(points), dtype=bool)
        half = 0.5 * self.basis.sheet.thickness * (1 + 1e-9)
        plus, _ = self.mesh.crack_chains
        x = self.mesh.nodes[plus, 0]
        inside = ((np.abs(points[:, 1] - self.crack_y) <= half)
                  & (points[:, 0] >= x.min()) & (points[:, 0] <= x.max()))
        if np.any(inside) and self.chain_x is None:
            raise ValueError('Sheet probes need a straight crack along x.')
        return inside

    def sheet_fields(self, points, values, currents, material):
        coefficients = self.node_coefficients(values, currents)
        x = points[:, 0]
        j = np.clip(np.searchsorted(self.chain_x, x) - 1, 0, len(self.chain_x) - 2)
        t = (x - self.chain_x[j]) / (self.chain_x[j + 1] - self.chain_x[j])
        c = (1 - t)[None, :, None] * coefficients[:, j] + t[None, :, None] * coefficients[:, j + 1]
        y = np.clip(points[:, 1] - self.crack_y, -0.5 * self.basis.sheet.thickness,
                    0.5 * self.basis.sheet.thickness)
        hx = np.einsum('spk,kp->sp', c, self.basis.theta(y))

        probes = np.concatenate([np.column_stack([x, np.full_like(x, self.crack_y + 1e-9)]),
                                 np.column_stack([x, np.full_like(x, self.crack_y - 1e-9)])])
        elements, _ = self.locator.locate(probes)
        h_faces, _ = self.element_fields(elements, values, currents, material)
        by = 0.5 * MU0 * (h_faces[:, :len(x), 1] + h_faces[:, len(x):, 1])
        if material.is_linear:
            mu = material.mu_initial
        else:
            mu = materials.permeability(material, np.abs(hx))
        h = np.stack([hx, by / mu], axis=-1)
        b = np.stack([mu * hx, by], axis=-1)
        return h, b


def _gauge_node(mesh):
    outer = mesh.boundary_edges[mesh.boundary_tags == BoundaryTag.OUTER]
    return int(outer.min()) if outer.size else 0


def _source_cochains(mesh, topology, element_geometry):
    if len(mesh.cut_paths) != 2:
        raise TopologyError(f'Two cut paths are required (found {len(mesh.cut_paths)}).')
    found = {}
    for path in mesh.cut_paths:
        cochain, wire = cut_cochain(mesh, topology, element_geometry, path)
        found[wire] = cochain
    if set(found) != {Region.WIRE_PLUS, Region.WIRE_MINUS}:
        raise TopologyError('Each wire needs its own cut path.')
    return [found[Region.WIRE_PLUS], found[Region.WIRE_MINUS]]


def _air_source(mesh, element_geometry, source_means):
    """
    :math:`\\mu_0 \\int t_w \\cdot \\nabla\\lambda_i` for each wire, shape (N, W).
    """
    g = element_geometry.gradients
    out = np.zeros((len(mesh.nodes), len(source_means)))
    for w, means in enumerate(source_means):
        local = MU0 * element_geometry.areas[:, None] * np.einsum('md,mkd->mk', means, g)
        np.add.at(out[:, w], mesh.triangles.ravel(), local.ravel())
    return out


def _pad(matrix, dimension):
    matrix = matrix.tocoo()
    return scipy.sparse.coo_matrix((matrix.data, (matrix.row, matrix.col)),
                                   shape=(dimension, dimension)).tocsc()


def solve_ts(mesh, basis, material, source, mode='transient', grid=None, newton=None, quad_points=20):
    """
    Solve the thin-shell model.

    Parameters
    ----------
    mesh : Mesh2D
        Mesh with a crack along the shield and two cut paths. A mesh without
        a crack (and `basis` None) solves the shield-free problem.
    basis : BasisSet
        Through-thickness functions of the sheet.
    material : MaterialModel
        Shield material; saturable materials need transient mode.
    source : SourceSpec
        Wire currents.
    mode : {'harmonic', 'transient'}
        Phasor solve at the source frequency, or implicit Euler on `grid`
        from rest.
    grid : TimeGrid
        Time grid of transient runs.
    newton : NewtonSettings, optional
        Stopping rule of nonlinear steps.
    quad_points : int, optional
        Gauss-Legendre points across the sheet in nonlinear runs.

    Returns
    -------
    FieldSolution

    Raises
    ------
    TopologyError
        When the crack or cut paths are missing, or the mesh resolves the
        shield volume.
    """
    validate_run(mode, material, source, grid)
    if np.any(mesh.regions == Region.SHIELD):
        raise TopologyError('The thin-shell model needs a mesh without the shield volume.')
    if basis is not None and not mesh.has_crack:
        raise TopologyError('The mesh has no crack for the sheet.')
    if basis is None and mesh.has_crack:
        raise ValueError('A basis is required for a mesh with a crack.')

    element_geometry = ElementGeometry.of(mesh)
    topology = EdgeTopology.of(mesh)
    cochains = _source_cochains(mesh, topology, element_geometry)
    n_nodes = len(mesh.nodes)
    coupling = None
    if basis is not None:
        coupling = TSCouplingBlock.build(mesh, basis, topology, cochains, n_nodes)
    discretization = TSDiscretization(mesh, element_geometry, topology, cochains, coupling)
    dimension = discretization.dofs
    if basis is not None and dimension != estimate_dofs(mesh, basis.n):
        raise RuntimeError('Unknown count differs from the mesh estimate.')

    A = _pad(MU0 * stiffness_matrix(mesh, element_geometry), dimension)
    F = np.zeros((dimension, 2))
    F[:n_nodes] = _air_source(mesh, element_geometry, discretization.source_means)
    B = scipy.sparse.csc_matrix((dimension, dimension))
    G = np.zeros((dimension, 2))
    A_air, F_air = A, F.copy()
    if coupling is not None and material.is_linear:
        A_sheet, F_sheet = coupling.assemble(material.mu_initial * coupling.M, dimension)
        B, G = coupling.assemble(material.rho * coupling.S, dimension)
        A, F = A + A_sheet, F + F_sheet

    gauge = _gauge_node(mesh)
    free = np.setdiff1d(np.arange(dimension), [gauge])
    logger.info('thin-shell model: %d unknowns (%d nodes, %d crack segments)', dimension, n_nodes,
                0 if coupling is None else coupling.segments)

    common = dict(model='ts', mesh=mesh, material=material, discretization=discretization,
                  dofs=dimension)
    if mode == 'harmonic':
        omega = 2 * np.pi * source.frequency
        currents = source.wire_phasors()
        K = (1j * omega * A + B).tocsc()
        rhs = -(1j * omega * F + G) @ currents[0]
        u = np.zeros((1, dimension), dtype=np.complex128)
        u[0, free] = factorize(K[free][:, free]).solve(rhs[free])
        return FieldSolution(mode='harmonic', values=u, currents=currents,
                             frequency=source.frequency, **common)

    times = grid.times
    dt = grid.dt
    currents = source.step_currents(times)
    u = np.zeros((len(times), dimension))
    if coupling is None or material.is_linear:
        solver = factorize((A + dt * B).tocsc()[free][:, free])
        for k in range(1, len(times)):
            rhs = A @ u[k - 1] - F @ (currents[k] - currents[k - 1]) - dt * G @ currents[k]
            u[k, free] = solver.solve(rhs[free])
        return FieldSolution(mode='transient', values=u, currents=currents, times=times, **common)

    iterations, converged = _nonlinear_steps(coupling, material, A_air, F_air, u, currents,
                                             dt, free, newton, quad_points)
    return FieldSolution(mode='transient', values=u, currents=currents, times=times,
                         iterations=iterations, converged=converged, **common)


def _nonlinear_steps(coupling, material, A_air, F_air, u, currents, dt, free, newton, quad_points):
    if newton is None:
        newton = NewtonSettings()
    dimension = u.shape[1]
    shapes, weights = coupling.quadrature_shapes(quad_points)
    weights = coupling.lengths[:, None, None] * weights[None]
    S_local = material.rho * coupling.local_matrices(coupling.S)
    A_step = (A_air / dt).tocsc()

    def flux(h):
        return materials.permeability(material, np.abs(h)) * h

    def sheet_field(values, current):
        local = coupling.gather(values[None], current[None])[0]
        return local, np.einsum('ma,agq->mgq', local, shapes)

    scale = np.linalg.norm(F_air @ np.max(np.abs(currents), axis=0)) / dt
    floor = max(newton.absolute_residual_tol, 1e-12 * scale)
    settings = NewtonSettings(newton.max_iterations, newton.relative_residual_tol, floor)

    steps = len(u)
    iterations = np.zeros(steps, dtype=int)
    converged = np.ones(steps, dtype=bool)
    for k in range(1, steps):
        previous = u[k - 1]
        _, h_prev = sheet_field(previous, currents[k - 1])
        b_prev = flux(h_prev)
        air_source = F_air @ (currents[k] - currents[k - 1]) / dt
        trial = previous.copy()

        def residual_and_jacobian(x):
            trial[free] = x
            local, h = sheet_field(trial, currents[k])
            db = weights * (flux(h) - b_prev) / dt
            r_local = np.einsum('mgq,agq->ma', db, shapes) + np.einsum('mab,mb->ma', S_local, local)
            mu_d = weights * materials.incremental_permeability(material, h) / dt
            j_local = np.einsum('mgq,agq,bgq->mab', mu_d, shapes, shapes, optimize=True) + S_local
            r = A_step @ (trial - previous) + air_source + coupling.scatter_vector(r_local, dimension)
            J = (A_step + coupling.scatter_matrix(j_local, dimension)).tocsc()
            return r[free], J[free][:, free]

        x, iterations[k], converged[k] = newton_solve(residual_and_jacobian, previous[free], settings)
        u[k, free] = x
        logger.debug('step %d: %d newton iterations', k, iterations[k])

    if not np.all(converged):
        warnings.warn(f'Newton iterations did not converge in {np.sum(~converged)} '
                      f'of {steps - 1} steps.')
    return iterations, converged
