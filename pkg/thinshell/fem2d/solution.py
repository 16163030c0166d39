"""
Field solutions

.. :currentmodule:`thinshell.fem2d`

Solution histories of the 2-D solvers and field evaluation at arbitrary
points.
"""

import abc
from dataclasses import dataclass, field
from functools import cached_property
import numpy as np
import scipy.sparse

from thinshell.fem2d.lib.assembly import node_triangle_incidence
from thinshell.lib.util import choice_error_msg
from thinshell.mesh2d import PointLocator

COMPONENTS = ('hx', 'hy', 'h', 'bx', 'by', 'b')


class Discretization(abc.ABC):
    """
    Model-specific field representation used by :class:`FieldSolution`.
    """

    mesh = None
    element_geometry = None

    @abc.abstractmethod
    def element_fields(self, elements, values, currents, material):
        """
        Field on triangles, constant per triangle.

        Parameters
        ----------
        elements : ndarray of int
            Triangles.
        values : ndarray, shape (S, ndof)
            Solution vectors.
        currents : ndarray, shape (S, 2)
            Wire currents.
        material : MaterialModel
            Shield material.

        Returns
        -------
        h, b : ndarray, shape (S, len(elements), 2)
        """

    @abc.abstractmethod
    def region_classes(self, elements):
        """
        Recovery class of each triangle. Nodal averages only combine
        triangles of one class.
        """

    @abc.abstractmethod
    def losses(self, values, currents, material, dt=None):
        """
        Joule loss per unit length (W/m) of each state. With `dt` the states
        are consecutive implicit Euler steps; without it they are phasors and
        the time average is returned.
        """

    def in_sheet(self, points):
        return np.zeros(len(points), dtype=bool)

    def sheet_fields(self, points, values, currents, material):
        raise NotImplementedError


@dataclass
class FieldSolution:
    """
    Solution of a 2-D run.

    Attributes
    ----------
    model : {'ts', 'reference'}
        Solver that produced the solution.
    mode : {'harmonic', 'transient'}
        Phasor or time-domain solution.
    mesh : Mesh2D
        Mesh.
    material : MaterialModel
        Shield material used for derived fields and losses.
    discretization : Discretization
        Field representation.
    values : ndarray, shape (S, ndof)
        Solution vectors: one phasor vector (harmonic) or one vector per time
        step including t = 0 (transient).
    currents : ndarray, shape (S, 2)
        Wire currents (phasors in harmonic mode).
    times : ndarray
        Step times (transient).
    frequency : float
        Frequency (harmonic).
    dofs : int
        Number of unknowns.
    iterations : ndarray
        Newton iterations per step (nonlinear runs).
    converged : ndarray of bool
        Newton convergence per step (nonlinear runs).
    """

    model: str
    mode: str
    mesh: object = field(repr=False)
    material: object
    discretization: Discretization = field(repr=False)
    values: np.ndarray = field(repr=False)
    currents: np.ndarray = field(repr=False)
    times: np.ndarray = field(default=None, repr=False)
    frequency: float = None
    dofs: int = 0
    iterations: np.ndarray = field(default=None, repr=False)
    converged: np.ndarray = field(default=None, repr=False)

    @property
    def is_harmonic(self):
        return self.mode == 'harmonic'

    @property
    def steps(self):
        return 0 if self.is_harmonic else len(self.values) - 1

    @property
    def max_iterations(self):
        if self.iterations is None:
            return 0
        return int(np.max(self.iterations, initial=0))

    @cached_property
    def locator(self):
        return PointLocator(self.mesh)

    @cached_property
    def _incidence(self):
        return node_triangle_incidence(self.mesh)

    def _rows(self, step):
        if step is None:
            return slice(None)
        if self.is_harmonic:
            return slice(0, 1)
        index = range(len(self.values))[step]
        return slice(index, index + 1)

    def element_fields(self, step=-1, quantity='h'):
        """
        Field on every triangle, shape ``(M, 2)``.
        """
        rows = self._rows(step)
        elements = np.arange(len(self.mesh.triangles))
        h, b = self.discretization.element_fields(
            elements, self.values[rows], self.currents[rows], self.material)
        return (h if quantity == 'h' else b)[0]

    def _recover(self, nodes, region_class, values, currents, quantity):
        """
        Area-weighted nodal averages over triangles of one class.
        """
        incidence = self._incidence[nodes]
        candidates = np.unique(incidence.indices)
        candidates = candidates[self.discretization.region_classes(candidates) == region_class]
        h, b = self.discretization.element_fields(candidates, values, currents, self.material)
        fields = h if quantity == 'h' else b
        areas = self.discretization.element_geometry.areas[candidates]
        weights = incidence[:, candidates] @ scipy.sparse.diags(areas)
        total = np.asarray(weights.sum(axis=1)).ravel()
        weights = scipy.sparse.diags(1 / np.where(total > 0, total, 1.0)) @ weights
        s, m, _ = fields.shape
        flat = fields.transpose(1, 0, 2).reshape(m, 2 * s)
        return (weights @ flat).reshape(len(nodes), s, 2).transpose(1, 0, 2)

    def nodal_field(self, step=-1, quantity='h', region_class=0):
        """
        Recovered nodal field, shape ``(N, 2)``.
        """
        rows = self._rows(step)
        nodes = np.arange(len(self.mesh.nodes))
        return self._recover(nodes, region_class, self.values[rows], self.currents[rows], quantity)[0]

    def field_at(self, points, quantity='h', step=None, region_class=None):
        """
        Field at arbitrary points.

        Inside a thin-shell sheet the through-thickness profile is evaluated.
        Elsewhere the recovered nodal field is interpolated linearly.

        Parameters
        ----------
        points : array_like, shape (P, 2)
            Points (m).
        quantity : {'h', 'b'}
            Field (A/m) or flux density (T).
        step : int, optional
            Single time step. All steps by default.
        region_class : int, optional
            Only search triangles of this recovery class.

        Returns
        -------
        ndarray, shape (S, P, 2)

        Raises
        ------
        ValueError
            When a point is outside the mesh.
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        rows = self._rows(step)
        values, currents = self.values[rows], self.currents[rows]
        out = np.zeros((len(values), len(points), 2), dtype=self.values.dtype)

        sheet = self.discretization.in_sheet(points)
        if np.any(sheet):
            h, b = self.discretization.sheet_fields(points[sheet], values, currents, self.material)
            out[:, sheet] = h if quantity == 'h' else b
        rest = np.flatnonzero(~sheet)
        if rest.size == 0:
            return out

        mask = None
        all_classes = self.discretization.region_classes(np.arange(len(self.mesh.triangles)))
        if region_class is not None:
            mask = all_classes == region_class
        elements, bary = self.locator.locate(points[rest], mask=mask)
        if np.any(elements < 0):
            bad = points[rest[elements < 0][0]]
            raise ValueError(f'Point ({bad[0]}, {bad[1]}) is outside the domain.')
        classes = all_classes[elements]
        for c in np.unique(classes):
            sel = classes == c
            tri = self.mesh.triangles[elements[sel]]
            nodes = np.unique(tri)
            nodal = self._recover(nodes, c, values, currents, quantity)
            idx = np.searchsorted(nodes, tri)
            out[:, rest[sel]] = np.einsum('pk,spkd->spd', bary[sel], nodal[:, idx])
        return out

    def raw_field_at(self, points, quantity='h', step=None):
        """
        Unrecovered field of the triangles containing `points`, shape
        ``(S, P, 2)``.
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        elements, _ = self.locator.locate(points)
        if np.any(elements < 0):
            bad = points[elements < 0][0]
            raise ValueError(f'Point ({bad[0]}, {bad[1]}) is outside the domain.')
        rows = self._rows(step)
        h, b = self.discretization.element_fields(
            elements, self.values[rows], self.currents[rows], self.material)
        return h if quantity == 'h' else b

    def component_at(self, points, component, step=None, region_class=None):
        """
        One field component at points, shape ``(S, P)``. Magnitudes 'h' and
        'b' of phasor fields are :math:`\\sqrt{|v_x|^2 + |v_y|^2}`.
        """
        if component not in COMPONENTS:
            raise ValueError(choice_error_msg('component', component, list(COMPONENTS)))
        values = self.field_at(points, component[0], step, region_class)
        if len(component) == 2:
            return values[..., 0 if component[1] == 'x' else 1]
        return np.sqrt(np.sum(np.abs(values)**2, axis=-1))

    def losses(self):
        """
        Joule loss per unit length of each step (W/m), or the time-averaged
        loss of a harmonic solution.
        """
        if self.is_harmonic:
            return self.discretization.losses(self.values, self.currents, self.material)
        dt = np.diff(self.times)
        return self.discretization.losses(self.values, self.currents, self.material, dt=dt)


MODES = ('harmonic', 'transient')


def validate_run(mode, material, source, grid):
    """
    Check that a solver call is consistent.
    """
    if mode not in MODES:
        raise ValueError(choice_error_msg('mode', mode, list(MODES)))
    if mode == 'harmonic':
        if not source.is_sinusoid:
            raise ValueError('Harmonic runs need a sinusoidal source.')
        if material is not None and not material.is_linear:
            raise ValueError('Harmonic runs need a linear material.')
    elif grid is None:
        raise ValueError('Transient runs need a time grid.')
