"""
Linear triangle matrices

.. :currentmodule:`thinshell.fem2d`

Element quantities and sparse assembly for piecewise-linear nodal functions
on :class:`~thinshell.mesh2d.Mesh2D`.
"""

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse


@dataclass
class ElementGeometry:
    """
    Barycentric gradients and areas of all triangles.

    Attributes
    ----------
    gradients : ndarray, shape (M, 3, 2)
        Constant gradients of the three barycentric functions (1/m).
    areas : ndarray, shape (M,)
        Triangle areas (m^2).
    """

    gradients: np.ndarray = field(repr=False)
    areas: np.ndarray = field(repr=False)

    @classmethod
    def of(cls, mesh):
        p = mesh.nodes[mesh.triangles]
        area = mesh.signed_areas()
        if np.any(area <= 0):
            raise ValueError(f'{np.sum(area <= 0)} triangles are degenerate or clockwise.')
        # grad of lambda_k is the rotated opposite edge over twice the area
        opposite = np.roll(p, -2, axis=1) - np.roll(p, -1, axis=1)
        gradients = np.stack([-opposite[..., 1], opposite[..., 0]], axis=-1) / (2 * area[:, None, None])
        return cls(gradients=gradients, areas=area)


def _coo(mesh, local, elements, shape):
    tri = mesh.triangles[elements]
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    return scipy.sparse.coo_matrix((local.ravel(), (rows, cols)), shape=shape).tocsc()


def stiffness_matrix(mesh, geometry, coefficient=1.0, elements=None):
    """
    :math:`\\int c \\nabla\\lambda_i \\cdot \\nabla\\lambda_j` over the
    selected triangles, with `c` constant per triangle.
    """
    if elements is None:
        elements = np.arange(len(mesh.triangles))
    g = geometry.gradients[elements]
    c = np.broadcast_to(np.asarray(coefficient, dtype=np.float64), elements.shape)
    local = np.einsum('mid,mjd->mij', g, g) * (c * geometry.areas[elements])[:, None, None]
    n = len(mesh.nodes)
    return _coo(mesh, local, elements, (n, n))


def mass_matrix(mesh, geometry, coefficient=1.0, elements=None):
    """
    Consistent mass :math:`\\int c \\lambda_i \\lambda_j` over the selected
    triangles.
    """
    if elements is None:
        elements = np.arange(len(mesh.triangles))
    c = np.broadcast_to(np.asarray(coefficient, dtype=np.float64), elements.shape)
    pattern = (np.ones((3, 3)) + np.eye(3)) / 12
    local = pattern[None] * (c * geometry.areas[elements])[:, None, None]
    n = len(mesh.nodes)
    return _coo(mesh, local, elements, (n, n))


def load_vector(mesh, geometry, density, elements):
    """
    :math:`\\int f \\lambda_i` for a density `f` constant on each selected
    triangle.
    """
    f = np.broadcast_to(np.asarray(density), elements.shape)
    values = np.repeat((f * geometry.areas[elements] / 3)[:, None], 3, axis=1)
    out = np.zeros(len(mesh.nodes), dtype=values.dtype)
    np.add.at(out, mesh.triangles[elements].ravel(), values.ravel())
    return out


def node_triangle_incidence(mesh):
    """
    Sparse (N, M) matrix with a one where node `i` is a vertex of triangle `m`.
    """
    m = len(mesh.triangles)
    rows = mesh.triangles.ravel()
    cols = np.repeat(np.arange(m), 3)
    return scipy.sparse.csr_matrix((np.ones(rows.size), (rows, cols)),
                                   shape=(len(mesh.nodes), m))


def nodal_gradients(mesh, geometry, values, elements):
    """
    Gradient of nodal fields on the selected triangles.

    Parameters
    ----------
    values : ndarray, shape (S, N)
        Nodal values for S states.

    Returns
    -------
    ndarray, shape (S, m, 2)
    """
    local = values[:, mesh.triangles[elements]]
    return np.einsum('smk,mkd->smd', local, geometry.gradients[elements])
