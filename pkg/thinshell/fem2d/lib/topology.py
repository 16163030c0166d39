"""
Edges and cut cochains

.. :currentmodule:`thinshell.fem2d`

Edge numbering of a triangulation, discrete circulations, and the source
cochains of the wires. A source cochain has unit circulation around its wire,
curl spread uniformly over the wire cross-section, and zero curl in the
air. It is supported on a layer of triangles along the cut path of the wire.
"""

from dataclasses import dataclass, field
import numpy as np
import scipy.sparse
import scipy.sparse.csgraph

from thinshell.mesh2d import BoundaryTag, Region, TopologyError


@dataclass
class EdgeTopology:
    """
    Edges of a triangulation.

    Attributes
    ----------
    edges : ndarray, shape (E, 2)
        Node pairs, lower index first. Edges are oriented from the first to
        the second node.
    triangle_edges : ndarray, shape (M, 3)
        Edge of each local side ``(v0, v1), (v1, v2), (v2, v0)``.
    signs : ndarray, shape (M, 3)
        +1 where the local side runs along the edge orientation.
    shared_edges : ndarray, shape (K,)
        Edges with two adjacent triangles.
    shared_triangles : ndarray, shape (K, 2)
        The two triangles of each shared edge.
    """

    edges: np.ndarray = field(repr=False)
    triangle_edges: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)
    shared_edges: np.ndarray = field(repr=False)
    shared_triangles: np.ndarray = field(repr=False)
    node_count: int = 0

    @classmethod
    def of(cls, mesh):
        t = mesh.triangles
        m = len(t)
        local = np.stack([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]], axis=1)
        signs = np.where(local[..., 0] < local[..., 1], 1, -1)
        keys = np.sort(local, axis=-1).reshape(-1, 2)
        edges, inverse = np.unique(keys, axis=0, return_inverse=True)
        triangle_edges = np.asarray(inverse).reshape(m, 3)

        flat = triangle_edges.ravel()
        owner = np.repeat(np.arange(m), 3)
        order = np.argsort(flat, kind='stable')
        flat, owner = flat[order], owner[order]
        pair = flat[1:] == flat[:-1]
        return cls(edges=edges, triangle_edges=triangle_edges, signs=signs,
                   shared_edges=flat[1:][pair],
                   shared_triangles=np.column_stack([owner[:-1][pair], owner[1:][pair]]),
                   node_count=len(mesh.nodes))

    def find(self, a, b):
        """
        Edge index and orientation sign of the directed edges ``a -> b``.
        """
        a, b = np.asarray(a), np.asarray(b)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        codes = self.edges[:, 0] * self.node_count + self.edges[:, 1]
        wanted = lo * self.node_count + hi
        index = np.searchsorted(codes, wanted)
        index = np.minimum(index, len(codes) - 1)
        if np.any(codes[index] != wanted):
            raise TopologyError('Node pair is not a mesh edge.')
        return index, np.where(a < b, 1, -1)

    def circulation(self, cochain):
        """
        Counter-clockwise circulation of an edge cochain around each triangle.
        """
        return np.sum(self.signs * cochain[self.triangle_edges], axis=1)

    def whitney_means(self, geometry, cochain):
        """
        Mean over each triangle of the Whitney interpolant of `cochain`.

        On a side ``a -> b`` the Whitney function
        :math:`\\lambda_a \\nabla\\lambda_b - \\lambda_b \\nabla\\lambda_a`
        averages to :math:`(\\nabla\\lambda_b - \\nabla\\lambda_a)/3`.

        Returns
        -------
        ndarray, shape (M, 2)
        """
        values = self.signs * cochain[self.triangle_edges]
        g = geometry.gradients
        directions = (np.roll(g, -1, axis=1) - g) / 3
        return np.einsum('mk,mkd->md', values, directions)

    def whitney_at(self, geometry, cochain, elements, bary):
        """
        Whitney interpolant of `cochain` at points given by triangle and
        barycentric coordinates, shape ``(P, 2)``.
        """
        values = self.signs[elements] * cochain[self.triangle_edges[elements]]
        g = geometry.gradients[elements]
        lam_next = np.roll(bary, -1, axis=1)
        g_next = np.roll(g, -1, axis=1)
        w = bary[..., None] * g_next - lam_next[..., None] * g
        return np.einsum('pk,pkd->pd', values, w)


def _wire_of_path(mesh, path):
    start = path[0]
    touching = mesh.regions[np.any(mesh.triangles == start, axis=1)]
    wires = np.unique(touching[np.isin(touching, (Region.WIRE_PLUS, Region.WIRE_MINUS))])
    if wires.size != 1:
        raise TopologyError(f'Cut path starting at node {start} does not start on a single wire.')
    outer = mesh.boundary_edges[mesh.boundary_tags == BoundaryTag.OUTER]
    if path[-1] not in outer:
        raise TopologyError(f'Cut path ending at node {path[-1]} does not reach the outer boundary.')
    return int(wires[0])


def _spread_over_wire(topology, geometry, cochain, faces):
    """
    Adjust edges inside the wire so each wire triangle carries curl in
    proportion to its area.
    """
    local = np.full(len(topology.triangle_edges), -1)
    local[faces] = np.arange(faces.size)
    inside = np.all(local[topology.shared_triangles] >= 0, axis=1)
    a, b = local[topology.shared_triangles[inside]].T
    edge_ids = topology.shared_edges[inside]
    graph = scipy.sparse.csr_matrix(
        (np.concatenate([edge_ids, edge_ids]) + 1, (np.concatenate([a, b]), np.concatenate([b, a]))),
        shape=(faces.size, faces.size))
    order, parents = scipy.sparse.csgraph.breadth_first_order(
        graph, 0, directed=False, return_predecessors=True)
    if order.size != faces.size:
        raise TopologyError('Wire triangles are not connected.')

    areas = geometry.areas[faces]
    residual = areas / areas.sum() - topology.circulation(cochain)[faces]
    for f in order[:0:-1]:
        p = parents[f]
        e = graph[f, p] - 1
        k = np.flatnonzero(topology.triangle_edges[faces[f]] == e)[0]
        cochain[e] += residual[f] * topology.signs[faces[f], k]
        residual[p] += residual[f]
        residual[f] = 0.0
    return cochain


def cut_cochain(mesh, topology, geometry, path):
    """
    Source cochain of the wire where `path` starts.

    Parameters
    ----------
    mesh : Mesh2D
        Mesh with region tags.
    topology : EdgeTopology
        Edges of `mesh`.
    geometry : ElementGeometry
        Areas and gradients of `mesh`.
    path : array_like of int
        Node chain from the wire boundary to the outer boundary.

    Returns
    -------
    cochain : ndarray, shape (E,)
        Edge values with unit counter-clockwise circulation around the wire.
    wire : Region
        Region tag of the wire.

    Raises
    ------
    TopologyError
        When the path does not join a wire to the outer boundary, or the
        cochain leaks curl into the air.
    """
    path = np.asarray(path, dtype=np.int64)
    if path.size < 2:
        raise TopologyError('A cut path needs at least two nodes.')
    wire = _wire_of_path(mesh, path)
    in_wire = mesh.regions == wire

    n = len(mesh.nodes)
    on_cut = np.zeros(n, dtype=bool)
    on_cut[path] = True
    position = np.full(n, -1)
    position[path] = np.arange(path.size)
    points = mesh.nodes[path]
    tangents = np.gradient(points, axis=0)

    tri = mesh.triangles
    touching = np.flatnonzero(np.any(on_cut[tri], axis=1) & ~in_wire)
    first = np.argmax(on_cut[tri[touching]], axis=1)
    k = position[tri[touching, first]]
    rel = mesh.centroids()[touching] - points[k]
    cross = tangents[k, 0] * rel[:, 1] - tangents[k, 1] * rel[:, 0]
    layer = touching[cross < 0]

    xi = on_cut.astype(np.float64)
    cochain = np.zeros(len(topology.edges))
    e = np.unique(topology.triangle_edges[layer])
    cochain[e] = xi[topology.edges[e, 1]] - xi[topology.edges[e, 0]]

    circulation = topology.circulation(cochain)
    net = circulation[in_wire].sum()
    if abs(net) < 0.5:
        raise TopologyError(f'Cut path from node {path[0]} carries no circulation around its wire.')
    cochain /= net
    if np.max(np.abs(circulation[~in_wire]), initial=0.0) > 1e-9 * abs(net):
        raise TopologyError(f'Cut path from node {path[0]} leaves curl in the air.')

    cochain = _spread_over_wire(topology, geometry, cochain, np.flatnonzero(in_wire))
    return cochain, Region(wire)
