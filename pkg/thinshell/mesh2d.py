"""
=======================================
Shield meshes (:mod:`thinshell.mesh2d`)
=======================================

.. currentmodule:: thinshell.mesh2d

Triangular meshes of a planar shield over a pair of wires.

The shield of width `l` and thickness `d` is centred at the origin. Two
square wires sit below it, centred at :math:`x = \\pm l_1/2`, with a gap
`l_2` between their top faces and the lower face of the shield. A square air
box bounds the domain.

Meshes are built on graded tensor-product grids whose lines pass through all
geometric features. Each grid cell is split into two triangles. The
volume-resolved mesh meshes the shield rectangle with a fixed number of
layers. The thin-shell mesh replaces the shield with a crack along its
mid-line: interior crack nodes are duplicated so that the potential may jump
across the shield, while the two crack end nodes are shared. Each wire gets a
cut path, a straight chain of edges from the bottom face of the wire to the
outer boundary.

.. rubric:: Functions

.. autosummary::
    :toctree: generated/

    generate_mesh
    insert_crack
    mesh_quality
    euler_characteristic
    estimate_dofs
    read_mesh
    write_mesh

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    GeometrySpec
    Mesh2D
    QualityReport
    PointLocator
    Region
    BoundaryTag
"""

from dataclasses import dataclass, field, fields, replace
import enum
import logging
import numpy as np
import scipy.spatial

from thinshell.lib.util import check_positive

logger = logging.getLogger(__name__)


class TopologyError(ValueError):
    """
    The mesh topology does not support the requested model.
    """


class MeshFormatError(ValueError):
    """
    A mesh file could not be parsed.

    Attributes
    ----------
    line : int
        1-based line number of the problem, or None.
    section : str
        Section being read.
    """
    def __init__(self, message, line=None, section=None):
        self.line = line
        self.section = section
        where = []
        if section is not None:
            where.append(f'section {section}')
        if line is not None:
            where.append(f'line {line}')
        if where:
            message = f'{message} ({", ".join(where)})'
        super().__init__(message)


class Region(enum.IntEnum):
    AIR = 0
    SHIELD = 1
    WIRE_PLUS = 2
    WIRE_MINUS = 3


class BoundaryTag(enum.IntEnum):
    OUTER = 0
    CRACK_PLUS = 1
    CRACK_MINUS = 2


@dataclass(frozen=True)
class GeometrySpec:
    """
    Shield benchmark geometry. Lengths in metres.

    Attributes
    ----------
    shield_width : float
        Shield width `l`.
    shield_thickness : float
        Shield thickness `d`.
    wire_size : float
        Side of the square wires.
    wire_separation : float
        Centre-to-centre distance `l1` of the wires.
    wire_gap : float
        Distance `l2` from the top of the wires to the lower shield face.
    air_box : tuple of float
        Width and height of the air box.
    resolve_shield_volume : bool
        Mesh the shield rectangle (volume-resolved model) or replace it by
        a crack (thin-shell model).
    include_shield : bool
        Whether the shield is present at all.
    """

    shield_width: float = 1.0
    shield_thickness: float = 1e-3
    wire_size: float = 0.02
    wire_separation: float = 0.30
    wire_gap: float = 0.10
    air_box: tuple = (4.0, 4.0)
    resolve_shield_volume: bool = False
    include_shield: bool = True

    def __post_init__(self):
        object.__setattr__(self, 'air_box', tuple(float(v) for v in np.broadcast_to(self.air_box, (2,))))
        check_positive(shield_width=self.shield_width, shield_thickness=self.shield_thickness,
                       wire_size=self.wire_size, wire_separation=self.wire_separation,
                       wire_gap=self.wire_gap, air_box=self.air_box)
        if self.wire_separation <= self.wire_size:
            raise ValueError('Wires overlap: separation must exceed the wire size.')
        width, height = self.air_box
        x_extent = max(self.shield_width, self.wire_separation + self.wire_size) / 2
        y_low = self.wire_bottom
        y_high = self.shield_thickness / 2
        if x_extent >= width / 2 or y_low <= -height / 2 or y_high >= height / 2:
            raise ValueError('The shield and wires must fit inside the air box.')

    @property
    def wire_top(self):
        return -0.5 * self.shield_thickness - self.wire_gap

    @property
    def wire_bottom(self):
        return self.wire_top - self.wire_size

    @property
    def wire_centers(self):
        """
        Centres of the wire carrying +I and of the wire carrying -I.
        """
        yc = self.wire_top - 0.5 * self.wire_size
        x = 0.5 * self.wire_separation
        return np.array([[-x, yc], [x, yc]])

    @property
    def wire_area(self):
        return self.wire_size**2

    def scaled(self, scale):
        """
        Copy with the air box scaled by `scale`.
        """
        check_positive(scale=scale)
        return replace(self, air_box=tuple(scale * v for v in self.air_box))

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True, eq=False)
class Mesh2D:
    """
    Triangular mesh with region tags, crack and cut paths.

    Attributes
    ----------
    nodes : ndarray, shape (N, 2)
        Coordinates (m).
    triangles : ndarray, shape (M, 3)
        Counter-clockwise node triples.
    regions : ndarray, shape (M,)
        :class:`Region` tag of each triangle.
    boundary_edges : ndarray, shape (K, 2)
        Boundary node pairs.
    boundary_tags : ndarray, shape (K,)
        :class:`BoundaryTag` of each boundary edge.
    crack_pairs : ndarray, shape (P, 2)
        Duplicated crack nodes (+ side, - side), ordered along the crack.
    crack_endpoints : ndarray, shape (2,) or (0,)
        Shared end nodes of the crack, first and last.
    cut_paths : tuple of ndarray
        Node chains from each wire to the outer boundary.
    geometry : GeometrySpec
        Geometry the mesh was generated from, if known.
    """

    nodes: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)
    regions: np.ndarray = field(default=None, repr=False)
    boundary_edges: np.ndarray = field(default=None, repr=False)
    boundary_tags: np.ndarray = field(default=None, repr=False)
    crack_pairs: np.ndarray = field(default=None, repr=False)
    crack_endpoints: np.ndarray = field(default=None, repr=False)
    cut_paths: tuple = ()
    geometry: GeometrySpec = None

    def __post_init__(self):
        def setdefault(name, value):
            object.__setattr__(self, name, value)

        setdefault('nodes', np.asarray(self.nodes, dtype=np.float64).reshape(-1, 2))
        setdefault('triangles', np.asarray(self.triangles, dtype=np.int64).reshape(-1, 3))
        m = len(self.triangles)
        if self.regions is None:
            setdefault('regions', np.zeros(m, dtype=np.int64))
        setdefault('regions', np.asarray(self.regions, dtype=np.int64))
        if self.boundary_edges is None:
            setdefault('boundary_edges', np.zeros((0, 2), dtype=np.int64))
        setdefault('boundary_edges', np.asarray(self.boundary_edges, dtype=np.int64).reshape(-1, 2))
        if self.boundary_tags is None:
            setdefault('boundary_tags', np.zeros(len(self.boundary_edges), dtype=np.int64))
        setdefault('boundary_tags', np.asarray(self.boundary_tags, dtype=np.int64))
        if self.crack_pairs is None:
            setdefault('crack_pairs', np.zeros((0, 2), dtype=np.int64))
        setdefault('crack_pairs', np.asarray(self.crack_pairs, dtype=np.int64).reshape(-1, 2))
        if self.crack_endpoints is None:
            setdefault('crack_endpoints', np.zeros(0, dtype=np.int64))
        setdefault('crack_endpoints', np.asarray(self.crack_endpoints, dtype=np.int64).ravel())
        setdefault('cut_paths', tuple(np.asarray(p, dtype=np.int64) for p in self.cut_paths))

        if len(self.regions) != m:
            raise ValueError('One region tag per triangle is required.')
        if len(self.boundary_tags) != len(self.boundary_edges):
            raise ValueError('One tag per boundary edge is required.')
        if m and (self.triangles.min() < 0 or self.triangles.max() >= len(self.nodes)):
            raise ValueError('Triangles reference missing nodes.')

    @property
    def has_crack(self):
        return self.crack_endpoints.size == 2

    @property
    def crack_chains(self):
        """
        Node chains of the + and - sides of the crack, end nodes included.
        """
        if not self.has_crack:
            raise TopologyError('The mesh has no crack.')
        a, b = self.crack_endpoints
        plus = np.concatenate([[a], self.crack_pairs[:, 0], [b]])
        minus = np.concatenate([[a], self.crack_pairs[:, 1], [b]])
        return plus, minus

    def signed_areas(self):
        p = self.nodes[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    def centroids(self):
        return self.nodes[self.triangles].mean(axis=1)

    def edges(self):
        """
        Unique undirected edges as sorted node pairs, shape (E, 2).
        """
        t = self.triangles
        all_edges = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        return np.unique(np.sort(all_edges, axis=1), axis=0)

    def stats(self):
        """
        Summary counts and quality, as a dict.
        """
        quality = mesh_quality(self)
        return {
            'nodes': int(len(self.nodes)),
            'triangles': int(len(self.triangles)),
            'shield_triangles': int(np.sum(self.regions == Region.SHIELD)),
            'crack_pairs': int(len(self.crack_pairs)),
            'cut_paths': int(len(self.cut_paths)),
            'min_quality': float(quality.minimum),
            'mean_quality': float(quality.mean),
            'euler_characteristic': int(euler_characteristic(self)),
        }


@dataclass
class QualityReport:
    """
    Triangle quality :math:`q = 2 r / R` (inradius over circumradius).

    Attributes
    ----------
    quality : ndarray
        Per-triangle quality in [0, 1]; degenerate triangles get 0.
    minimum : float
        Smallest quality.
    mean : float
        Average quality.
    """

    quality: np.ndarray = field(repr=False)
    minimum: float
    mean: float


def mesh_quality(mesh):
    """
    Quality of each triangle.

    Parameters
    ----------
    mesh : Mesh2D

    Returns
    -------
    QualityReport

    Notes
    -----
    With area `A`, perimeter `P` and side lengths `a`, `b`, `c`,
    :math:`q = 16 A^2 / (P a b c)`, which is 1 for equilateral triangles.
    """
    p = mesh.nodes[mesh.triangles]
    a = np.linalg.norm(p[:, 1] - p[:, 2], axis=1)
    b = np.linalg.norm(p[:, 2] - p[:, 0], axis=1)
    c = np.linalg.norm(p[:, 0] - p[:, 1], axis=1)
    area = np.abs(mesh.signed_areas())
    denominator = (a + b + c) * a * b * c
    q = np.divide(16 * area**2, denominator, out=np.zeros_like(area), where=denominator > 0)
    if q.size == 0:
        return QualityReport(quality=q, minimum=np.nan, mean=np.nan)
    return QualityReport(quality=q, minimum=q.min(), mean=q.mean())


def euler_characteristic(mesh):
    """
    :math:`V - E + F` of the triangulated region.

    A simply connected mesh gives 1; a crack with shared end nodes removes
    one from it.
    """
    used = np.unique(mesh.triangles)
    return len(used) - len(mesh.edges()) + len(mesh.triangles)


def estimate_dofs(mesh, n=1):
    """
    Number of unknowns of the model the mesh is built for.

    Thin-shell meshes carry one potential per node (crack duplicates
    included) plus ``4n - 2`` internal sheet coefficients per crack node.
    Meshes without a crack carry one potential per node and one net-current
    multiplier when a shield volume is present.
    """
    if mesh.has_crack:
        crack_nodes = len(mesh.crack_pairs) + 2
        return int(len(mesh.nodes) + (4 * n - 2) * crack_nodes)
    extra = 1 if np.any(mesh.regions == Region.SHIELD) else 0
    return int(len(mesh.nodes) + extra)


def _size_function(features, outer_h, grading):
    def size(s):
        h = np.full_like(s, outer_h, dtype=np.float64)
        for lo, hi, hf in features:
            dist = np.maximum(np.maximum(lo - s, s - hi), 0.0)
            h = np.minimum(h, hf + grading * dist)
        return h
    return size


def _graded_axis(lo, hi, breakpoints, size, samples=512):
    points = np.unique(np.round(np.concatenate([[lo, hi], breakpoints]), 12))
    points = points[(points >= lo) & (points <= hi)]
    coords = [points[:1]]
    for a, b in zip(points[:-1], points[1:]):
        s = np.linspace(a, b, samples + 1)
        density = 1 / size(s)
        cumulative = np.concatenate([[0.0], np.cumsum(0.5 * (density[1:] + density[:-1]) * np.diff(s))])
        cells = max(1, int(np.ceil(cumulative[-1] - 1e-9)))
        targets = np.linspace(0.0, cumulative[-1], cells + 1)
        inner = np.interp(targets[1:-1], cumulative, s)
        coords.append(np.append(inner, b))
    return np.concatenate(coords)


def _nearest(axis, value):
    i = int(np.argmin(np.abs(axis - value)))
    if not np.isclose(axis[i], value, rtol=0, atol=1e-9):
        raise RuntimeError(f'Grid line at {value} is missing.')
    return i


def generate_mesh(geom, shield_surface_h, outer_h, through_thickness_layers=12,
                  wire_h=None, grading=0.2):
    """
    Graded triangular mesh of the shield benchmark.

    Parameters
    ----------
    geom : GeometrySpec
        Geometry. `resolve_shield_volume` selects the volume-resolved or the
        thin-shell (crack) mesh.
    shield_surface_h : float
        Element size along the shield (m).
    outer_h : float
        Largest element size, reached towards the outer boundary (m).
    through_thickness_layers : int, optional
        Element layers across the shield thickness (volume-resolved mesh).
    wire_h : float, optional
        Element size in the wires. Defaults to a quarter of the wire size.
    grading : float, optional
        Growth of the element size per unit distance from a feature.

    Returns
    -------
    Mesh2D

    Raises
    ------
    ValueError
        For non-positive or infeasible element sizes.
    """
    check_positive(shield_surface_h=shield_surface_h, outer_h=outer_h, grading=grading)
    if wire_h is None:
        wire_h = geom.wire_size / 4
    check_positive(wire_h=wire_h)
    width, height = geom.air_box
    if outer_h > min(width, height):
        raise ValueError(f'Outer element size {outer_h} exceeds the air box.')
    if geom.include_shield and shield_surface_h > geom.shield_width:
        raise ValueError(f'Shield element size {shield_surface_h} exceeds the shield width.')
    if wire_h > geom.wire_size:
        raise ValueError(f'Wire element size {wire_h} exceeds the wire size.')
    resolve = geom.include_shield and geom.resolve_shield_volume
    if resolve and (int(through_thickness_layers) != through_thickness_layers
                    or through_thickness_layers < 1):
        raise ValueError('At least one layer across the shield thickness is required.')

    half_l = 0.5 * geom.shield_width
    half_d = 0.5 * geom.shield_thickness
    half_w = 0.5 * geom.wire_size
    centers = geom.wire_centers
    y_bottom, y_top = geom.wire_bottom, geom.wire_top

    x_features = [(xc - half_w, xc + half_w, wire_h) for xc in centers[:, 0]]
    x_breaks = [c for xc in centers[:, 0] for c in (xc - half_w, xc, xc + half_w)]
    y_features = [(y_bottom, y_top, wire_h)]
    y_breaks = [y_bottom, y_top]
    if geom.include_shield:
        x_features.append((-half_l, half_l, shield_surface_h))
        x_breaks += [-half_l, half_l]
        if resolve:
            layer_h = geom.shield_thickness / through_thickness_layers
            y_features.append((-half_d, half_d, layer_h))
            y_breaks += list(np.linspace(-half_d, half_d, int(through_thickness_layers) + 1))
        else:
            y_features.append((0.0, 0.0, shield_surface_h))
            y_breaks.append(0.0)

    xs = _graded_axis(-0.5 * width, 0.5 * width, x_breaks, _size_function(x_features, outer_h, grading))
    ys = _graded_axis(-0.5 * height, 0.5 * height, y_breaks, _size_function(y_features, outer_h, grading))
    nx, ny = len(xs), len(ys)
    X, Y = np.meshgrid(xs, ys)
    nodes = np.column_stack([X.ravel(), Y.ravel()])

    def node(i, j):
        return j * nx + i

    i, j = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1))
    i, j = i.ravel(), j.ravel()
    n00, n10, n11, n01 = node(i, j), node(i + 1, j), node(i + 1, j + 1), node(i, j + 1)
    triangles = np.concatenate([np.column_stack([n00, n10, n11]),
                                np.column_stack([n00, n11, n01])])

    c = nodes[triangles].mean(axis=1)
    regions = np.full(len(triangles), Region.AIR, dtype=np.int64)
    if resolve:
        inside = (np.abs(c[:, 0]) < half_l) & (np.abs(c[:, 1]) < half_d)
        regions[inside] = Region.SHIELD
    for tag, (xc, yc) in zip((Region.WIRE_PLUS, Region.WIRE_MINUS), centers):
        inside = (np.abs(c[:, 0] - xc) < half_w) & (np.abs(c[:, 1] - yc) < half_w)
        regions[inside] = tag

    ring = np.concatenate([node(np.arange(nx - 1), 0),
                           node(nx - 1, np.arange(ny - 1)),
                           node(np.arange(nx - 1, 0, -1), ny - 1),
                           node(0, np.arange(ny - 1, 0, -1))])
    boundary_edges = np.column_stack([ring, np.roll(ring, -1)])

    cuts = []
    j_bottom = _nearest(ys, y_bottom)
    for xc in centers[:, 0]:
        ic = _nearest(xs, xc)
        cuts.append(node(ic, np.arange(j_bottom, -1, -1)))

    mesh = Mesh2D(nodes=nodes, triangles=triangles, regions=regions,
                  boundary_edges=boundary_edges,
                  boundary_tags=np.full(len(boundary_edges), BoundaryTag.OUTER),
                  cut_paths=tuple(cuts), geometry=geom)

    if geom.include_shield and not resolve:
        j0 = _nearest(ys, 0.0)
        ia, ib = _nearest(xs, -half_l), _nearest(xs, half_l)
        mesh = insert_crack(mesh, node(np.arange(ia, ib + 1), j0))

    expected = 0 if mesh.has_crack else 1
    chi = euler_characteristic(mesh)
    if chi != expected:
        raise TopologyError(f'Euler characteristic {chi} differs from the expected {expected}.')

    logger.info('generated mesh: %d nodes, %d triangles (%s)', len(mesh.nodes),
                len(mesh.triangles), 'volume' if resolve else 'thin shell')
    return mesh


def insert_crack(mesh, polyline):
    """
    Duplicate the interior nodes of a polyline of mesh edges.

    Triangles on the left of the polyline (above it, for a polyline running
    in +x) keep the original nodes; triangles on the right are renumbered to
    the duplicates. The end nodes are shared by both sides.

    Parameters
    ----------
    mesh : Mesh2D
        Mesh without a crack.
    polyline : array_like of int
        Node chain, at least two nodes, consecutive nodes joined by edges.

    Returns
    -------
    Mesh2D
        New mesh with `crack_pairs`, `crack_endpoints` and crack boundary
        edges populated.

    Raises
    ------
    ValueError
        When the polyline does not follow mesh edges.
    """
    polyline = np.asarray(polyline, dtype=np.int64)
    if polyline.ndim != 1 or polyline.size < 2:
        raise ValueError('A crack polyline needs at least two nodes.')
    if np.unique(polyline).size != polyline.size:
        raise ValueError('Crack polyline nodes must be distinct.')
    if mesh.has_crack:
        raise TopologyError('The mesh already has a crack.')
    edges = {tuple(e) for e in mesh.edges()}
    for a, b in zip(polyline[:-1], polyline[1:]):
        if (min(a, b), max(a, b)) not in edges:
            raise ValueError(f'Crack polyline is not edge-aligned between nodes {a} and {b}.')

    interior = polyline[1:-1]
    first_new = len(mesh.nodes)
    duplicates = np.arange(first_new, first_new + interior.size)
    nodes = np.concatenate([mesh.nodes, mesh.nodes[interior]])
    triangles = mesh.triangles.copy()

    points = mesh.nodes[polyline]
    centroids = mesh.centroids()
    for k, (old, new) in enumerate(zip(interior, duplicates), start=1):
        tangent = points[k + 1] - points[k - 1]
        normal = np.array([-tangent[1], tangent[0]])
        touching = np.flatnonzero(np.any(triangles == old, axis=1))
        side = (centroids[touching] - points[k]) @ normal
        below = touching[side < 0]
        rows = triangles[below]
        rows[rows == old] = new
        triangles[below] = rows

    plus = polyline
    minus = np.concatenate([polyline[:1], duplicates, polyline[-1:]])
    crack_edges = np.concatenate([np.column_stack([plus[:-1], plus[1:]]),
                                  np.column_stack([minus[:-1], minus[1:]])])
    tags = np.concatenate([np.full(len(plus) - 1, BoundaryTag.CRACK_PLUS),
                           np.full(len(minus) - 1, BoundaryTag.CRACK_MINUS)])

    return replace(mesh, nodes=nodes, triangles=triangles,
                   boundary_edges=np.concatenate([mesh.boundary_edges, crack_edges]),
                   boundary_tags=np.concatenate([mesh.boundary_tags, tags]),
                   crack_pairs=np.column_stack([interior, duplicates]),
                   crack_endpoints=polyline[[0, -1]])


class PointLocator:
    """
    Find the triangles containing query points.

    Parameters
    ----------
    mesh : Mesh2D
        Mesh to search.
    """
    def __init__(self, mesh):
        self.mesh = mesh
        p = mesh.nodes[mesh.triangles]
        self._origin = p[:, 0]
        jac = np.stack([p[:, 1] - p[:, 0], p[:, 2] - p[:, 0]], axis=-1)
        self._inverse = np.linalg.inv(jac)
        self._tree = scipy.spatial.cKDTree(p.mean(axis=1))

    def barycentric(self, elements, points):
        local = np.einsum('pij,pj->pi', self._inverse[elements], points - self._origin[elements])
        return np.column_stack([1 - local.sum(axis=1), local])

    def locate(self, points, mask=None, tol=1e-10):
        """
        Containing triangle and barycentric coordinates of each point.

        Parameters
        ----------
        points : array_like, shape (P, 2)
            Query points.
        mask : ndarray of bool, optional
            Restrict the search to triangles where `mask` is true.
        tol : float, optional
            Tolerance on negative barycentric coordinates.

        Returns
        -------
        elements : ndarray of int
            Triangle index per point; -1 when no triangle contains it.
        bary : ndarray, shape (P, 3)
            Barycentric coordinates.
        """
        points = np.atleast_2d(np.asarray(points, dtype=np.float64))
        count = len(points)
        elements = np.full(count, -1, dtype=np.int64)
        bary = np.zeros((count, 3))
        m = len(self.mesh.triangles)
        k = min(24, m)
        _, candidates = self._tree.query(points, k=k)
        candidates = candidates.reshape(count, k)
        for column in range(k):
            todo = np.flatnonzero(elements < 0)
            if todo.size == 0:
                break
            cand = candidates[todo, column]
            lam = self.barycentric(cand, points[todo])
            ok = np.all(lam >= -tol, axis=1)
            if mask is not None:
                ok &= mask[cand]
            elements[todo[ok]] = cand[ok]
            bary[todo[ok]] = lam[ok]

        allowed = np.arange(m) if mask is None else np.flatnonzero(mask)
        for index in np.flatnonzero(elements < 0):
            lam = self.barycentric(allowed, np.broadcast_to(points[index], (allowed.size, 2)))
            hits = np.flatnonzero(np.all(lam >= -tol, axis=1))
            if hits.size:
                elements[index] = allowed[hits[0]]
                bary[index] = lam[hits[0]]
        return elements, bary


_MAGIC = '# thinshell mesh 1'
_SECTIONS = ('META', 'NODES', 'TRIANGLES', 'EDGES', 'CRACK', 'CUTS')


def write_mesh(mesh, path):
    """
    Write a mesh in the line-oriented text format.

    The file holds the sections META, NODES, TRIANGLES, EDGES, CRACK and
    CUTS. Each section header carries its row count; rows are whitespace
    delimited and coordinates are written with 17 significant digits.
    """
    with open(path, 'w') as f:
        f.write(_MAGIC + '\n')
        meta = {} if mesh.geometry is None else mesh.geometry.as_dict()
        meta['has_crack'] = int(mesh.has_crack)
        f.write(f'META {len(meta)}\n')
        for key, value in meta.items():
            if isinstance(value, tuple):
                value = ' '.join(repr(float(v)) for v in value)
            elif isinstance(value, bool):
                value = int(value)
            elif isinstance(value, float):
                value = repr(value)
            f.write(f'{key} {value}\n')
        f.write(f'NODES {len(mesh.nodes)}\n')
        np.savetxt(f, mesh.nodes, fmt='%.17g')
        f.write(f'TRIANGLES {len(mesh.triangles)}\n')
        np.savetxt(f, np.column_stack([mesh.triangles, mesh.regions]), fmt='%d')
        f.write(f'EDGES {len(mesh.boundary_edges)}\n')
        np.savetxt(f, np.column_stack([mesh.boundary_edges, mesh.boundary_tags]), fmt='%d')
        f.write(f'CRACK {len(mesh.crack_pairs)}\n')
        if mesh.has_crack:
            f.write(f'endpoints {mesh.crack_endpoints[0]} {mesh.crack_endpoints[1]}\n')
            np.savetxt(f, mesh.crack_pairs, fmt='%d')
        f.write(f'CUTS {len(mesh.cut_paths)}\n')
        for path_nodes in mesh.cut_paths:
            f.write(' '.join(str(v) for v in path_nodes) + '\n')
        f.write('END\n')


def _parse_block(lines, start, count, columns, dtype, section):
    block = lines[start:start + count]
    if len(block) < count:
        raise MeshFormatError(f'Expected {count} rows, found {len(block)}',
                              line=start + len(block) + 1, section=section)
    try:
        values = np.array(' '.join(block).split(), dtype=dtype)
        if values.size == count * columns:
            return values.reshape(count, columns)
    except ValueError:
        pass
    for offset, text in enumerate(block):
        tokens = text.split()
        try:
            np.array(tokens, dtype=dtype)
        except ValueError:
            raise MeshFormatError('Malformed value', line=start + offset + 1, section=section)
        if len(tokens) != columns:
            raise MeshFormatError(f'Expected {columns} values, found {len(tokens)}',
                                  line=start + offset + 1, section=section)
    raise MeshFormatError('Malformed block', line=start + 1, section=section)


def read_mesh(path):
    """
    Read a mesh written by :func:`write_mesh`.

    Raises
    ------
    MeshFormatError
        With the line number and section of the first problem.
    """
    with open(path) as f:
        lines = f.read().splitlines()
    if not lines or lines[0].strip() != _MAGIC:
        raise MeshFormatError('Not a thinshell mesh file', line=1)

    found = {}
    meta = {}
    cuts = []
    i = 1
    while i < len(lines):
        header = lines[i].split()
        if not header:
            i += 1
            continue
        name = header[0]
        if name == 'END':
            break
        if name not in _SECTIONS or len(header) != 2 or not header[1].isdigit():
            raise MeshFormatError(f'Unexpected section header "{lines[i]}"', line=i + 1)
        count = int(header[1])
        start = i + 1
        if name == 'META':
            for offset, text in enumerate(lines[start:start + count]):
                tokens = text.split()
                if not tokens:
                    raise MeshFormatError('Empty entry', line=start + offset + 1, section=name)
                meta[tokens[0]] = tokens[1:]
            i = start + count
        elif name == 'NODES':
            found[name] = _parse_block(lines, start, count, 2, np.float64, name)
            i = start + count
        elif name in ('TRIANGLES', 'EDGES'):
            columns = 4 if name == 'TRIANGLES' else 3
            found[name] = _parse_block(lines, start, count, columns, np.int64, name)
            i = start + count
        elif name == 'CRACK':
            endpoints = np.zeros(0, dtype=np.int64)
            if start < len(lines) and lines[start].startswith('endpoints'):
                tokens = lines[start].split()
                if len(tokens) != 3:
                    raise MeshFormatError('Expected two end nodes', line=start + 1, section=name)
                endpoints = np.array(tokens[1:], dtype=np.int64)
                start += 1
            found[name] = (endpoints, _parse_block(lines, start, count, 2, np.int64, name))
            i = start + count
        elif name == 'CUTS':
            for offset, text in enumerate(lines[start:start + count]):
                try:
                    cuts.append(np.array(text.split(), dtype=np.int64))
                except ValueError:
                    raise MeshFormatError('Malformed cut path', line=start + offset + 1, section=name)
            found[name] = True
            i = start + count

    for name in ('NODES', 'TRIANGLES', 'EDGES', 'CUTS'):
        if name not in found:
            raise MeshFormatError(f'Missing section {name}', section=name)
    has_crack = meta.get('has_crack', ['0'])[0] == '1'
    if has_crack and 'CRACK' not in found:
        raise MeshFormatError('Missing section CRACK', section='CRACK')

    geometry = None
    names = {f.name: f for f in fields(GeometrySpec)}
    if names.keys() <= meta.keys():
        kwargs = {}
        for key in names:
            tokens = meta[key]
            if key == 'air_box':
                kwargs[key] = tuple(float(t) for t in tokens)
            elif key in ('resolve_shield_volume', 'include_shield'):
                kwargs[key] = tokens[0] == '1'
            else:
                kwargs[key] = float(tokens[0])
        geometry = GeometrySpec(**kwargs)

    endpoints, pairs = found.get('CRACK', (np.zeros(0, dtype=np.int64), np.zeros((0, 2), dtype=np.int64)))
    triangles = found['TRIANGLES']
    edges = found['EDGES']
    return Mesh2D(nodes=found['NODES'], triangles=triangles[:, :3], regions=triangles[:, 3],
                  boundary_edges=edges[:, :2], boundary_tags=edges[:, 2],
                  crack_pairs=pairs, crack_endpoints=endpoints,
                  cut_paths=tuple(cuts), geometry=geometry)
