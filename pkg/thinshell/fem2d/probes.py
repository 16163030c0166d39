"""
Probes and losses

.. :currentmodule:`thinshell.fem2d`

Field samples along lines, at points and through the shield thickness, loss
integrals and the relative difference between two sampled series.
"""

from dataclasses import dataclass, field
import numpy as np
import pandas as pd

from thinshell.fem2d.solution import COMPONENTS, FieldSolution
from thinshell.lib.util import choice_error_msg
from thinshell.mesh2d import Mesh2D, estimate_dofs


class UndefinedMetricError(ValueError):
    """
    The relative difference is undefined for a zero reference.
    """


@dataclass
class ProbeSeries:
    """
    Sampled field component.

    Attributes
    ----------
    name : str
        Probe name.
    kind : {'line', 'point', 'depth'}
        Sampling geometry.
    component : str
        Field component, one of 'hx', 'hy', 'h', 'bx', 'by', 'b'.
    coordinate_name : str
        Meaning of `coordinate`: 'distance' (m) along a line, 'y' (m) across
        the shield, 'time' (s) or 'frequency' (Hz) at a point.
    coordinate : ndarray
        Sample coordinates.
    values : ndarray
        Samples, complex for harmonic solutions.
    points : ndarray, shape (P, 2)
        Sample positions (m).
    """

    name: str
    kind: str
    component: str
    coordinate_name: str
    coordinate: np.ndarray = field(repr=False)
    values: np.ndarray = field(repr=False)
    points: np.ndarray = field(repr=False)

    @property
    def is_complex(self):
        return np.iscomplexobj(self.values)

    def to_frame(self):
        """
        Table with columns `coordinate_name`, 'value' and, for phasors,
        'imag'.
        """
        data = {self.coordinate_name: self.coordinate}
        if self.is_complex:
            data['value'] = self.values.real
            data['imag'] = self.values.imag
        else:
            data['value'] = self.values
        return pd.DataFrame(data)


def _check_component(component):
    if component not in COMPONENTS:
        raise ValueError(choice_error_msg('component', component, list(COMPONENTS)))


def probe_line(sol, segment, component='b', samples=201, step=-1, name='line'):
    """
    Field component at equally spaced points of a segment.

    Parameters
    ----------
    sol : FieldSolution
        Solution.
    segment : array_like, shape (2, 2)
        Start and end points (m).
    component : str
        Field component.
    samples : int
        Number of points, end points included.
    step : int
        Time step of transient solutions; the last one by default.
    name : str
        Probe name.

    Returns
    -------
    ProbeSeries
        Samples against the distance from the start point.

    Raises
    ------
    ValueError
        When the segment leaves the domain.
    """
    _check_component(component)
    if samples < 2:
        raise ValueError(f'A line probe needs at least two samples (got {samples}).')
    a, b = np.asarray(segment, dtype=np.float64).reshape(2, 2)
    s = np.linspace(0.0, 1.0, int(samples))
    points = a + s[:, None] * (b - a)
    values = sol.component_at(points, component, step=step)[0]
    return ProbeSeries(name=name, kind='line', component=component, coordinate_name='distance',
                       coordinate=s * np.linalg.norm(b - a), values=values, points=points)


def probe_point(sol, point, component='hy', name='point'):
    """
    Field component at one point: the time series of a transient solution
    or the phasor of a harmonic one.
    """
    _check_component(component)
    points = np.asarray(point, dtype=np.float64).reshape(1, 2)
    values = sol.component_at(points, component)[:, 0]
    if sol.is_harmonic:
        coordinate_name, coordinate = 'frequency', np.array([sol.frequency])
    else:
        coordinate_name, coordinate = 'time', sol.times
    return ProbeSeries(name=name, kind='point', component=component,
                       coordinate_name=coordinate_name, coordinate=coordinate,
                       values=values, points=points)


def probe_depth(sol, x, component='hx', samples=21, step=-1, name='depth'):
    """
    Field component across the shield thickness at abscissa `x`.

    The thin-shell model evaluates its through-thickness expansion. The
    reference model interpolates the field recovered on the shield
    triangles.

    Parameters
    ----------
    sol : FieldSolution
        Solution of a run with a shield.
    x : float
        Abscissa (m).
    component : str
        Field component.
    samples : int
        Number of depths from the lower to the upper shield face.
    step : int
        Time step of transient solutions.
    name : str
        Probe name.

    Returns
    -------
    ProbeSeries
        Samples against y (m).
    """
    _check_component(component)
    geometry = sol.mesh.geometry
    if geometry is None or not geometry.include_shield:
        raise ValueError('Depth probes need a mesh with a shield.')
    half = 0.5 * geometry.shield_thickness
    y = np.linspace(-half, half, int(samples))
    points = np.column_stack([np.full_like(y, x), y])
    region_class = 1 if sol.model == 'reference' else None
    values = sol.component_at(points, component, step=step, region_class=region_class)[0]
    return ProbeSeries(name=name, kind='depth', component=component, coordinate_name='y',
                       coordinate=y, values=values, points=points)


def circulation(sol, polyline, samples=20000, step=None):
    """
    Line integral of h along a closed polyline.

    Parameters
    ----------
    sol : FieldSolution
        Solution.
    polyline : array_like, shape (K, 2)
        Vertices; the last one is joined back to the first.
    samples : int
        Total number of midpoint-rule intervals.
    step : int, optional
        Single time step. All steps by default.

    Returns
    -------
    ndarray, shape (S,)
        Circulation (A) per state.
    """
    vertices = np.asarray(polyline, dtype=np.float64).reshape(-1, 2)
    ends = np.roll(vertices, -1, axis=0)
    lengths = np.linalg.norm(ends - vertices, axis=1)
    counts = np.maximum(1, np.round(samples * lengths / lengths.sum()).astype(int))

    points, steps = [], []
    for a, b, count in zip(vertices, ends, counts):
        t = (np.arange(count) + 0.5) / count
        points.append(a + t[:, None] * (b - a))
        steps.append(np.broadcast_to((b - a) / count, (count, 2)))
    points, steps = np.concatenate(points), np.concatenate(steps)

    h = sol.raw_field_at(points, step=step)
    return np.einsum('spd,pd->s', h, steps)


def step_losses(sol):
    """
    Joule loss per unit length at each step (W/m).
    """
    return sol.losses()


def total_loss(sol):
    """
    Energy dissipated over a transient run (J/m), or the time-averaged
    loss of a harmonic solution (W/m).
    """
    losses = sol.losses()
    if sol.is_harmonic:
        return float(losses[0])
    return float(np.sum(np.diff(sol.times) * losses[1:]))


def relative_difference(series, reference):
    """
    Relative difference :math:`100 \\lVert a - b \\rVert_2 / \\lVert b \\rVert_2`
    in percent.

    Parameters
    ----------
    series : array_like or ProbeSeries
        Values to assess.
    reference : array_like or ProbeSeries
        Reference values of the same length. Complex values are compared
        as phasors.

    Returns
    -------
    float

    Raises
    ------
    UndefinedMetricError
        When the reference norm is zero.

    Examples
    --------
    >>> relative_difference([1.5, 3.0], [1.0, 2.0])
    50.0
    """
    a = np.ravel(series.values if isinstance(series, ProbeSeries) else series)
    b = np.ravel(reference.values if isinstance(reference, ProbeSeries) else reference)
    if a.shape != b.shape:
        raise ValueError(f'Series lengths differ ({a.size} and {b.size}).')
    norm = np.linalg.norm(b)
    if norm == 0:
        raise UndefinedMetricError('Relative difference is undefined for a zero reference.')
    return float(100 * np.linalg.norm(a - b) / norm)


def dof_count(target, n=1):
    """
    Number of unknowns of a solution, or of the model a mesh is built for
    with `n` harmonic ranks.
    """
    if isinstance(target, FieldSolution):
        return int(target.dofs)
    if isinstance(target, Mesh2D):
        return estimate_dofs(target, n)
    raise TypeError(f'Expected a FieldSolution or Mesh2D (got {type(target).__name__}).')


@dataclass(frozen=True)
class ProbeSpec:
    """
    Named probe location.

    Attributes
    ----------
    name : str
        Name used in file names and comparisons.
    kind : {'line', 'point', 'depth'}
        Sampling geometry.
    component : str
        Field component.
    location : tuple
        Segment end points (line), point (point) or abscissa (depth).
    """

    name: str
    kind: str
    component: str
    location: tuple

    def __post_init__(self):
        if self.kind not in ('line', 'point', 'depth'):
            raise ValueError(choice_error_msg('kind', self.kind, ['line', 'point', 'depth']))
        _check_component(self.component)

    def evaluate(self, sol, samples=None):
        if self.kind == 'line':
            return probe_line(sol, self.location, self.component, samples or 201, name=self.name)
        if self.kind == 'point':
            return probe_point(sol, self.location, self.component, name=self.name)
        return probe_depth(sol, self.location, self.component, samples or 21, name=self.name)


def standard_probes(geometry):
    """
    Probe lines AA', BB', CC' and points P1, P2, P3 of the shield benchmark.

    AA' and CC' are vertical lines at the centre and near the shield edge,
    BB' is horizontal above the shield. P1 records h_y above the shield
    centre, P2 and P3 record h_x across the shield thickness.
    """
    width = geometry.shield_width
    edge = width / 2 - width / 100
    low, high = -0.09, 0.49
    return {
        'AA': ProbeSpec('AA', 'line', 'b', ((0.0, low), (0.0, high))),
        'BB': ProbeSpec('BB', 'line', 'b', ((-width / 2, 0.10), (width / 2, 0.10))),
        'CC': ProbeSpec('CC', 'line', 'b', ((edge, low), (edge, high))),
        'P1': ProbeSpec('P1', 'point', 'hy', (0.0, 0.10)),
        'P2': ProbeSpec('P2', 'depth', 'hx', width / 4),
        'P3': ProbeSpec('P3', 'depth', 'hx', edge),
    }
