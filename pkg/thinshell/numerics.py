"""
============================================
Numerical kernel (:mod:`thinshell.numerics`)
============================================

.. currentmodule:: thinshell.numerics

Quadrature, sparse linear systems, time grids and the Newton-Raphson driver
shared by the 1-D and 2-D solvers.

.. rubric:: Functions

.. autosummary::
    :toctree: generated/

    gauss_legendre
    composite_rule
    factorize
    solve_sparse
    newton_solve

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    QuadratureRule
    SparseSystem
    Factorization
    TimeGrid
    NewtonSettings
    NewtonResult
    FactorizationError
"""

from dataclasses import dataclass, field
import logging
import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg
import threading

from thinshell.lib.util import check_positive, choice_error_msg

logger = logging.getLogger(__name__)


class FactorizationError(RuntimeError):
    """
    A matrix could not be factorised because it is (numerically) singular.

    Attributes
    ----------
    pivot : int
        Index of the first zero pivot, or -1 when it could not be located.
    """
    def __init__(self, pivot, message=None):
        self.pivot = int(pivot)
        if message is None:
            message = f'Matrix is singular (zero pivot at index {self.pivot}).'
        super().__init__(message)


@dataclass(frozen=True)
class QuadratureRule:
    """
    Quadrature nodes and weights on the reference interval [-1, 1].

    Attributes
    ----------
    points : ndarray
        Abscissae, strictly increasing.
    weights : ndarray
        Positive weights, summing to 2.
    """

    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        if np.shape(self.points) != np.shape(self.weights):
            raise ValueError('Quadrature points and weights must have the same shape.')

    @property
    def order(self):
        return len(self.points)

    def on_interval(self, a, b):
        """
        Map the rule onto `[a, b]`.

        Returns
        -------
        x, w : ndarray
            Mapped points and scaled weights.
        """
        half = 0.5 * (b - a)
        return 0.5 * (a + b) + half * self.points, half * self.weights

    def integrate(self, fn, a=-1.0, b=1.0):
        """
        Integrate the vectorised callable `fn` over `[a, b]`.
        """
        x, w = self.on_interval(a, b)
        return np.sum(w * fn(x), axis=-1)


def gauss_legendre(order):
    """
    Gauss-Legendre rule with `order` points.

    Parameters
    ----------
    order : int
        Number of points, at least 1.

    Returns
    -------
    QuadratureRule
        Rule exact for polynomials up to degree ``2*order - 1``.

    Notes
    -----
    The nodes are the roots of the Legendre polynomial of degree `order`,
    found by Newton iteration from the asymptotic guess
    :math:`\\cos(\\pi (i - 1/4) / (n + 1/2))`. The polynomial and its
    derivative are evaluated with the three-term recurrence, and the weights
    are :math:`2 / ((1 - x_i^2) P_n'(x_i)^2)`. Nodes and weights are
    symmetrised after convergence.

    Examples
    --------
    >>> rule = gauss_legendre(2)
    >>> rule.points
    array([-0.57735027,  0.57735027])
    """
    if int(order) != order or order < 1:
        raise ValueError(f'Quadrature order must be an integer >= 1 (got {order}).')
    n = int(order)

    def legendre(x):
        p_prev, p = np.ones_like(x), x.copy()
        for k in range(1, n):
            p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        dp = n * (x * p - p_prev) / (x**2 - 1)
        return p, dp

    i = np.arange(1, n + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = legendre(x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) <= 1e-15:
            break
    _, dp = legendre(x)
    w = 2 / ((1 - x**2) * dp**2)

    x, w = x[::-1], w[::-1]
    x = 0.5 * (x - x[::-1])
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(points=x, weights=w)


def composite_rule(a, b, subintervals, order):
    """
    Composite Gauss-Legendre nodes and weights on `[a, b]`.

    Parameters
    ----------
    a, b : float
        Interval ends, ``a < b``.
    subintervals : int
        Number of equal panels.
    order : int
        Points per panel.

    Returns
    -------
    x, w : ndarray
        Increasing nodes and their weights, ``subintervals * order`` of each.
    """
    if subintervals < 1:
        raise ValueError(f'Number of subintervals must be >= 1 (got {subintervals}).')
    rule = gauss_legendre(order)
    edges = np.linspace(a, b, int(subintervals) + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    x = mid[:, None] + half[:, None] * rule.points[None, :]
    w = half[:, None] * rule.weights[None, :]
    return x.ravel(), w.ravel()


class SparseSystem:
    """
    Coordinate-format accumulator for a square linear system.

    Contributions are appended as (row, col, value) triplets and summed when
    the system is finalised, so element contributions may be added in any
    order and from several threads.

    Parameters
    ----------
    dimension : int
        Number of rows and columns.
    dtype : {float, complex}
        Value type of the matrix and right-hand side.
    """
    def __init__(self, dimension, dtype=np.float64):
        if int(dimension) != dimension or dimension < 1:
            raise ValueError(f'System dimension must be a positive integer (got {dimension}).')
        self.dimension = int(dimension)
        self.dtype = np.dtype(dtype)
        self.rhs = np.zeros(self.dimension, dtype=self.dtype)
        self._rows = []
        self._cols = []
        self._vals = []
        self._lock = threading.Lock()

    def _check(self, idx):
        if idx.size and (idx.min() < 0 or idx.max() >= self.dimension):
            raise ValueError(
                f'Index out of range for a system of dimension {self.dimension}.')

    def add(self, rows, cols, values):
        """
        Append triplets. `rows`, `cols` and `values` are broadcast together.
        """
        rows, cols, values = np.broadcast_arrays(
            np.asarray(rows, dtype=np.int64),
            np.asarray(cols, dtype=np.int64),
            np.asarray(values))
        rows, cols = rows.ravel(), cols.ravel()
        self._check(rows)
        self._check(cols)
        if np.iscomplexobj(values) and self.dtype.kind != 'c':
            raise ValueError('Complex values added to a real system.')
        with self._lock:
            self._rows.append(rows.copy())
            self._cols.append(cols.copy())
            self._vals.append(values.ravel().astype(self.dtype))

    def add_block(self, dofs, block):
        """
        Add dense local blocks.

        Parameters
        ----------
        dofs : array_like of int, shape (..., k)
            Global indices of the local unknowns.
        block : array_like, shape (..., k, k)
            Local matrices.
        """
        dofs = np.asarray(dofs, dtype=np.int64)
        k = dofs.shape[-1]
        rows = np.broadcast_to(dofs[..., :, None], dofs.shape[:-1] + (k, k))
        cols = np.broadcast_to(dofs[..., None, :], dofs.shape[:-1] + (k, k))
        self.add(rows, cols, block)

    def add_rhs(self, rows, values):
        rows = np.asarray(rows, dtype=np.int64).ravel()
        self._check(rows)
        with self._lock:
            np.add.at(self.rhs, rows, np.asarray(values).ravel())

    def finalize(self):
        """
        Sum duplicate triplets and return the matrix in CSC format.
        """
        with self._lock:
            if self._rows:
                rows = np.concatenate(self._rows)
                cols = np.concatenate(self._cols)
                vals = np.concatenate(self._vals)
            else:
                rows = cols = np.zeros(0, dtype=np.int64)
                vals = np.zeros(0, dtype=self.dtype)
        shape = (self.dimension, self.dimension)
        matrix = scipy.sparse.coo_matrix((vals, (rows, cols)), shape=shape)
        return matrix.tocsc()


def _singular_pivot(matrix):
    """
    Locate the first zero pivot of a singular matrix, or -1.
    """
    csc = scipy.sparse.csc_matrix(matrix)
    empty_cols = np.flatnonzero(np.diff(csc.indptr) == 0)
    empty_rows = np.flatnonzero(np.diff(csc.tocsr().indptr) == 0)
    candidates = np.concatenate([empty_cols, empty_rows])
    if candidates.size:
        return int(candidates.min())
    n = csc.shape[0]
    if n <= 2000:
        _, _, u = scipy.linalg.lu(csc.toarray())
        d = np.abs(np.diag(u))
        idx = np.flatnonzero(d <= n * np.finfo(float).eps * max(d.max(), 1.0))
        if idx.size:
            return int(idx[0])
    return -1


@dataclass
class Factorization:
    """
    LU factors of a square matrix, reusable for several right-hand sides.

    Attributes
    ----------
    shape : tuple
        Matrix shape.
    sparse : bool
        Whether the factors come from SuperLU.
    """

    shape: tuple
    sparse: bool
    _factors: object = field(repr=False)

    def solve(self, b):
        b = np.asarray(b)
        if self.sparse:
            return self._factors.solve(b)
        else:
            return scipy.linalg.lu_solve(self._factors, b)


def factorize(matrix):
    """
    Factorise a dense or sparse square matrix.

    Parameters
    ----------
    matrix : ndarray or scipy.sparse matrix
        Square system matrix.

    Returns
    -------
    Factorization

    Raises
    ------
    FactorizationError
        When the matrix is singular. The exception carries the pivot index.
    """
    if matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f'Matrix must be square (got shape {matrix.shape}).')

    if scipy.sparse.issparse(matrix):
        csc = scipy.sparse.csc_matrix(matrix)
        try:
            factors = scipy.sparse.linalg.splu(csc, permc_spec='MMD_AT_PLUS_A')
        except RuntimeError as e:
            raise FactorizationError(_singular_pivot(csc)) from e
        return Factorization(shape=csc.shape, sparse=True, _factors=factors)
    else:
        dense = np.asarray(matrix)
        lu, piv = scipy.linalg.lu_factor(dense, check_finite=True)
        zero = np.flatnonzero(np.diag(lu) == 0)
        if zero.size:
            raise FactorizationError(zero[0])
        return Factorization(shape=dense.shape, sparse=False, _factors=(lu, piv))


def solve_sparse(system):
    """
    Solve a :class:`SparseSystem` by direct LU factorisation.

    Parameters
    ----------
    system : SparseSystem
        Assembled system.

    Returns
    -------
    ndarray
        Solution vector.

    Raises
    ------
    FactorizationError
        When the matrix is singular.
    """
    matrix = system.finalize()
    return factorize(matrix).solve(system.rhs)


@dataclass(frozen=True)
class TimeGrid:
    """
    Uniform time grid for implicit Euler stepping.

    Attributes
    ----------
    t_max : float
        Final time (s).
    steps : int
        Number of steps.
    scheme : {'implicit-euler'}
        Time discretisation.
    """

    t_max: float
    steps: int
    scheme: str = 'implicit-euler'

    def __post_init__(self):
        check_positive(t_max=self.t_max, steps=self.steps)
        if int(self.steps) != self.steps:
            raise ValueError(f'Number of steps must be an integer (got {self.steps}).')
        if self.scheme != 'implicit-euler':
            raise ValueError(choice_error_msg('scheme', self.scheme, ['implicit-euler']))

    @property
    def dt(self):
        return self.t_max / self.steps

    @property
    def times(self):
        return np.linspace(0.0, self.t_max, int(self.steps) + 1)


@dataclass(frozen=True)
class NewtonSettings:
    """
    Stopping rule for :func:`newton_solve`.

    Attributes
    ----------
    max_iterations : int
        Iteration cap.
    relative_residual_tol : float
        Convergence when the residual norm falls below this fraction of the
        initial residual norm.
    absolute_residual_tol : float
        Convergence when the residual norm falls below this value. Zero
        disables the absolute test.
    """

    max_iterations: int = 12
    relative_residual_tol: float = 1e-6
    absolute_residual_tol: float = 0.0

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(
                f'Maximum iterations must be >= 1 (got {self.max_iterations}).')
        check_positive(relative_residual_tol=self.relative_residual_tol)
        if self.absolute_residual_tol < 0:
            raise ValueError('Absolute residual tolerance must be non-negative.')


@dataclass
class NewtonResult:
    """
    Result of a Newton-Raphson solve.

    The type is iterable, and iterates over the solution, the iteration count
    and the convergence flag (in that order).

    Attributes
    ----------
    x : ndarray
        Last iterate.
    iterations : int
        Number of Newton updates applied.
    converged : bool
        Whether the stopping rule was met.
    residuals : list of float
        Residual norms, starting with the initial residual.
    """

    x: np.ndarray
    iterations: int
    converged: bool
    residuals: list = field(default_factory=list, repr=False)

    def __iter__(self):
        return iter((self.x, self.iterations, self.converged))


def newton_solve(residual_and_jacobian, x0, settings=None):
    """
    Newton-Raphson iteration on a vector residual.

    Parameters
    ----------
    residual_and_jacobian : callable
        ``f(x) -> (r, J)`` returning the residual vector and its Jacobian
        (dense array or sparse matrix).
    x0 : array_like
        Initial iterate.
    settings : NewtonSettings, optional
        Stopping rule. Defaults to ``NewtonSettings()``.

    Returns
    -------
    NewtonResult

    Raises
    ------
    FactorizationError
        When a Jacobian is singular.

    Examples
    --------
    >>> f = lambda x: (x**2 - 4, np.array([[2 * x[0]]]))
    >>> x, iterations, converged = newton_solve(f, np.array([3.0]))
    """
    if settings is None:
        settings = NewtonSettings()

    x = np.array(x0, copy=True)
    r, jac = residual_and_jacobian(x)
    r0 = np.linalg.norm(r)
    residuals = [r0]
    if r0 == 0 or r0 <= settings.absolute_residual_tol:
        return NewtonResult(x, 0, True, residuals)

    for iteration in range(1, settings.max_iterations + 1):
        dx = factorize(jac).solve(-np.asarray(r))
        x = x + dx
        r, jac = residual_and_jacobian(x)
        norm = np.linalg.norm(r)
        residuals.append(norm)
        logger.debug('newton iteration %d: residual %.3e (relative %.3e)',
                     iteration, norm, norm / r0)
        if norm <= settings.relative_residual_tol * r0 or norm <= settings.absolute_residual_tol:
            return NewtonResult(x, iteration, True, residuals)

    return NewtonResult(x, settings.max_iterations, False, residuals)
