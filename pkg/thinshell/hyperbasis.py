"""
====================================================
Hyperbolic sheet basis (:mod:`thinshell.hyperbasis`)
====================================================

.. currentmodule:: thinshell.hyperbasis

Through-thickness shape functions for thin conducting sheets.

A sheet of thickness :math:`d` occupies :math:`-d/2 \\le y \\le d/2`. In the
harmonic regime the tangential field inside it is a combination of

.. math::

    \\psi^\\pm(y) = \\frac{\\sinh(a d/2 \\pm a y)}{\\sinh(a d)},
    \\qquad a = \\frac{1 + j}{\\delta},

where :math:`\\delta` is the skin depth. A :class:`BasisSet` collects the real
and imaginary parts of these functions at several frequencies. Each set has
``4n`` functions ordered as

    [c1+ .. cn+, s1+ .. sn+, c1- .. cn-, s1- .. sn-]

where ``ck`` is the cosine (real) part and ``sk`` the sine (imaginary) part of
the k-th frequency. The first cosine on each side is one on its own face and
zero on the other. Every other function vanishes on both faces.

.. rubric:: Functions

.. autosummary::
    :toctree: generated/

    skin_depth
    psi
    dpsi
    build_basis
    eval_theta
    eval_dtheta
    classical_ibc
    lagrange_hats

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    SheetSpec
    BasisSet
    ImpedanceCoefficients
"""

from collections.abc import Sequence
from dataclasses import dataclass, field
import numpy as np

from thinshell.constants import MU0
from thinshell.lib.util import check_positive, choice_error_msg, side_sign


@dataclass(frozen=True)
class SheetSpec:
    """
    Thin sheet parameters.

    Attributes
    ----------
    thickness : float
        Sheet thickness `d` (m).
    mu : float
        Permeability (H/m). For saturable materials this is the value the
        basis is parametrised at.
    sigma : float
        Conductivity (S/m).
    """

    thickness: float
    mu: float
    sigma: float

    def __post_init__(self):
        check_positive(thickness=self.thickness, mu=self.mu, sigma=self.sigma)

    @classmethod
    def from_relative(cls, thickness, mu_r, sigma):
        return cls(thickness=thickness, mu=mu_r * MU0, sigma=sigma)

    @property
    def rho(self):
        return 1 / self.sigma

    @property
    def mu_r(self):
        return self.mu / MU0

    def check_inside(self, y):
        y = np.asarray(y, dtype=np.float64)
        half = 0.5 * self.thickness
        if np.any(np.abs(y) > half * (1 + 1e-12)):
            raise ValueError(
                f'Positions must lie inside the sheet [{-half}, {half}].')
        return np.clip(y, -half, half)


def skin_depth(mu, sigma, f):
    """
    Skin depth :math:`\\sqrt{2 / (\\mu \\sigma \\omega)}`.

    Parameters
    ----------
    mu : float or array_like
        Permeability (H/m).
    sigma : float or array_like
        Conductivity (S/m).
    f : float or array_like
        Frequency (Hz).

    Returns
    -------
    float or ndarray
        Skin depth (m).

    Examples
    --------
    Copper-like sheet at mains frequency:

    >>> skin_depth(MU0, 1e6, 50)
    0.0711762...
    """
    check_positive(mu=mu, sigma=sigma, f=f)
    return np.sqrt(2 / (np.asarray(mu) * sigma * 2 * np.pi * np.asarray(f)))


def _wavenumber(sheet, f):
    return (1 + 1j) / skin_depth(sheet.mu, sheet.sigma, f)


def _cexpm1(w):
    """
    `exp(w) - 1` for complex `w`, accurate when `w` is small.
    """
    w = np.asarray(w, dtype=np.complex128)
    x, y = w.real, w.imag
    re = np.expm1(x) * np.cos(y) - 2 * np.sin(0.5 * y)**2
    im = np.exp(x) * np.sin(y)
    return re + 1j * im


def _sinh_ratio(u, v):
    # sinh(u)/sinh(v) for 0 <= Re(u) <= Re(v)
    return np.exp(u - v) * _cexpm1(-2 * u) / _cexpm1(-2 * v)


def _cosh_sinh_ratio(u, v):
    # cosh(u)/sinh(v) for 0 <= Re(u) <= Re(v)
    return -np.exp(u - v) * (2 + _cexpm1(-2 * u)) / _cexpm1(-2 * v)


def _tanh(z):
    # tanh(z) for Re(z) >= 0
    em1 = _cexpm1(-2 * z)
    return -em1 / (2 + em1)


def psi(sheet, f, side, y):
    """
    Harmonic sheet profile :math:`\\psi^\\pm(y)`.

    Parameters
    ----------
    sheet : SheetSpec
        Sheet parameters.
    f : float
        Frequency (Hz).
    side : {'+', '-'}
        Face on which the profile equals one.
    y : float or array_like
        Positions inside the sheet (m).

    Returns
    -------
    complex or ndarray
        Profile values.

    Notes
    -----
    The ratio of hyperbolic sines is evaluated with the dominant exponential
    factored out of numerator and denominator, so thick sheets (|a|d in the
    thousands) do not overflow.
    """
    s = side_sign(side)
    y = sheet.check_inside(y)
    a = _wavenumber(sheet, f)
    d = sheet.thickness
    return _sinh_ratio(a * (0.5 * d + s * y), a * d)


def dpsi(sheet, f, side, y):
    """
    Derivative :math:`\\partial_y \\psi^\\pm(y)` (1/m).
    """
    s = side_sign(side)
    y = sheet.check_inside(y)
    a = _wavenumber(sheet, f)
    d = sheet.thickness
    return s * a * _cosh_sinh_ratio(a * (0.5 * d + s * y), a * d)


def lagrange_hats(sheet, y):
    """
    Linear hats :math:`(d/2 \\pm y)/d`, the thin-sheet limit of the first
    cosine pair.

    Returns
    -------
    hat_plus, hat_minus : ndarray
    """
    y = sheet.check_inside(y)
    d = sheet.thickness
    return (0.5 * d + y) / d, (0.5 * d - y) / d


@dataclass(frozen=True)
class BasisSet:
    """
    The ``4n`` real through-thickness shape functions of a sheet.

    Attributes
    ----------
    sheet : SheetSpec
        Sheet the functions are parametrised on.
    f1 : float
        Fundamental frequency (Hz).
    harmonic_ranks : tuple of float
        Frequency multipliers, ``f_k = harmonic_ranks[k-1] * f1``.
    """

    sheet: SheetSpec
    f1: float
    harmonic_ranks: tuple
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)
    deltas: np.ndarray = field(init=False, repr=False, compare=False)
    wavenumbers: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        check_positive(f1=self.f1)
        ranks = np.asarray(self.harmonic_ranks, dtype=np.float64)
        if ranks.ndim != 1 or ranks.size < 1:
            raise ValueError('At least one harmonic rank is required.')
        check_positive(harmonic_ranks=ranks)
        if np.unique(ranks).size != ranks.size:
            raise ValueError(f'Duplicate frequencies in ranks {tuple(ranks)}.')
        frequencies = self.f1 * ranks
        deltas = skin_depth(self.sheet.mu, self.sheet.sigma, frequencies)
        object.__setattr__(self, 'harmonic_ranks', tuple(ranks.tolist()))
        object.__setattr__(self, 'frequencies', frequencies)
        object.__setattr__(self, 'deltas', deltas)
        object.__setattr__(self, 'wavenumbers', (1 + 1j) / deltas)

    @property
    def n(self):
        return len(self.harmonic_ranks)

    @property
    def size(self):
        return 4 * self.n

    def index(self, kind, side, k):
        """
        Position of a shape function in the basis ordering.

        Parameters
        ----------
        kind : {'c', 's'}
            Cosine or sine part.
        side : {'+', '-'}
            Side the function is attached to.
        k : int
            1-based frequency rank.
        """
        if kind not in ('c', 's'):
            raise ValueError(choice_error_msg('kind', kind, ['c', 's']))
        if not 1 <= k <= self.n:
            raise ValueError(f'Rank must be between 1 and {self.n} (got {k}).')
        offset = (0 if kind == 'c' else self.n) + (0 if side_sign(side) > 0 else 2 * self.n)
        return offset + k - 1

    @property
    def labels(self):
        return [f'{kind}{k}{side}'
                for side in ('+', '-')
                for kind in ('c', 's')
                for k in range(1, self.n + 1)]

    @property
    def trace_indices(self):
        """
        Positions of the two functions that are one on a face (c1+, c1-).
        """
        return np.array([0, 2 * self.n])

    @property
    def internal_indices(self):
        """
        Positions of the ``4n - 2`` functions vanishing on both faces.
        """
        return np.setdiff1d(np.arange(self.size), self.trace_indices)

    def _profiles(self, y, derivative):
        y = np.atleast_1d(self.sheet.check_inside(y))
        d = self.sheet.thickness
        a = self.wavenumbers[:, None]
        blocks = []
        for s in (1, -1):
            u = a * (0.5 * d + s * y[None, :])
            if derivative:
                values = s * a * _cosh_sinh_ratio(u, a * d)
            else:
                values = _sinh_ratio(u, a * d)
            cos = values.real.copy()
            cos[1:] -= cos[0]
            blocks.extend([cos, values.imag])
        return np.concatenate(blocks, axis=0)

    def theta(self, y):
        """
        All shape functions at `y`, shape ``(4n, len(y))``.
        """
        return self._profiles(y, derivative=False)

    def dtheta(self, y):
        """
        All shape-function derivatives at `y` (1/m), shape ``(4n, len(y))``.
        """
        return self._profiles(y, derivative=True)


def build_basis(sheet, f1, n, rank_rule='odd', ratio=4):
    """
    Construct a :class:`BasisSet`.

    Parameters
    ----------
    sheet : SheetSpec
        Sheet the functions are parametrised on.
    f1 : float
        Fundamental frequency (Hz).
    n : int
        Number of frequencies.
    rank_rule : {'odd', 'geometric'} or sequence of float
        How frequencies follow from `f1`. 'odd' uses ``f_k = (2k - 1) f1``,
        'geometric' uses ``f_k = ratio**(k - 1) f1``, and a sequence gives the
        multipliers directly (its length must be `n`).
    ratio : float, optional
        Ratio for the geometric rule.

    Returns
    -------
    BasisSet

    Examples
    --------
    Skin depths halving with each frequency:

    >>> sheet = SheetSpec.from_relative(1e-3, 1000, 1e6)
    >>> basis = build_basis(sheet, 100.0, 3, rank_rule='geometric')
    >>> basis.frequencies
    array([ 100.,  400., 1600.])
    """
    if int(n) != n or n < 1:
        raise ValueError(f'Number of frequencies must be an integer >= 1 (got {n}).')
    k = np.arange(1, int(n) + 1)
    if isinstance(rank_rule, str):
        if rank_rule == 'odd':
            ranks = 2 * k - 1
        elif rank_rule == 'geometric':
            check_positive(ratio=ratio)
            ranks = float(ratio)**(k - 1)
        else:
            raise ValueError(choice_error_msg('rank rule', rank_rule, ['odd', 'geometric']))
    elif isinstance(rank_rule, Sequence) or isinstance(rank_rule, np.ndarray):
        ranks = np.asarray(rank_rule, dtype=np.float64)
        if ranks.size != n:
            raise ValueError(f'Expected {n} ranks, got {ranks.size}.')
    else:
        raise ValueError(choice_error_msg('rank rule', rank_rule, ['odd', 'geometric', 'a list']))
    return BasisSet(sheet=sheet, f1=f1, harmonic_ranks=tuple(np.asarray(ranks, dtype=float)))


def _check_index(basis, p):
    if int(p) != p or not 0 <= p < basis.size:
        raise ValueError(f'Shape function index must be between 0 and {basis.size - 1} (got {p}).')
    return int(p)


def eval_theta(basis, p, y):
    """
    Shape function `p` (0-based position, see :meth:`BasisSet.index`) at `y`.
    """
    p = _check_index(basis, p)
    values = basis.theta(y)[p]
    return values if np.ndim(y) else values[0]


def eval_dtheta(basis, p, y):
    """
    Analytic y-derivative of shape function `p` at `y` (1/m).
    """
    p = _check_index(basis, p)
    values = basis.dtheta(y)[p]
    return values if np.ndim(y) else values[0]


@dataclass(frozen=True)
class ImpedanceCoefficients:
    """
    Jump coefficients of the classical thin-shell impedance conditions.

    With tangential fields :math:`h^\\pm` and :math:`e^\\pm` on the two faces
    (:math:`e = \\rho \\partial_y h`), the conditions read

    .. math::

        e^+ - e^- = -\\eta_h (h^+ + h^-), \\qquad
        h^+ - h^- = \\eta_e (e^+ + e^-).

    Attributes
    ----------
    eta_h : complex
        Coefficient of the electric jump.
    eta_e : complex
        Coefficient of the magnetic jump (S m).
    frequency : float
        Frequency (Hz).
    """

    eta_h: complex
    eta_e: complex
    frequency: float

    def electric_jump(self, h_plus, h_minus):
        return -self.eta_h * (h_plus + h_minus)

    def magnetic_jump(self, e_plus, e_minus):
        return self.eta_e * (e_plus + e_minus)


def classical_ibc(sheet, f):
    """
    Classical impedance coefficients of a sheet at frequency `f`.

    Parameters
    ----------
    sheet : SheetSpec
        Sheet parameters.
    f : float
        Frequency (Hz).

    Returns
    -------
    ImpedanceCoefficients
        :math:`\\eta_h = -(j\\omega\\mu/a)\\tanh(ad/2)` and
        :math:`\\eta_e = (\\sigma/a)\\tanh(ad/2)`.

    Notes
    -----
    For sheets much thinner than the skin depth,
    :math:`\\eta_e \\to \\sigma d/2` and :math:`\\eta_h \\to -j\\omega\\mu d/2`.
    """
    check_positive(f=f)
    a = _wavenumber(sheet, f)
    t = _tanh(0.5 * a * sheet.thickness)
    omega = 2 * np.pi * f
    return ImpedanceCoefficients(
        eta_h=complex(-1j * omega * sheet.mu / a * t),
        eta_e=complex(sheet.sigma / a * t),
        frequency=f)
