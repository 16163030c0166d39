"""
============================================
Sheet materials (:mod:`thinshell.materials`)
============================================

.. currentmodule:: thinshell.materials

Constitutive laws of the shield material. The linear law has constant
permeability. The saturable law is isotropic,

.. math::

    \\mu(h) = \\mu_0 \\left(1 + \\left(\\frac{1}{\\mu_{r0} - 1}
              + \\frac{\\lVert h \\rVert}{m_0}\\right)^{-1}\\right),

with relative permeability :math:`\\mu_{r0}` at the origin and saturation
field :math:`m_0`. Conductivity is constant for both laws.

.. rubric:: Functions

.. autosummary::
    :toctree: generated/

    permeability
    permeability_slope
    incremental_permeability
    differential_permeability
    field_from_flux

.. rubric:: Classes

.. autosummary::
    :toctree: generated/

    MaterialModel
"""

from dataclasses import dataclass
import numpy as np

from thinshell.constants import MU0
from thinshell.lib.util import check_positive, choice_error_msg


@dataclass(frozen=True)
class MaterialModel:
    """
    Linear or saturable shield material.

    Attributes
    ----------
    kind : {'linear', 'saturable'}
        Constitutive law.
    sigma : float
        Conductivity (S/m).
    mu_r : float
        Relative permeability of the linear law.
    mu_r0 : float
        Relative permeability at the origin of the saturable law.
    mu0_m0 : float
        Saturation polarisation :math:`\\mu_0 m_0` (T) of the saturable law.

    Examples
    --------
    >>> MaterialModel.saturable(mu_r0=12500, mu0_m0=1.31, sigma=1e6).m0
    1042464.87...
    """

    kind: str
    sigma: float
    mu_r: float = 1.0
    mu_r0: float = None
    mu0_m0: float = None

    def __post_init__(self):
        check_positive(sigma=self.sigma)
        if self.kind == 'linear':
            check_positive(mu_r=self.mu_r)
        elif self.kind == 'saturable':
            if self.mu_r0 is None or self.mu0_m0 is None:
                raise ValueError('Saturable materials need both mu_r0 and mu0_m0.')
            if not self.mu_r0 > 1:
                raise ValueError(f'Initial relative permeability must exceed 1 (got {self.mu_r0}).')
            check_positive(mu0_m0=self.mu0_m0)
        else:
            raise ValueError(choice_error_msg('material kind', self.kind, ['linear', 'saturable']))

    @classmethod
    def linear(cls, mu_r, sigma):
        return cls(kind='linear', sigma=sigma, mu_r=mu_r)

    @classmethod
    def saturable(cls, mu_r0, mu0_m0, sigma):
        return cls(kind='saturable', sigma=sigma, mu_r0=mu_r0, mu0_m0=mu0_m0)

    @property
    def is_linear(self):
        return self.kind == 'linear'

    @property
    def rho(self):
        return 1 / self.sigma

    @property
    def m0(self):
        return self.mu0_m0 / MU0

    @property
    def mu_initial(self):
        """
        Permeability at zero field (H/m).
        """
        if self.is_linear:
            return MU0 * self.mu_r
        return MU0 * self.mu_r0

    def field_at_relative_permeability(self, mu_r):
        """
        Field magnitude (A/m) at which the saturable law reaches `mu_r`.
        """
        if self.is_linear:
            raise ValueError('Linear materials have a single permeability.')
        if not 1 < mu_r <= self.mu_r0:
            raise ValueError(f'Relative permeability must lie in (1, {self.mu_r0}].')
        return self.m0 * (1 / (mu_r - 1) - 1 / (self.mu_r0 - 1))


def _saturation_terms(m, h):
    return 1 / (m.mu_r0 - 1) + h / m.m0


def permeability(m, h_magnitude):
    """
    Permeability at field magnitude `h_magnitude`.

    Parameters
    ----------
    m : MaterialModel
        Material.
    h_magnitude : float or array_like
        Field magnitude (A/m), non-negative.

    Returns
    -------
    float or ndarray
        Permeability (H/m).
    """
    h = np.asarray(h_magnitude, dtype=np.float64)
    if np.any(h < 0):
        raise ValueError('Field magnitudes must be non-negative.')
    if m.is_linear:
        return np.full_like(h, MU0 * m.mu_r)
    return MU0 * (1 + 1 / _saturation_terms(m, h))


def permeability_slope(m, h_magnitude):
    """
    Derivative :math:`d\\mu/d\\lVert h \\rVert` (H/m per A/m).
    """
    h = np.asarray(h_magnitude, dtype=np.float64)
    if m.is_linear:
        return np.zeros_like(h)
    return -MU0 / (m.m0 * _saturation_terms(m, h)**2)


def incremental_permeability(m, h_magnitude):
    """
    Slope :math:`db/dh` of the scalar curve :math:`b = \\mu(h) h` (H/m).
    """
    h = np.abs(np.asarray(h_magnitude, dtype=np.float64))
    return permeability(m, h) + permeability_slope(m, h) * h


def differential_permeability(m, h_vector):
    """
    Jacobian of the map :math:`h \\mapsto \\mu(\\lVert h \\rVert) h`.

    Parameters
    ----------
    m : MaterialModel
        Material.
    h_vector : array_like, shape (..., 2)
        Field vectors (A/m).

    Returns
    -------
    ndarray, shape (..., 2, 2)
        Tensors :math:`\\mu I + \\mu' \\, h h^T / \\lVert h \\rVert` (H/m). At
        zero field the isotropic limit :math:`\\mu(0) I` is returned.
    """
    h = np.asarray(h_vector, dtype=np.float64)
    norm = np.linalg.norm(h, axis=-1)
    mu = permeability(m, norm)
    eye = np.eye(2)
    tensor = mu[..., None, None] * eye
    if m.is_linear:
        return tensor
    slope = permeability_slope(m, norm)
    safe = np.where(norm > 0, norm, 1.0)
    outer = h[..., :, None] * h[..., None, :] / safe[..., None, None]
    return tensor + slope[..., None, None] * outer


def field_from_flux(m, b_magnitude):
    """
    Field magnitude `h` such that :math:`\\mu(h) h = b`.

    Parameters
    ----------
    m : MaterialModel
        Material.
    b_magnitude : float or array_like
        Flux density magnitude (T), non-negative.

    Returns
    -------
    float or ndarray
        Field magnitude (A/m).

    Notes
    -----
    For the saturable law the equation reduces to a quadratic in
    :math:`x = h/m_0`, whose stable positive root seeds a safeguarded Newton
    polish. Iterates stay in the bracket :math:`[0, b/\\mu_0]`.
    """
    b = np.asarray(b_magnitude, dtype=np.float64)
    if np.any(b < 0):
        raise ValueError('Flux density magnitudes must be non-negative.')
    if m.is_linear:
        return b / (MU0 * m.mu_r)

    c = 1 / (m.mu_r0 - 1)
    beta = b / (MU0 * m.m0)
    p = c + 1 - beta
    root = np.sqrt(p**2 + 4 * beta * c)
    x = np.where(p > 0, 2 * beta * c / np.where(p + root > 0, p + root, 1.0), 0.5 * (root - p))
    h = x * m.m0

    upper = b / MU0
    for _ in range(50):
        residual = permeability(m, h) * h - b
        step = residual / incremental_permeability(m, h)
        h_new = np.clip(h - step, 0.0, upper)
        converged = np.abs(h_new - h) <= 1e-13 * np.maximum(h_new, np.finfo(float).tiny)
        h = h_new
        if np.all(converged):
            break
    return h
