"""
=============================================
Source waveforms (:mod:`thinshell.waveforms`)
=============================================

.. currentmodule:: thinshell.waveforms

Time functions used to drive the slab and the wires.

.. rubric:: Functions

.. autosummary::
    :toctree: generated/

    half_cosine_ramp
    sinusoid
"""

import numpy as np

from thinshell.lib.util import check_positive


def half_cosine_ramp(t, rise_time):
    """
    Smooth ramp from 0 to 1 over `rise_time`, then flat.

    Parameters
    ----------
    t : float or array_like
        Times (s). The ramp is zero for negative times.
    rise_time : float
        Duration of the ramp (s).

    Returns
    -------
    float or ndarray
        :math:`(1 - \\cos(\\pi t / t_r)) / 2` on :math:`[0, t_r]`, one after.
    """
    check_positive(rise_time=rise_time)
    t = np.asarray(t, dtype=np.float64)
    ramp = 0.5 * (1 - np.cos(np.pi * np.clip(t, 0.0, rise_time) / rise_time))
    return np.where(t < 0, 0.0, ramp)


def sinusoid(t, frequency, phase=0.0):
    """
    :math:`\\cos(2 \\pi f t + \\varphi)`, the real part of the unit phasor
    :math:`e^{j\\varphi}` rotating at `frequency`.
    """
    check_positive(frequency=frequency)
    return np.cos(2 * np.pi * frequency * np.asarray(t, dtype=np.float64) + phase)
