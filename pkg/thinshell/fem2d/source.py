"""
Wire sources

.. :currentmodule:`thinshell.fem2d`

The two wires carry equal and opposite currents, +I(t) in the left wire and
-I(t) in the right one.
"""

from dataclasses import dataclass, replace
import numpy as np

from thinshell.lib.util import check_positive, choice_error_msg
from thinshell.waveforms import half_cosine_ramp, sinusoid


@dataclass(frozen=True)
class SourceSpec:
    """
    Current drive of the wire pair.

    Attributes
    ----------
    amplitude : float
        Peak current `I` (A).
    waveform : {'sinusoid', 'pulse'}
        :math:`I \\cos(2 \\pi f t + \\varphi)` or a half-cosine ramp to `I`
        reached at `rise_time`.
    frequency : float
        Frequency of the sinusoid (Hz).
    phase : float
        Phase of the sinusoid (rad).
    rise_time : float
        Ramp duration of the pulse (s).
    wire_area : float
        Cross-section of one wire (m^2).

    Examples
    --------
    >>> SourceSpec.sinusoid(6000, 50).current_density
    15000000.0
    """

    amplitude: float
    waveform: str = 'sinusoid'
    frequency: float = None
    phase: float = 0.0
    rise_time: float = None
    wire_area: float = 0.02**2

    def __post_init__(self):
        check_positive(wire_area=self.wire_area)
        if self.amplitude < 0:
            raise ValueError(f'Current amplitude must be non-negative (got {self.amplitude}).')
        if self.waveform == 'sinusoid':
            check_positive(frequency=self.frequency)
        elif self.waveform == 'pulse':
            check_positive(rise_time=self.rise_time)
        else:
            raise ValueError(choice_error_msg('waveform', self.waveform, ['sinusoid', 'pulse']))

    @classmethod
    def sinusoid(cls, amplitude, frequency, phase=0.0, wire_area=0.02**2):
        return cls(amplitude=amplitude, waveform='sinusoid', frequency=frequency,
                   phase=phase, wire_area=wire_area)

    @classmethod
    def pulse(cls, amplitude, rise_time, wire_area=0.02**2):
        return cls(amplitude=amplitude, waveform='pulse', rise_time=rise_time,
                   wire_area=wire_area)

    @property
    def is_sinusoid(self):
        return self.waveform == 'sinusoid'

    @property
    def current_density(self):
        """
        Peak current density in each wire (A/m^2).
        """
        return self.amplitude / self.wire_area

    @property
    def phasor(self):
        """
        Complex amplitude :math:`I e^{j\\varphi}` of the sinusoid.
        """
        if not self.is_sinusoid:
            raise ValueError('Only sinusoidal sources have a phasor.')
        return self.amplitude * np.exp(1j * self.phase)

    def current(self, t):
        """
        Current of the left wire at times `t` (A).
        """
        if self.is_sinusoid:
            return self.amplitude * sinusoid(t, self.frequency, self.phase)
        return self.amplitude * half_cosine_ramp(t, self.rise_time)

    def wire_currents(self, t):
        """
        Currents of both wires, shape ``(len(t), 2)``.
        """
        i = np.atleast_1d(self.current(t))
        return np.column_stack([i, -i])

    def step_currents(self, times):
        """
        Wire currents of a transient run on `times`, shape ``(len(times), 2)``.

        Runs start from rest, so the first row is zero whatever the drive at
        ``times[0]``; a sinusoid that is nonzero at the start enters as a step
        at the first time step.
        """
        currents = self.wire_currents(times)
        currents[0] = 0.0
        return currents

    def wire_phasors(self):
        p = self.phasor
        return np.array([[p, -p]])

    def scaled(self, factor):
        """
        Copy with the amplitude multiplied by `factor`.
        """
        return replace(self, amplitude=factor * self.amplitude)
