"""
Physical constants shared by the solvers.
"""

import numpy as np

MU0 = 4e-7 * np.pi
"""Vacuum permeability (H/m)."""
