import importlib.metadata
__version__ = importlib.metadata.version('thinshell')

import thinshell.numerics
import thinshell.waveforms
import thinshell.hyperbasis
import thinshell.materials
import thinshell.slab1d
import thinshell.mesh2d
import thinshell.fem2d
