"""Design and analysis toolkit for 2D photonic-crystal slab cavities:
geometry construction, FDTD simulation, resonance extraction, plane-wave
band structures, cavity-QED figures of merit, and Fano spectrum fitting.
"""

__version__ = "0.1.0"
