"""Time-frequency operator laboratory on cyclic grids of 2**L samples."""

__version__ = "0.1.0"
