"""Figure rendering for kkwaves artifacts; file formats are the only coupling."""

__version__ = "0.1.0"
