"""Twin-beam photon statistics: SFWM biphoton model, time-tag correlation,
Mandel-Q counting statistics, synthetic sources and squeezing spectra."""
from ._backend import NAME as BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
