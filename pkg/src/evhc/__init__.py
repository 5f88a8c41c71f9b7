"""EV hosting-capacity toolkit: forecasting, probabilistic power flow,
risk boundaries, and real-time hosting-capacity optimization for radial
distribution networks."""

from .mixtures import GaussianMixture
from .scenario import load_scenario

__version__ = "0.1.0"
__all__ = ["GaussianMixture", "load_scenario", "__version__"]
