"""faddeev3d: momentum-space three-body solver for unequal masses."""

__version__ = "0.1.0"

from .masses import MassSet
from .kinematics import PartitionMomenta, SphericalMomentum

__all__ = ["MassSet", "PartitionMomenta", "SphericalMomentum", "__version__"]
