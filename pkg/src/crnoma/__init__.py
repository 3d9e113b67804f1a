"""Energy-efficient pairing, channel assignment and power split for CR-NOMA meter networks."""
from .errors import ConfigError, ConstraintViolation, InfeasibleError
from .net_model import AvailabilityMatrix, Scenario, Topology, generate_availability, generate_topology
from .pairing import Pairing, zoup
from .power import PowerAllocation, zouppa
from .zoa import ZoaConfig, optimize

__all__ = [
    "AvailabilityMatrix", "ConfigError", "ConstraintViolation", "InfeasibleError", "Pairing", "PowerAllocation",
    "Scenario", "Topology", "ZoaConfig", "generate_availability", "generate_topology", "optimize", "zoup", "zouppa",
]
__version__ = "0.1.0"
