from .config import EditLabConfig
from .exceptions.errors import EditLabError
from .network import Network, build_network
from .editors import EditConfig, EditMethod
from .harness import ExperimentConfig, run_experiment

__all__ = [
    "EditLabConfig",
    "EditLabError",
    "Network",
    "build_network",
    "EditConfig",
    "EditMethod",
    "ExperimentConfig",
    "run_experiment",
]
