"""Joint Q-routing and cost-aware caching for cache networks."""
from importlib import resources


def data_path(name: str) -> str:
    """Filesystem path of a bundled data file (``rnp_like.topo``, ``synthetic_trace.csv``)."""
    return str(resources.files(__name__) / "data" / name)
