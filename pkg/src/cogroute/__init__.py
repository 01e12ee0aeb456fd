"""Context-aware route discovery and spectrum trading for multi-hop cognitive cellular networks."""

__version__ = "0.1.0"
