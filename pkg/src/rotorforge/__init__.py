"""Normal forms, dissipative integration and scaling experiments for rotator chains."""

__version__ = "0.1.0"
