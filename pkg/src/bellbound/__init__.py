"""Bell inequalities: generation, quantum lower/upper bounds, detection thresholds."""

__version__ = "0.1.0"
