"""Whitney-type formulas for curves on surfaces, verified in group rings."""

__version__ = "0.1.0"
