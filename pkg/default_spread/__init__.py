"""
Issuer discount functions and default spreads from daily bond prices.
"""

__all__ = ["__version__"]
__version__ = "0.1.0"
