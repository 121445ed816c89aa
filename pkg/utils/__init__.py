"""
Scattering toolkit for finite Hermitian graphs with semi-infinite paths.
S-matrix, bound-state census, Levinson winding and completeness checks.
"""

__version__ = "1.0.0"
