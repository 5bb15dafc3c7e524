"""
QuDASH Toolkit Package
Sélection de débit DASH par QUBO et recuit simulé, simulée sur traces
"""

__version__ = "0.1.0"
