"""Linear-optics number-state teleportation: simulator, source synthesis, analyser."""

__version__ = "0.1.0"
