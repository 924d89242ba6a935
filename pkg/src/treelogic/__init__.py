"""Two-variable logic (FO2) and its counting extension (C2) over finite ordered trees."""

__version__ = "0.1.0"
