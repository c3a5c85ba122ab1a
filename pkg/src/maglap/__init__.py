"""Magnetic-Laplacian characterization and embedding of directed networks."""
