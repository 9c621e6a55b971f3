"""Group averaging, intertwiner projection and the generalisation benefit of symmetry
for least-squares and small ReLU models."""

__version__ = "0.1.0"
