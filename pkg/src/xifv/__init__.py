"""Xi-coalescents, generalized Fleming-Viot processes and their moment duality."""

__version__ = "0.1.0"
