"""Order-residue census: empirical and theoretical distribution of ord_p(g) modulo d."""

__version__ = "0.1.0"
