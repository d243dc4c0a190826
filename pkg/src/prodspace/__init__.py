"""Linear classification in products of Euclidean, spherical and hyperbolic spaces."""

__version__ = "0.1.0"
