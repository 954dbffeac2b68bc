"""Numerical experiments on mixing, counting and limit laws for SL(d, R) / SL(d, Z).

Submodules
----------
group_core   matrices, Cartan / Iwasawa coordinates, Haar sampling
harish       the spherical function Xi and matrix-coefficient bounds
lattice_lab  lattice point counts, covolume, distance sets, configurations
homspace     the space SL(2, R) / SL(2, Z), observables, correlations
cumulants    partitions, moment / cumulant transforms, clustering, exponents
clt          variance, limit-law and clustered-cumulant experiments
cli          command-line driver
"""

from . import clt, cumulants, group_core, harish, homspace, lattice_lab
from .errors import DomainError, InvalidInputError, ResourceError, UnsupportedError

__version__ = "0.1.0"

__all__ = [
    "clt",
    "cumulants",
    "group_core",
    "harish",
    "homspace",
    "lattice_lab",
    "DomainError",
    "InvalidInputError",
    "ResourceError",
    "UnsupportedError",
]
