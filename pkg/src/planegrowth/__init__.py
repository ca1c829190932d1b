"""Growth analysis of subharmonic fields and zero sets in the plane.

Modules:

* ``scale``        -- orders, types, convergence exponent/genus, proximate orders
* ``kernels``      -- primary Weierstrass kernels, circle Fourier data,
                      disc Green/Poisson kernels
* ``potentials``   -- canonical potentials, circle means, Jensen identity,
                      ray-zero indicator bound
* ``indicators``   -- direction functions, trigonometric convexity,
                      measures on the circle, maximal t.c. minorants
* ``limits``       -- scaling transforms, densities, CRG and chain
                      recurrence, ray-system regularity
* ``synthesis``    -- partitions of unity, gluing, discretization,
                      lower-indicator families
* ``completeness`` -- support-function geometry and exponential-system
                      verdicts
* ``cli``          -- the ``planegrowth`` command
"""

from .errors import (InfeasibleError, NumericError, PlaneGrowthError,
                     ValidationError)
from .fields import PlaneField, constant_field, homogeneous_field
from .measures import MassDistribution, mass_distribution, ray_zero_set

__all__ = [
    "InfeasibleError",
    "MassDistribution",
    "NumericError",
    "PlaneField",
    "PlaneGrowthError",
    "ValidationError",
    "constant_field",
    "homogeneous_field",
    "mass_distribution",
    "ray_zero_set",
]

__version__ = "0.1.0"
