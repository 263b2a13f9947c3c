"""Physical constants and unit conventions.

All lengths are nanometres, all times nanoseconds, all rates 1/ns.
"""

import math

# Speed of light in nm/ns (2.99792458e8 m/s expressed in nm per ns).
C_NM_PER_NS = 2.99792458e8

# Gaussian FWHM -> standard deviation.
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))
