"""Physical constants (CODATA values via scipy) used across the package."""

import numpy as np
from scipy import constants as _c

MU0 = _c.mu_0
HBAR = _c.hbar

#: electron gyromagnetic ratio, rad/(s T); g = 2.0028 for the NV ground state
GAMMA_E = 2.0028 * _c.physical_constants["Bohr magneton"][0] / _c.hbar
#: proton gyromagnetic ratio, rad/(s T)
GAMMA_P = _c.physical_constants["proton gyromag. ratio"][0]

TWO_PI = 2.0 * np.pi

GAUSS = 1e-4
NM = 1e-9
UM = 1e-6
NS = 1e-9
US = 1e-6
UT = 1e-6
