"""SI vacuum constants."""

import math

EPS0 = 8.8541878128e-12
MU0 = 4.0e-7 * math.pi
C0 = 1.0 / math.sqrt(EPS0 * MU0)
ETA0 = math.sqrt(MU0 / EPS0)
