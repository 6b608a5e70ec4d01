"""Global tolerance and schedule defaults, overridable per call."""

from fractions import Fraction

#: Zero tolerance shared by corner detection and fixed-point membership tests.
TAU_ZERO = 1e-9

#: Absolute floor below which difference-quotient residuals count as converged.
TOL_SC1 = 1e-7

#: Chain-rule residual tolerance in float mode (exact mode demands 0).
TOL_CHAIN = 1e-9

#: Required decay factor of the sc1 residual per halving of the radius.
SC1_SLOPE_FACTOR = 1.5

#: Difference-quotient radii 2^-i, i = 3..12.
RADII = tuple(2.0 ** -i for i in range(3, 13))

#: Number of seeded random directions added to the coordinate directions.
N_RANDOM_DIRECTIONS = 8

#: Default size of perturbations in stability tests, kept exactly rational.
EPS_PERTURB = Fraction(1, 8)

#: Levels sampled when a claim quantifies over all scale levels.
SAMPLE_LEVELS = (0, 1, 2, 3)
