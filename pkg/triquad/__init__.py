"""Units, unit index and 2-class numbers of K = Q(sqrt2, sqrt p1, sqrt p2) and L = K(sqrt(-1))."""

from triquad.errors import TriquadError, PreconditionError, InconsistencyError, InconclusiveError
from triquad.theorems import analyze_pair, classify

__version__ = '0.1.0'
