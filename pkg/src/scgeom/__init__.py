"""Scale calculus and splicing-based geometry on exactly computable models."""

__version__ = "0.1.0"

from .spaces import (DirectSum, FiniteSpace, PairVector, PartialQuadrant,
                     QuadrantSpace, ScaleSpace, SequenceSpace, Vector,
                     direct_sum, embedding_spectrum, level_norm, quadrant,
                     quadrant_contains)
from .operators import (DiagRule, FredholmSplitting, IndexUndecidableError,
                        NotScFredholmError, OperatorAnalysis, ScOperator,
                        ScPlusOperator, analyze, compose_index,
                        dense_complement, fredholm_index, perturb_scplus_index,
                        regularity_lift, split_off_finite_dim,
                        symbol_certificate)

__all__ = [name for name in dir() if not name.startswith("_")]
