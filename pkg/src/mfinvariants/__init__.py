"""Exact matrix-factorization invariants for real toric Lagrangians in simplices."""
from .errors import (ClosednessFailure, ConsistencyFailure, CutoffMismatch, InputError, MFError,
                     NotDelzant, NotSpin, Unsolvable, UnsupportedSuperpotential)
from .scalars import NovikovSeries, extract_invariants
from .toric import PolytopeSpec, simplex, validate_delzant, kernel_lattice, spin_analysis
from .lg import LaurentElement, ModelHandle, build_model
from .dirac import DiracModule, EndMorphism, delta, dirac_build
from .trace import TraceEngine, theta_word_count
from .cyclic import Chain, TensorWord, cj_constants, d_cc, exp_chain, y_b_chain
from .solver import mc, run as solve

__all__ = [
    "ClosednessFailure", "ConsistencyFailure", "CutoffMismatch", "InputError", "MFError",
    "NotDelzant", "NotSpin", "Unsolvable", "UnsupportedSuperpotential",
    "NovikovSeries", "extract_invariants", "PolytopeSpec", "simplex", "validate_delzant",
    "kernel_lattice", "spin_analysis", "LaurentElement", "ModelHandle", "build_model",
    "DiracModule", "EndMorphism", "delta", "dirac_build", "TraceEngine", "theta_word_count",
    "Chain", "TensorWord", "cj_constants", "d_cc", "exp_chain", "y_b_chain", "mc", "solve",
]
