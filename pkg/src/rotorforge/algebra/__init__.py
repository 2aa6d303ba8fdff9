"""Exact algebra of angle-periodic functions with rational action coefficients."""

from .coefficient import Coefficient, CoeffTerm, LinearForm, canonical_form, gauss
from .evaluate import (CompiledFunction, DenominatorVanishes, compile_function,
                       evaluate, evaluate_mp)
from .fourier import (
    DEFAULT_TERM_BUDGET, FourierFunction, FreqVector, TermBudgetExceeded, action,
    add, angle_bracket, apply_Q, bond, conjugate, constant, cos_mode,
    differentiate_I, differentiate_phi, inverse_form, kinetic, lie_series, mul,
    poisson_bracket, scale, sin_mode, split_resonant, sub, total, trig,
    truncate, truncated_exp, with_k, zero,
)
from .norms import DomainSpec, default_domain, radius_limit, sup_norm_estimate
from .serialize import dumps, loads
from .identity import is_zero, simplify

__all__ = [
    "Coefficient", "CoeffTerm", "LinearForm", "canonical_form", "gauss",
    "CompiledFunction", "DenominatorVanishes", "compile_function", "evaluate",
    "evaluate_mp", "DEFAULT_TERM_BUDGET", "FourierFunction", "FreqVector",
    "TermBudgetExceeded", "action", "add", "angle_bracket", "apply_Q", "bond",
    "conjugate", "constant", "cos_mode", "differentiate_I", "differentiate_phi",
    "inverse_form", "kinetic", "lie_series", "mul", "poisson_bracket", "scale",
    "sin_mode", "split_resonant", "sub", "total", "trig", "truncate",
    "truncated_exp",
    "with_k", "zero", "DomainSpec", "default_domain", "radius_limit",
    "sup_norm_estimate", "dumps", "loads", "is_zero", "simplify",
]
