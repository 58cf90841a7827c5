"""Regular q-unitary dilations of q-commuting contraction tuples, at window scale."""

from .qword import (GroupElement, ParseError, QSpec, UnitComplex, indicator, inverse, multiply, parse_word,
                    phase_value, split_pm, support)
from .optuple import (OperatorTuple, brehmer_check, brehmer_operator, brehmer_product_form, classify,
                      generate_clock_shift, generate_random, load_tuple, save_tuple, validate)
from .kernel import KernelContext, Window, eval_kernel, gram_matrix
from .brehmer import D_operator, FiniteSupportFunction, forward_transform, inverse_transform
from .dilate import DilationResult, NonPositiveKernel, build_gns, dilate, verify_dilation
from .vnfc import MonomialCombination, apply_phi, vn_compare

__version__ = "0.1.0"
