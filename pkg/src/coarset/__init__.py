"""Finite coarse spaces, translation algebras and their Laplacians."""

__version__ = "0.1.0"

from .errors import (
    CoarseError,
    DomainError,
    InputError,
    InvariantViolation,
    NotGeneratingError,
    PreconditionError,
)
from .space import CoarseSpace, ControlledSet, PartialTranslation, Point
from .decomp import elementary_decomposition, factor_through, tripartition
from .algebra import TranslationOp, from_partial_translation, phi, standard_form
from .spectral import cheeger, expander_verdict, kernel_is_constants, laplacian, spectrum
from .morita import DensePartition, build_partition, morita_operators
from .boxspace import FiniteGroupPresentation, box_space
from .atmen import annulus_matching, girth, negative_type_check, schoenberg, witness_expectation

__all__ = [
    "__version__",
    "CoarseError",
    "DomainError",
    "InputError",
    "InvariantViolation",
    "NotGeneratingError",
    "PreconditionError",
    "CoarseSpace",
    "ControlledSet",
    "PartialTranslation",
    "Point",
    "elementary_decomposition",
    "factor_through",
    "tripartition",
    "TranslationOp",
    "from_partial_translation",
    "phi",
    "standard_form",
    "cheeger",
    "expander_verdict",
    "kernel_is_constants",
    "laplacian",
    "spectrum",
    "DensePartition",
    "build_partition",
    "morita_operators",
    "FiniteGroupPresentation",
    "box_space",
    "annulus_matching",
    "girth",
    "negative_type_check",
    "schoenberg",
    "witness_expectation",
]
