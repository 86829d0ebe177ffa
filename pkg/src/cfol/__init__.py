"""Exact continuous first-order logic on finite metric structures.

Everything is computed with :class:`fractions.Fraction`; quantifiers are
exact max/min over finite carriers.
"""

__version__ = "0.1.0"

from .errors import CfolError, DomainError, InputError, ParseError
from .rational import Fraction, as_fraction, format_fraction, parse_fraction
from .signature import (
    FunctionSymbol,
    Modulus,
    RelationSymbol,
    Signature,
    Sort,
    modulus_compose_term,
    modulus_eval,
    modulus_invert,
    signature_validate,
)
from .structures import (
    FiniteMetric,
    MorphismReport,
    Structure,
    check_embedding,
    check_homomorphism,
    expand_by_constants,
    find_isomorphism,
    substructure_check,
    validate_structure,
)
from .syntax import (
    App,
    Atomic,
    Binary,
    Const,
    Dist,
    Quant,
    Scale,
    Unary,
    Var,
    dotminus,
    formula_bound,
    formula_modulus,
    free_vars,
    print_formula,
    print_term,
)
from .parser import parse_formula, parse_term
from .formulas import (
    FormulaFamily,
    enumerate_formulas,
    gen_config_formula,
    gen_extension_axiom,
    random_formula,
    weighted_sum,
)
from .semantics import (
    EvalResult,
    certified_eval,
    eval_formula,
    eval_term,
    formula_value,
    generate_diagram,
    seminorm,
    tarski_vaught_check,
    theory_report,
)
from .amalgam import (
    FraisseState,
    PointedExtension,
    diff_amalgam,
    enumerate_extensions,
    extension_defect,
    fraisse_step,
    path_amalgam,
    run_fraisse,
)
from .games import GameSpec, StrategyTree, back_and_forth_iso, ef_play, ef_solve
from .ultra import Family, Ultrafilter, los_check, ultralimit, ultraproduct
from .analysis import (
    compute_type,
    definability_probe,
    qe_probe,
    type_distance,
    zero_set,
)
