"""twistval: 2-adic valuations of algebraic L-values of quadratic twists.

Computes central L-values of rational elliptic curves and their
quadratic twists to high precision, reconstructs the algebraic parts as
exact rationals, and verifies the 2-adic lower-bound and exact-valuation
statements (with their supporting symbol-sum identities) numerically on
a bundled table of curves.
"""

from .curve_core import (
    CurveRecord,
    TwistDescriptor,
    WeierstrassModel,
    compute_invariants,
    field_class,
    minimal_model,
    quadratic_twist,
    rational_two_torsion_order,
    real_components,
    two_isogenous_curve,
)
from .analytic import (
    LSeriesContext,
    PeriodData,
    Precision,
    gauss_sum,
    l_value,
    period_integral,
    periods,
    root_number,
    twisted_l_value,
)
from .finite_field import (
    ApTable,
    LocalData,
    a_n_array,
    a_p_bad,
    build_ap_table,
    count_points,
    lemma_local_degree_check,
    local_two_structure,
    trace_of_frobenius,
)
from .prime_sets import (
    classify_prime,
    even_tamagawa_count,
    sieve_matched_primes,
    tamagawa_ord2_at_twist_prime,
)
from .modsym import (
    IntegralityReport,
    LatticeCoords,
    SymbolSum,
    integrality_report,
    lattice_coordinates,
    principal_bracket,
    quadratic_bracket,
)
from .rationalize import (
    AlgebraicLValue,
    algebraic_l_value,
    ord2,
    reconstruct_rational,
)
from .cli_io import RunConfig, bundled_table, cli_main, parse_curve_table

__version__ = "0.1.0"
