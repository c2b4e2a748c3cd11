"""p-adic continued fraction algorithms with exact measures and ergodic statistics."""

from .errors import (
    DivisionByZeroAtPrecision,
    ExpansionTerminated,
    IncompatibleWords,
    InsufficientData,
    InvalidDigit,
    NotHyperbolicError,
    PadicError,
    PrecisionExhausted,
    WordTooShort,
)
from .padic_core import (
    INF,
    Ball,
    PadicApprox,
    PrimeCtx,
    ProductCylinder,
    digit_expand,
    format_approx,
    format_ball,
    format_rational,
    fractional_part,
    haar_sample,
    haar_sample_vector,
    integral_part,
    invert_ball,
    is_prime,
    measure,
    norm,
    parse_approx,
    parse_ball,
    parse_rational,
    residue,
    valuation,
    vector_norm,
)
from .lft import (
    HyperbolicCert,
    LftParams,
    apply_forward,
    apply_inverse,
    certify_hyperbolic,
    iota,
    is_hyperbolic,
    preimage_cylinder,
    random_hyperbolic,
    sufficient_hyperbolic,
)
from .cfsystems import (
    Digit1D,
    DigitMD,
    Expansion,
    SystemSpec,
    branch_lft,
    convergent,
    digit_class,
    digit_functionals,
    digit_values,
    enumerate_branches,
    expand,
    expansion_records,
    pivot_valuation,
    step,
)
from .ergodics import (
    MixingReport,
    StatReport,
    SymbolicCylinder,
    birkhoff_average,
    conditional_density_check,
    cylinder_measure,
    digit_mean_reports,
    invariance_mc,
    iota_sum,
    iota_sum_closed_form,
    membership_mc,
    mixing_exact,
    random_cylinder,
    random_word,
    theoretical_digit_means,
)

__version__ = "0.1.0"
