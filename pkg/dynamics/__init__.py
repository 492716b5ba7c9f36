from .grid import (
    GridFunction,
    ProductDomain,
    SolutionTriple,
    decay_matrix,
    differentiate,
    double_integral,
    double_integral_table,
    forward_quotient,
    left_sum_table,
    log_weight_table,
    mixed_delta,
    partial_delta,
    s_norm,
    sup_norm,
    w_seminorm,
    w_seminorm_table,
    weight,
    weight_table,
    z_integral,
)
from .problem import ProblemEvaluationError, ProblemKind, ProblemSpec
from .solver import (
    CompatibilityVerdict,
    SolveReport,
    apply_P,
    check_compatibility,
    contraction_ratio,
    eval_H,
    eval_h,
    forcing_values,
    residual_equation,
    solve_picard,
)
from .inequalities import (
    ContractionConstants,
    KernelPair,
    KernelTables,
    NegativeKernelError,
    as_tables,
    compute_Q,
    constant_margins,
    constant_ratios,
    estimate_constants,
    gronwall_bound,
    gronwall_extremal,
    gronwall_premise_rhs,
    lemma_bound,
    q_table,
)
from .certificates import (
    Certificate,
    CertificateKind,
    MismatchedProblemsError,
    Verdict,
    WorstOffender,
    boundedness_certificate,
    contraction_certificate,
    dependence_certificate,
    kernel_mass,
    uniqueness_check,
    verify_gronwall,
    verify_lemma,
)


def create_domain(t1, t2, zscale) -> ProductDomain:
    """
    Factory function to build a product domain from three time scales.

    Args:
        t1, t2: the scales of x and y; x0 and y0 are their minima
        zscale: the interval I = [a, b], at least two points

    Returns:
        ProductDomain instance
    """
    return ProductDomain(t1=t1, t2=t2, zscale=zscale)


__all__ = [
    "Certificate",
    "CertificateKind",
    "CompatibilityVerdict",
    "ContractionConstants",
    "GridFunction",
    "KernelPair",
    "KernelTables",
    "MismatchedProblemsError",
    "NegativeKernelError",
    "ProblemEvaluationError",
    "ProblemKind",
    "ProblemSpec",
    "ProductDomain",
    "SolutionTriple",
    "SolveReport",
    "Verdict",
    "WorstOffender",
    "apply_P",
    "as_tables",
    "boundedness_certificate",
    "check_compatibility",
    "compute_Q",
    "constant_margins",
    "constant_ratios",
    "contraction_certificate",
    "contraction_ratio",
    "create_domain",
    "decay_matrix",
    "dependence_certificate",
    "differentiate",
    "double_integral",
    "double_integral_table",
    "estimate_constants",
    "eval_H",
    "eval_h",
    "forcing_values",
    "forward_quotient",
    "gronwall_bound",
    "gronwall_extremal",
    "gronwall_premise_rhs",
    "kernel_mass",
    "left_sum_table",
    "lemma_bound",
    "log_weight_table",
    "mixed_delta",
    "partial_delta",
    "q_table",
    "residual_equation",
    "s_norm",
    "solve_picard",
    "sup_norm",
    "uniqueness_check",
    "verify_gronwall",
    "verify_lemma",
    "w_seminorm",
    "w_seminorm_table",
    "weight",
    "weight_table",
    "z_integral",
]
