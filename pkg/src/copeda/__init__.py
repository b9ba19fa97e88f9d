"""Copula-based estimation-of-distribution algorithms for continuous optimization."""

from .copulas import (
    BivariateCopula,
    CopulaFamily,
    ParameterError,
    UnsupportedTauError,
    clayton,
    clip_tau,
    copula_cdf,
    copula_h,
    copula_hinv,
    copula_logpdf,
    copula_loglik,
    copula_pdf,
    copula_sample,
    fit_student_dof,
    frank,
    gumbel,
    mvnormal_copula_sample,
    normal,
    parameter_to_tau,
    product,
    student,
    tau_to_parameter,
)
from .margins import MarginKind, MarginModel, fit_margin, margin_cdf, margin_quantile
from .dependence import (
    DegenerateDataWarning,
    IndepTestResult,
    copula_mutual_information,
    empirical_copula_at,
    gof_select_copula,
    indep_test_cvm,
    kendall_tau,
    kendall_tau_matrix,
    make_positive_definite,
    pseudo_observations,
)
from .vines import (
    RVineModel,
    VineType,
    describe_vine,
    fit_vine,
    select_cvine_order,
    select_dvine_order,
    vine_loglik,
    vine_sample,
)
from .eda import (
    EdaSpec,
    ObjectiveError,
    Population,
    RunResult,
    RunsSummary,
    TerminationSpec,
    critical_pop_size,
    eda_indep_runs,
    eda_run,
    replace_complete,
    run_rng,
    seed_uniform,
    select_truncation,
    summarize_runs,
    terminate_check,
)
from .algorithms import (
    ChainDependence,
    NormalDependence,
    ProductDependence,
    SearchModel,
    VineDependence,
    ceda_learn,
    ceda_sample,
    chain_permutation,
    cmimic_learn,
    cmimic_sample,
    copula_family_counts,
    describe_search_model,
    learn_model,
    sample_model,
    veda_learn,
    veda_sample,
)
from .benchmarks import (
    BenchmarkSpec,
    f_sphere,
    f_summation_cancellation,
    get_benchmark,
)

__all__ = [name for name in dir() if not name.startswith("_")]
