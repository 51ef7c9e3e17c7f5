"""interpeff: how much task-relevant information an interpretive channel keeps.

The package scores a representation Z = phi(X) against the task variable Y
with mutual-information estimators (within-class kNN, KSG, variational
DV/NWJ bounds, exact plug-in), normalizes against a full-information
reference to get an efficiency in a ratio or calibrated-difference form,
and ships closed-form oracles, property batteries, and benchmark runners
that exercise the whole pipeline.
"""

from .core import (
    NATS_PER_BIT,
    Dataset,
    DatasetFormatError,
    DegenerateReferenceError,
    InterpEffError,
    RngStream,
    binary_entropy,
    bits_to_nats,
    canonical_json,
    load_csv,
    nats_to_bits,
    save_csv,
    stratified_folds,
    stratified_split_indices,
)
from .channels import (
    Channel,
    channel_from_json,
    channel_to_json,
    compose,
    fit_fft_topk,
    fit_pca,
    fit_standardizer,
    identity,
    make_affine,
    make_downsample,
    make_gauss_noise,
    make_randproj,
)
from .oracles import (
    CircleOracle,
    OracleValue,
    brute_force_mi,
    circle_joint_angle,
    circle_joint_cos,
    fisher_from_replications,
    gaussian_location_projection,
    gaussian_mi,
    mixture_label_mi,
    oracle_circle,
    oracle_gaussian_location,
    oracle_redundant,
    projected_fisher_ratio,
)
from .estimators import (
    FeaturewiseResult,
    MIEstimate,
    ScoreSpec,
    mi_dv,
    mi_featurewise,
    mi_knn_cd,
    mi_ksg_cc,
    mi_nwj,
    mi_plugin_discrete,
    mi_plugin_from_samples,
)
from .critic import CriticConfig, evaluate_bound, gradient_check, train_critic
from .efficiency import (
    DEGENERATE_REFERENCE_THRESHOLD,
    REPORT_HEADER,
    CalibConstants,
    EfficiencyReport,
    VgibScore,
    azuma_tail,
    compute_efficiency,
    confidence_radius,
    cross_fit_score,
    jackknife,
    median_of_means,
    mi_ratio_bounds,
    normalize_diff,
    normalize_ratio,
    score_channel,
    score_reference,
    stability_bound,
    vgib_score,
)
from .datagen import (
    SinusoidConfig,
    circle_angle,
    circle_cos,
    export_digits_csv,
    gen_circle,
    gen_class_gaussians,
    gen_gaussian_location,
    gen_redundant,
    gen_sinusoids,
    load_digits_csv,
    train_test_split,
)
from .classify import (
    LogregModel,
    cv_pick_l2,
    fit_logreg,
    logreg_cv_accuracy,
    robustness_probe,
)
from .experiments import (
    ExperimentResult,
    ExperimentRow,
    estimator_swap_ablation,
    run_axiom_suite,
    run_oracle_checks,
    run_table1,
    run_table2,
    table1_digits,
    table1_signals,
)

__version__ = "0.1.0"
