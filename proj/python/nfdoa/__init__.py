"""Near-field DoA estimation: VCM reconstruction, subspace features, and a
complex-valued residual network, with MUSIC baselines."""

from ._core import (  # noqa: F401
    ArrayConfig,
    DatasetSpec,
    EvalReport,
    History,
    LossKind,
    LrSchedule,
    Model,
    OptimizerKind,
    Sample,
    SourcePlacement,
    TrainConfig,
    __version__,
    analytic_covariance,
    build_cvnn,
    build_dataset,
    build_tdnn,
    crop_vcm,
    evaluate,
    exact_range,
    far_field_ideal_covariance,
    far_field_steering,
    features_from_snapshots,
    flops_count,
    fresnel_bounds,
    fresnel_params,
    fresnel_steering,
    hermitian_eig,
    load_checkpoint,
    music_spectrum_far,
    near_field_music,
    near_field_steering,
    rayleigh_distance,
    received_snapshots,
    reconstruct_vcm,
    sample_covariance,
    save_checkpoint,
    signal_subspace,
    tdnn_flops,
    train_model,
    train_on_pairs,
)
