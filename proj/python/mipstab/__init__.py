from ._core import (
    FittedModel,
    MipstabError,
    __version__,
    accuracy,
    exact_shap,
    fit_pca,
    generate,
    kendall_tau_b,
    kernel_shap,
    mip_scores,
    nmr,
    pearson_r,
    stability_report,
    train,
)

__all__ = [
    "FittedModel",
    "MipstabError",
    "__version__",
    "accuracy",
    "exact_shap",
    "fit_pca",
    "generate",
    "kendall_tau_b",
    "kernel_shap",
    "mip_scores",
    "nmr",
    "pearson_r",
    "stability_report",
    "train",
]
