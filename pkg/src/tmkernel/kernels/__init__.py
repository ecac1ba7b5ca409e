from tmkernel.kernels.gram import (
    KernelSpec,
    SymmetricMatrix,
    empirical_gram,
    kernel_distance,
    kernel_eval,
)
from tmkernel.kernels.mercer import (
    MercerBasis,
    averaged_features,
    embedding_sq_norm,
    gaussian_mercer_features,
    l2_sq_norm,
    linear_features,
    mercer_partial_sum,
    multi_indices,
    poly_features,
    regularity_factor,
)

__all__ = [
    "KernelSpec", "SymmetricMatrix", "empirical_gram", "kernel_distance", "kernel_eval",
    "MercerBasis", "averaged_features", "embedding_sq_norm", "gaussian_mercer_features",
    "l2_sq_norm", "linear_features", "mercer_partial_sum", "multi_indices", "poly_features",
    "regularity_factor",
]
