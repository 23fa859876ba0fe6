"""Robust phase retrieval with l_p fitting."""
from .baseline import gs, hio
from .crb import crb_gaussian, crb_laplacian, fim_amplitude_phase, fim_laplacian_complex, fim_laplacian_real
from .estimators import AltGD, AltIRLS, GerchbergSaxton
from .linop import (
    DenseOperator,
    Fourier2DOperator,
    MaskedDFTOperator,
    MeasurementOperator,
    make_dense,
    make_fourier2d,
    make_masked_dft,
)
from .metrics import aligned_error, aligned_error_2d, mse_db, success_rate
from .solver import SolverConfig, alt_gd, alt_gd_accel, alt_gd_block, alt_irls, solve, spectral_init, staged_p_init

__all__ = [
    "AltGD", "AltIRLS", "GerchbergSaxton", "SolverConfig",
    "alt_irls", "alt_gd", "alt_gd_accel", "alt_gd_block", "solve", "spectral_init", "staged_p_init",
    "gs", "hio",
    "MeasurementOperator", "DenseOperator", "MaskedDFTOperator", "Fourier2DOperator",
    "make_dense", "make_masked_dft", "make_fourier2d",
    "fim_laplacian_complex", "fim_laplacian_real", "fim_amplitude_phase", "crb_laplacian", "crb_gaussian",
    "aligned_error", "aligned_error_2d", "mse_db", "success_rate",
]
__version__ = "0.1.0"
