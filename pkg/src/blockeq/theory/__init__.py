"""Deterministic side: semicircle transform, Bessel kernels, series and asymptotics."""
from blockeq.theory.asymptotics import AsymptoticPrediction, approach_direction, asymptotic_prediction
from blockeq.theory.contour import contour_msc_power_closed, contour_msc_power_quadrature
from blockeq.theory.graf import graf_sum
from blockeq.theory.series import (
    HAT,
    A_asymptotic,
    A_correction,
    A_series,
    integral_fraction_asymptotic,
    integral_fraction_correction,
    integral_fraction_series,
    reduced_matrix,
    t1_value,
    t2_asymptotic,
    t2_series,
    theory_w,
    theory_w_3x3,
    theory_w_correction,
    theory_w_table,
    w12_series_2x2,
    w_series_reduced,
)
from blockeq.theory.special import bessel_j, bessel_j_sequence, bessel_square_weights, m_sc
from blockeq.theory.stability import (
    SpectralPair,
    StabilityBlocks2,
    StabilityBlocks3,
    n_hat,
    n_values,
    spectral_pair,
    stability_inverse_2x2,
    stability_inverse_3x3,
)
