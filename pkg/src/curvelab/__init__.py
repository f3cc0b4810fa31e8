"""curvelab: numerical laboratory for operators along variable plane curves.

Measures the boundedness, decay, and sharpness behavior of maximal averages
and Hilbert transforms along curves ``(t, u(x, y) [t]^a)``, together with the
supporting dyadic frequency machinery (projections, shifted maximal
operators, oscillatory kernels, parabola decoupling ratios, and local
smoothing averages).
"""

from .cutoffs import (
    CutoffFamily,
    averaging_bump,
    base_bump,
    fattened_bump,
    project_annulus,
    project_cone,
    project_first,
    project_second,
    psi,
    psi0,
)
from .curves import (
    CurveField,
    RectangleCover,
    TruncationScheme,
    average_along_curve,
    ball_adversarial_field,
    bracket_power,
    carleson_sup,
    constant_field,
    dyadic_monomial_maximal,
    hilbert_along_curve,
    lipschitz_field,
    maximal_along_curve,
    measurable_field,
    one_variable_field,
    rectangle_majorant,
    safe_eps0,
    truncated_piece,
)
from .decoupling import (
    CapDecomposition,
    DecouplingWeight,
    bilinear_ratio,
    decoupling_ratio,
    dilated_average_sup,
    extension,
    local_smoothing_decay,
)
from .experiments import (
    EXPERIMENTS,
    ConfigError,
    ExperimentConfig,
    SweepResult,
    default_config,
    emit_csv,
    emit_plot,
    fit_exponent,
    run_experiment,
)
from .grid import (
    BandSpec,
    FitResult,
    GridFunction,
    TorusGrid,
    annulus_band,
    make_grid,
    norm_lp,
    power_law_fit,
    random_field,
    rect_band,
    spectral_shift,
)
from .oscillatory import (
    OscillatoryKernelParams,
    annulus_decay_1d,
    fresnel_segment,
    kernel_I_xi,
    multiplier_diff_sum,
    multiplier_mjk,
    multiplier_mjk_tilde,
    vdc_baseline,
)
from .shifted import shifted_max_1d, shifted_max_2d, vv_norm_ratio

__version__ = "0.1.0"
