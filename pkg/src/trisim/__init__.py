"""trisim: simulation and model-based restoration for three-wave 3D-SIM."""

from .volume import (GridSpec, Volume, Spectrum, fft_forward, fft_inverse,
                     inner_product, l2_normalize, clamp_nonnegative, norm,
                     save_volume, load_volume)
from .optics import OpticsParams, cutoff_frequencies, generate_psf, compute_otf
from .illumination import (PatternSpec, PatternComponent, pattern_components,
                           pattern_set, make_pattern_spec, recombine,
                           paper_phases)
from .forward import (AcquisitionData, ThreeWaveOperator, ComponentOperator,
                      apply_forward, apply_adjoint, add_poisson_noise,
                      simulate_acquisition, save_acquisition, load_acquisition)
from .scheme import AcquisitionScheme, scheme_pairs, build_specs, initial_guess
from .solver import (SolverConfig, TraceRecord, cost, grad_mb, grad_mbpc,
                     cg_direction, line_search_mb, line_search_mbpc,
                     run_solver)
from .gwf import GWFConfig, separation_matrix, separate_bands, run_gwf
from .phantom import (PhantomSpec, RingLayout, ExplicitLayout,
                      generate_phantom, bead_centers, bead_pair_anchor)
from .metrics import MetricsReport, mse, ssim3d, evaluate, line_profile, profile_dip
from .config import RunConfig, preset_config, build_config, dump_config
from .errors import TrisimError

__version__ = "0.1.0"
