"""Interference focusing for the memoryless optical interference network.

Ring-constellation design with exact cross-phase cancellation, channel
simulation, and Monte Carlo / analytic rate and detection-error estimates.
"""

from .constellation import (InfeasibleBudget, PowerBudget, RingConstellation, base_power_for_user,
                            choose_ring_count, choose_spacing_a, design_focused, verify_focusing)
from .detection import detect_ring, pe_bound, pe_exact, pe_monte_carlo, pe_report
from .model import (ChannelMatrix, NoiseSpec, PhenomParams, PowerVector, UnsupportedCoefficient,
                    channel_block, channel_step, interference_phases, phenom_step)
from .rates import (InterferenceLaw, MIEstimate, amplitude_contribution_lb, mi_monte_carlo,
                    one_ring_density, one_ring_rate_lb, phase_contribution_lb, total_rate_lb)
from .specfun import gamma0, gaussian_q, i0_upper_bound, i0e, marcum_q, marcum_q_bounds

__version__ = "0.1.0"
