"""Toeplitz-block LMIs for linear time-periodic systems.

Periodic matrix functions are stored by their phasors; infinite TB
operators are handled through consistent truncation (banded entries,
banded unknowns, corrected products) and the resulting finite SDPs are
checked against time-domain oracles.
"""

from .fourier import (AliasingError, HarmonicTrajectory, PeriodicMatrix, band_project,
                      eval_periodic, phasors_from_samples, reconstruct, sliding_fourier)
from .harmonic_control import (CertificateResult, LtpSystem, SpectrumResult, SynthesisError,
                               SynthesisResult, convergence_sweep, gain_distance,
                               lqr_synthesize, spectrum, stability_certificate,
                               statefb_synthesize, trace_monotone)
from .toeplitz import (hankel_block, hankel_corrections, n_operator, pi_m, product_phasors,
                       tb_product_corrected, toeplitz_truncate, trace_tb)

__version__ = "0.1.0"
