import numpy as np

from tblmi.fourier import PeriodicMatrix

# filled by test_acceptance, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def random_periodic(rng, shape, degree, period=1.0, real=True, symmetric=False, scale=1.0):
    ph = {}
    for k in range(0 if real else -degree, degree + 1):
        blk = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        if real and k == 0:
            blk = blk.real.astype(complex)
        if symmetric:
            blk = 0.5 * (blk + blk.T)
        ph[k] = scale * blk
    return PeriodicMatrix(ph, shape, period, real=real, symmetric=symmetric)
