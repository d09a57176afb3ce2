"""Pure-numpy split-step kernel, API-compatible with the compiled one."""

import numpy as np


def split_step_run(psi, u_half, n_exc, thetas, cos_phi, sin_phi, n_sites):
    """Advance `psi` in place through thetas.shape[0] Strang steps.

    See the compiled kernel for the parameter contract.
    """
    dim = psi.shape[0]
    if (1 << n_sites) != dim:
        raise ValueError("state dimension is not 2**n_sites")
    shape = (2,) * n_sites
    exponents = np.arange(n_sites + 1)
    for k in range(thetas.shape[0]):
        for half in (0, 1):
            if half == 1:
                tensor = psi.reshape(shape)
                for axis in range(n_sites):
                    t = np.moveaxis(tensor, axis, 0)
                    a0 = t[0].copy()
                    a1 = t[1]
                    t[0] = cos_phi * a0 - 1j * sin_phi * a1
                    t[1] = cos_phi * a1 - 1j * sin_phi * a0
            theta = thetas[k, half]
            if theta == 0.0:
                psi *= u_half
            else:
                table = np.exp(1j * theta * exponents)
                psi *= u_half * np.take(table, n_exc)
    return psi
