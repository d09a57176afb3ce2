"""Kernel selection: the compiled split-step extension when available,
otherwise the pure-numpy fallback.  `KERNEL_BACKEND` names the choice."""

try:
    from ._kernels import split_step_run

    KERNEL_BACKEND = "compiled"
except ImportError:  # extension not built
    from ._kernels_py import split_step_run

    KERNEL_BACKEND = "python"

__all__ = ["split_step_run", "KERNEL_BACKEND"]
