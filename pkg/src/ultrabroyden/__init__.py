"""Non-archimedean Broyden solver with zealous precision tracking."""

from .field import (INF, AtLeast, FieldContext, Fpt, Qp, UltraScalar, change_prec,
                    exact_oracle, sample_unit)
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["INF", "AtLeast", "FieldContext", "Fpt", "Qp", "UltraScalar", "change_prec",
           "exact_oracle", "sample_unit", "KERNEL_BACKEND"]
