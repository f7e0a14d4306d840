"""
Numerical solver settings.
"""

import logging
import os
from typing import Mapping, Optional

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .errors import ConfigError

logger = logging.getLogger(__name__)

THREADS_ENV = "LAMBDA_CAVITY_THREADS"


class SolverSettings(BaseModel):
    """
    Tolerances and resource limits shared by the solvers.

    Attributes:
        kernel_rtol: Singular values below ``kernel_rtol * sigma_max`` count as
            kernel directions
        decay_rtol: Eigenvalues with real part above ``-decay_rtol * scale``
            are treated as non-decaying
        defect_cond: Largest acceptable condition number of the left/right
            kernel overlap before the kernel is declared defective
        dense_limit: Largest vectorized dimension solved with dense
            decompositions when looking for steady states
        residual_rtol: Largest acceptable relative steady-state residual
        threads: Worker count for parameter sweeps (0 picks the default)
    """

    model_config = ConfigDict(frozen=True)

    kernel_rtol: float = Field(1e-10, gt=0, lt=1)
    decay_rtol: float = Field(1e-12, gt=0, lt=1)
    defect_cond: float = Field(1e8, gt=1)
    dense_limit: int = Field(400, ge=1)
    residual_rtol: float = Field(1e-8, gt=0)
    threads: int = Field(0, ge=0)

    @classmethod
    def from_env(cls, environ: Optional[Mapping[str, str]] = None) -> "SolverSettings":
        """
        Build settings, honouring ``LAMBDA_CAVITY_THREADS``.

        Args:
            environ: Environment mapping, ``os.environ`` when omitted

        Returns:
            Settings with the thread cap applied

        Raises:
            ConfigError: If the variable is not a non-negative integer
        """
        environ = os.environ if environ is None else environ
        raw = environ.get(THREADS_ENV, "").strip()
        if not raw:
            return cls()
        try:
            settings = cls(threads=int(raw))
        except (ValueError, ValidationError) as exc:
            raise ConfigError(
                f"must be a non-negative integer, got {raw!r}", key=THREADS_ENV
            ) from exc
        logger.debug(f"Sweep concurrency capped at {settings.threads} threads")
        return settings
