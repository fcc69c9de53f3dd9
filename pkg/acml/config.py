"""Runtime settings, read from the environment (and a local `.env` file)."""
import os

from dotenv import load_dotenv
from pydantic import BaseModel, Field

from .connections import DEFAULT_RK4_STEP


class Settings(BaseModel):
    """Defaults for sampling, sweeps and integration; CLI flags override them."""
    points: int = Field(200, ge=1, description='Number of sample points per check.')
    seed: int = Field(42, description='Seed of the point sampler.')
    tolerance: float = Field(1e-8, gt=0, description='Residual tolerance for verdicts.')
    workers: int = Field(1, ge=1, description='Threads used by point sweeps.')
    chunk: int = Field(64, ge=1, description='Points per sweep chunk (fixed, so results do not depend on workers).')
    rk4_step: float = Field(DEFAULT_RK4_STEP, gt=0,
                            description='Parallel-transport step as a fraction of parameter length.')
    fiber_halfwidth: float = Field(1.0, gt=0, description='Half width of the sampling box on lifted fiber coordinates.')
    fd_step: float = Field(1e-4, gt=0, description='Step of the finite-difference oracle.')
    log_level: str = Field('WARNING', description='Logging level name.')

    @classmethod
    def from_env(cls) -> 'Settings':
        load_dotenv()
        values = {}
        for field, var in (
            ('points', 'ACML_POINTS'),
            ('seed', 'ACML_SEED'),
            ('tolerance', 'ACML_TOL'),
            ('workers', 'ACML_WORKERS'),
            ('chunk', 'ACML_CHUNK'),
            ('rk4_step', 'ACML_RK4_STEP'),
            ('fiber_halfwidth', 'ACML_FIBER_HALFWIDTH'),
            ('fd_step', 'ACML_FD_STEP'),
            ('log_level', 'ACML_LOG_LEVEL'),
        ):
            raw = os.getenv(var)
            if raw:
                values[field] = raw
        return cls(**values)
