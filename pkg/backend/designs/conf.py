from dataclasses import dataclass, fields, replace

from .exceptions import SpecError


@dataclass(frozen=True)
class Tolerances:
    """Numerical tolerances of the library.

    Defaults are tuned for internally generated designs; published tables
    printed to 4 decimals need ``resistance``/``certificate``/``optimality``
    around 5e-4.
    """

    weight_sum: float = 1e-12
    rank: float = 1e-10
    symmetry: float = 1e-12
    feasibility: float = 1e-8
    certificate: float = 1e-9
    resistance: float = 1e-9
    alpha: float = 1e-9
    optimality: float = 1e-6
    complete_symmetry: float = 1e-10
    zero_row: float = 1e-12
    gamma: float = 1e-12
    lp_pivot: float = 1e-9
    lp_residual: float = 1e-8
    support: float = 1e-10
    tie: float = 1e-12

    def replace(self, **overrides):
        return replace(self, **{k: float(v) for k, v in overrides.items() if v is not None})

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_settings(cls):
        from django.conf import settings

        overrides = getattr(settings, 'OPTDESIGN_TOLERANCES', {}) or {}
        unknown = set(overrides) - {f.name for f in fields(cls)}
        if unknown:
            raise SpecError(f'unknown tolerance(s) in OPTDESIGN_TOLERANCES: {sorted(unknown)}')
        return cls().replace(**overrides)


DEFAULT_TOLERANCES = Tolerances()

# Tolerance for inputs copied from tables printed with four decimals.
PUBLISHED_TABLE_TOLERANCE = 5e-4

# Objective seed when neither --seed nor OPTDESIGN_SEED is given.
DEFAULT_SEED = 20240101
