import os
import logging
from dataclasses import dataclass, replace, asdict

from dotenv import load_dotenv

from triquad.errors import PreconditionError

load_dotenv()

logger = logging.getLogger(__name__)

OUTPUT_FORMATS = ('json', 'csv', 'text')


@dataclass(frozen=True)
class Config:
    precision_start: int = 256
    precision_max: int = 4096
    denominator_bound: int = 4
    denominator_escalation: int = 16
    oracle_bound: int = 10**6
    cache_path: str = 'data/unit_cache.jsonl'
    results_dir: str = 'data'
    output_format: str = 'json'
    workers: int = 1

    @classmethod
    def from_env(cls, **overrides):
        config = cls(
            precision_start=int(os.getenv('TRIQUAD_PRECISION_START', 256)),
            precision_max=int(os.getenv('TRIQUAD_PRECISION_MAX', 4096)),
            oracle_bound=int(os.getenv('TRIQUAD_ORACLE_BOUND', 10**6)),
            cache_path=os.getenv('TRIQUAD_CACHE_PATH', 'data/unit_cache.jsonl'),
            results_dir=os.getenv('TRIQUAD_RESULTS_DIR', 'data'),
            output_format=os.getenv('TRIQUAD_FORMAT', 'json'),
            workers=int(os.getenv('TRIQUAD_WORKERS', 1)),
        )
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if overrides:
            config = replace(config, **overrides)
        config.validate()
        logger.debug(f"Configuration: {asdict(config)}")
        return config

    def validate(self):
        for name in ('precision_start', 'precision_max', 'denominator_bound',
                     'denominator_escalation', 'oracle_bound', 'workers'):
            if getattr(self, name) <= 0:
                raise PreconditionError(f"{name} must be positive, got {getattr(self, name)}")
        if self.precision_start > self.precision_max:
            raise PreconditionError(
                f"precision_start ({self.precision_start}) exceeds precision_max ({self.precision_max})")
        if self.output_format not in OUTPUT_FORMATS:
            raise PreconditionError(
                f"Unknown output format '{self.output_format}', expected one of {', '.join(OUTPUT_FORMATS)}")
        return self

    def precision_ladder(self):
        """Guard-bit levels from precision_start to precision_max, doubling."""
        level = self.precision_start
        while level < self.precision_max:
            yield level
            level *= 2
        yield self.precision_max


DEFAULT_CONFIG = Config()
