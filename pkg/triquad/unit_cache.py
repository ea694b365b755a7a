import os
import json
import logging
import threading
from datetime import datetime

from triquad.errors import InconsistencyError
from triquad.quadratic import QuadUnit

logger = logging.getLogger(__name__)

SCHEMA = 'quadunit'
VERSION = 1


class UnitCache:
    """Line-delimited JSON store of fundamental units, keyed by d.

    Records are untrusted: every line is re-verified on load (Pell identity,
    and the unit must not be a proper power of a smaller one); bad lines are
    skipped and recomputed on first use.
    """

    def __init__(self, cache_path='data/unit_cache.jsonl', read_only=False):
        self.cache_path = cache_path
        self.read_only = read_only
        self.units = {}
        self._lock = threading.Lock()
        if not read_only:
            directory = os.path.dirname(cache_path)
            if directory:
                os.makedirs(directory, exist_ok=True)
            self.create_file()
            self.migrate_file()
        self.load()

    def create_file(self):
        if not os.path.exists(self.cache_path) or os.path.getsize(self.cache_path) == 0:
            with open(self.cache_path, 'w') as f:
                f.write(json.dumps(self._header(), sort_keys=True) + '\n')
            logger.info(f"Created unit cache at {self.cache_path}")

    def _header(self):
        return {'schema': SCHEMA, 'version': VERSION, 'created': datetime.now().isoformat()}

    def migrate_file(self):
        """Rewrite a headerless file (plain unit records) with the current header."""
        with open(self.cache_path) as f:
            lines = f.read().splitlines()
        if not lines:
            return
        try:
            first = json.loads(lines[0])
        except json.JSONDecodeError:
            first = {}
        if first.get('schema') == SCHEMA:
            if first.get('version') != VERSION:
                logger.warning(f"Unit cache version {first.get('version')} differs from {VERSION}")
            return
        logger.info(f"Migrating headerless unit cache {self.cache_path}")
        with open(self.cache_path, 'w') as f:
            f.write(json.dumps(self._header(), sort_keys=True) + '\n')
            for line in lines:
                if line.strip():
                    f.write(line.strip() + '\n')

    def load(self):
        if not os.path.exists(self.cache_path):
            return
        skipped = 0
        with open(self.cache_path) as f:
            for number, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    if record.get('schema') == SCHEMA:
                        continue
                    unit = QuadUnit.from_dict(record)
                except (json.JSONDecodeError, AttributeError, InconsistencyError) as e:
                    skipped += 1
                    logger.warning(f"Skipping bad unit cache line {number}: {str(e)}")
                    continue
                self.units[unit.d] = unit
        logger.info(f"Loaded {len(self.units)} units from {self.cache_path}"
                    + (f" ({skipped} rejected)" if skipped else ""))

    def get(self, d):
        with self._lock:
            return self.units.get(int(d))

    def put(self, unit):
        with self._lock:
            if unit.d in self.units:
                return False
            self.units[unit.d] = unit
            if self.read_only:
                return True
            try:
                with open(self.cache_path, 'a') as f:
                    f.write(json.dumps(unit.to_dict(), sort_keys=True) + '\n')
            except OSError as e:
                logger.error(f"Error writing unit cache: {str(e)}")
                raise
            return True

    def __contains__(self, d):
        return int(d) in self.units

    def __len__(self):
        return len(self.units)
