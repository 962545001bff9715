'''Experiment configuration documents (JSON or YAML) and their validation.'''
import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml
from django.conf import settings
from django.core.exceptions import ValidationError

from density.distributions import read_document

from .forms import ExperimentConfigForm

DEFAULT_SIZES = {
    'schedule': [1000],
    'estimate_m': [10 ** 4],
    'profile': [10 ** 4],
    'fine_asymptotics': [10 ** 4],
    'sandwich': list(range(2, 10)),
}


def format_validation_error(error):
    return ' '.join(error.messages)


@dataclass
class ExperimentConfig:
    kind: str
    density: dict = field(default_factory=lambda: {'kind': 'uniform'})
    c: float = 1.0
    n: list = field(default_factory=list)
    trials: int = 1
    seed: int = None
    out: str = 'run'
    surface: str = 'disk'
    grid: int = 200
    window: int = 8
    workers: int = 1
    format: str = 'csv'

    @classmethod
    def from_dict(cls, data):
        '''Validate a raw document; missing values fall back to the defaults and settings.'''
        if not isinstance(data, dict):
            raise ValidationError('An experiment config must be a mapping', code='config')
        unknown = sorted(set(data) - set(cls.__dataclass_fields__))
        if unknown:
            raise ValidationError('Unknown config keys: ' + ', '.join(unknown), code='config')
        form = ExperimentConfigForm(data=data)
        if not form.is_valid():
            problems = [
                ' '.join(errors) if key == '__all__' else f'{key}: ' + ' '.join(errors)
                for key, errors in form.errors.items()
            ]
            raise ValidationError('Invalid experiment config: ' + '; '.join(problems), code='config')
        cleaned = {key: value for key, value in form.cleaned_data.items() if value not in (None, '', [])}
        kind = cleaned['kind']
        cleaned.setdefault('n', list(DEFAULT_SIZES[kind]))
        cleaned.setdefault('seed', settings.DISKTOUR_SEED)
        cleaned.setdefault('workers', settings.DISKTOUR_WORKERS)
        return cls(**cleaned)

    @classmethod
    def load(cls, path):
        return cls.from_dict(read_document(path))

    def to_dict(self):
        return asdict(self)

    def save(self, path):
        path = Path(path)
        if path.suffix.lower() in ('.yaml', '.yml'):
            path.write_text(yaml.safe_dump(self.to_dict(), sort_keys=True))
        else:
            path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True))
        return path

    def config_hash(self):
        '''sha256 of the canonical JSON form; workers and output location do not change results.'''
        canonical = {key: value for key, value in self.to_dict().items() if key not in ('workers', 'out')}
        return hashlib.sha256(json.dumps(canonical, sort_keys=True, separators=(',', ':')).encode()).hexdigest()

    @property
    def output_dir(self):
        path = Path(self.out)
        return path if path.is_absolute() else Path(settings.DISKTOUR_OUTPUT_ROOT) / path
