import math

from django import forms
from django.core.exceptions import ValidationError

from density.distributions import load_density, read_document
from scheduler.tours import EXACT_LIMIT


class SizeListField(forms.Field):
    """Batch sizes as a list, a single number or a comma list such as '1e4,1e5'."""

    def to_python(self, value):
        if value in self.empty_values:
            return []
        if isinstance(value, (int, float)):
            items = [value]
        elif isinstance(value, str):
            items = [item for item in value.replace(' ', '').split(',') if item]
        else:
            items = list(value)
        sizes = []
        for item in items:
            try:
                size = float(item)
            except (TypeError, ValueError):
                raise ValidationError(f'{item!r} is not a number')
            if not math.isfinite(size) or size != int(size) or size < 1:
                raise ValidationError(f'Batch size {item!r} must be a positive integer')
            sizes.append(int(size))
        return sizes


class DensityField(forms.Field):
    """A density spec given inline, by name ('uniform') or as a JSON/YAML file path; cleans to a spec dict."""

    def to_python(self, value):
        if value in self.empty_values:
            return {'kind': 'uniform'}
        if isinstance(value, dict):
            return value
        if isinstance(value, str):
            if value == 'uniform':
                return {'kind': 'uniform'}
            document = read_document(value)
            if not isinstance(document, dict):
                raise ValidationError(f'{value} does not hold a density spec')
            return document
        raise ValidationError('A density must be a spec mapping, a file path or "uniform"')

    def validate(self, value):
        super().validate(value)
        # builds the Density once so a bad spec fails here, before any work
        load_density(value)


class ExperimentConfigForm(forms.Form):
    KIND_CHOICES = [
        ('schedule', 'Schedule batches'),
        ('estimate_m', 'Estimate the depth constant'),
        ('profile', 'Layer and service profiles'),
        ('fine_asymptotics', 'Second-order correction'),
        ('sandwich', 'Sandwich bounds on small batches'),
    ]

    SURFACE_CHOICES = [
        ('disk', 'Disk (cylinder, vertical order)'),
        ('square', 'Unit square (componentwise order)'),
    ]

    FORMAT_CHOICES = [
        ('csv', 'CSV'),
        ('json', 'JSON'),
    ]

    kind = forms.ChoiceField(choices=KIND_CHOICES)
    density = DensityField(required=False)
    c = forms.FloatField(required=False)
    n = SizeListField(required=False)
    trials = forms.IntegerField(required=False, min_value=1)
    seed = forms.IntegerField(required=False, min_value=0, max_value=2 ** 64 - 1)
    out = forms.CharField(required=False, max_length=500)
    surface = forms.ChoiceField(choices=SURFACE_CHOICES, required=False)
    grid = forms.IntegerField(required=False, min_value=10, max_value=2000)
    window = forms.IntegerField(required=False, min_value=1, max_value=32)
    workers = forms.IntegerField(required=False, min_value=1, max_value=256)
    format = forms.ChoiceField(choices=FORMAT_CHOICES, required=False)

    def clean_c(self):
        c = self.cleaned_data.get('c')
        if c is not None and (not math.isfinite(c) or c <= 0):
            raise ValidationError('The seek slope c must be positive')
        return c

    def clean(self):
        cleaned_data = super().clean()
        kind = cleaned_data.get('kind')
        sizes = cleaned_data.get('n') or []
        surface = cleaned_data.get('surface') or 'disk'

        if kind == 'sandwich' and any(n > EXACT_LIMIT for n in sizes):
            raise ValidationError(f'Sandwich runs solve batches exactly; n must be at most {EXACT_LIMIT}')
        if kind == 'fine_asymptotics' and any(n < 2 for n in sizes):
            raise ValidationError('The correction band needs n >= 2')
        if surface == 'square' and kind not in ('estimate_m', 'profile'):
            raise ValidationError('The square surface is only available for estimate_m and profile runs')
        if kind == 'fine_asymptotics':
            spec = cleaned_data.get('density')
            if spec is not None and load_density(spec).kind != 'uniform':
                raise ValidationError('The correction band is stated for the uniform density only')
        if kind == 'profile' and surface == 'square' and cleaned_data.get('density') is not None \
                and load_density(cleaned_data['density']).kind != 'uniform':
            raise ValidationError('The pile profile is stated for the uniform square only')
        if kind == 'profile' and surface == 'disk' and cleaned_data.get('density') is not None \
                and not load_density(cleaned_data['density']).is_radial:
            raise ValidationError('Disk profiles need a radial density')
        return cleaned_data
