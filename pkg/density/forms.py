import math

from django import forms
from django.core.exceptions import ValidationError


class DensitySpecForm(forms.Form):
    """Validates a density spec document before a Density is built from it."""

    KIND_CHOICES = [
        ('uniform', 'Uniform'),
        ('radial_step', 'Radial step function'),
        ('radial_smooth', 'Radial piecewise-linear table'),
        ('general_grid', 'General grid table'),
    ]

    kind = forms.ChoiceField(choices=KIND_CHOICES)
    breakpoints = forms.JSONField(required=False)
    values = forms.JSONField(required=False)
    radii = forms.JSONField(required=False)
    table = forms.JSONField(required=False)

    @staticmethod
    def _numbers(value, field):
        if not isinstance(value, (list, tuple)) or not value:
            raise ValidationError({field: 'Expected a non-empty list of numbers'})
        try:
            return [float(v) for v in value]
        except (TypeError, ValueError):
            raise ValidationError({field: 'Every entry must be a number'})

    def clean(self):
        cleaned_data = super().clean()
        kind = cleaned_data.get('kind')
        if kind == 'radial_step':
            breakpoints = self._numbers(cleaned_data.get('breakpoints'), 'breakpoints')
            values = self._numbers(cleaned_data.get('values'), 'values')
            if len(breakpoints) != len(values) + 1:
                raise ValidationError('A step density needs one more breakpoint than values')
            if breakpoints[0] != 0.0 or breakpoints[-1] != 1.0:
                raise ValidationError('Step breakpoints must start at 0 and end at 1')
            if any(b <= a for a, b in zip(breakpoints, breakpoints[1:])):
                raise ValidationError('Step breakpoints must be strictly increasing')
            cleaned_data['breakpoints'], cleaned_data['values'] = breakpoints, values
        elif kind == 'radial_smooth':
            values = self._numbers(cleaned_data.get('values'), 'values')
            if len(values) < 2:
                raise ValidationError('A tabulated radial density needs at least two values')
            radii = cleaned_data.get('radii')
            if radii:
                radii = self._numbers(radii, 'radii')
                if len(radii) != len(values):
                    raise ValidationError('radii and values must have the same length')
                if radii[0] != 0.0 or radii[-1] != 1.0 or any(b <= a for a, b in zip(radii, radii[1:])):
                    raise ValidationError('radii must increase strictly from 0 to 1')
            cleaned_data['values'], cleaned_data['radii'] = values, radii or None
        elif kind == 'general_grid':
            table = cleaned_data.get('table')
            if not isinstance(table, list) or len(table) < 2:
                raise ValidationError({'table': 'Expected an m x m list of rows, m >= 2'})
            rows = [self._numbers(row, 'table') for row in table]
            if any(len(row) != len(rows) for row in rows):
                raise ValidationError({'table': 'The grid table must be square'})
            cleaned_data['table'] = rows

        values = cleaned_data.get('values') if kind in ('radial_step', 'radial_smooth') else None
        table = cleaned_data.get('table') if kind == 'general_grid' else None
        flat = values if values is not None else [v for row in table or [] for v in row]
        if any(not math.isfinite(v) or v < 0 for v in flat):
            raise ValidationError('Density values must be finite and non-negative')
        return cleaned_data
