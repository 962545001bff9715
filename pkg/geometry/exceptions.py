from django.core.exceptions import ValidationError


class GeneralPositionError(ValidationError):
    """Two requests sit exactly on each other's seek boundary (or coincide)."""

    def __init__(self, pair, message=None):
        self.pair = tuple(int(i) for i in pair)
        super().__init__(
            message or f'Requests {self.pair[0]} and {self.pair[1]} are not in general position',
            code='general_position',
            params={'pair': self.pair},
        )
