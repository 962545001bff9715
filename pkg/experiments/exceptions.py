class ReportIOError(Exception):
    """Writing an experiment's output files failed."""

    def __init__(self, path, error):
        self.path = path
        self.error = error
        super().__init__(f'Cannot write {path}: {error}')
