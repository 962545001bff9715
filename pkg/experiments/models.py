import uuid

from django.db import models
from django.utils import timezone


class ExperimentRun(models.Model):
    """A finished experiment: its config, predictions and aggregates"""

    KIND_CHOICES = [
        ('schedule', 'Schedule batches'),
        ('estimate_m', 'Estimate the depth constant'),
        ('profile', 'Layer and service profiles'),
        ('fine_asymptotics', 'Second-order correction'),
        ('sandwich', 'Sandwich bounds'),
    ]

    STATUS_CHOICES = [
        ('completed', 'Completed'),
        ('failed', 'Completed with failures'),
    ]

    run_id = models.CharField(max_length=20, unique=True, editable=False)
    kind = models.CharField(max_length=20, choices=KIND_CHOICES)
    status = models.CharField(max_length=20, choices=STATUS_CHOICES, default='completed')

    # Configuration
    config = models.JSONField(default=dict)
    config_hash = models.CharField(max_length=64, db_index=True)
    seed = models.CharField(max_length=20, help_text="Master seed (unsigned 64-bit)")
    output_dir = models.CharField(max_length=500, blank=True)

    # Results
    summary = models.JSONField(default=dict)
    failures = models.PositiveIntegerField(default=0)

    created_at = models.DateTimeField(auto_now_add=True)
    updated_at = models.DateTimeField(auto_now=True)

    class Meta:
        ordering = ['-created_at']
        verbose_name = 'Experiment Run'
        verbose_name_plural = 'Experiment Runs'

    def save(self, *args, **kwargs):
        if not self.run_id:
            self.run_id = f'EXP{timezone.now().strftime("%Y%m%d")}{uuid.uuid4().hex[:8].upper()}'
        super().save(*args, **kwargs)

    def __str__(self):
        return f"{self.run_id} - {self.get_kind_display()}"

    @property
    def trial_count(self):
        return self.trials.count()

    @property
    def passed(self):
        return self.failures == 0


class TrialRecord(models.Model):
    """One trial of a run; nullable columns are empty for kinds that do not produce them"""
    run = models.ForeignKey(ExperimentRun, on_delete=models.CASCADE, related_name='trials')
    n = models.PositiveIntegerField()
    trial = models.PositiveIntegerField()
    seed = models.CharField(max_length=20)

    depth = models.PositiveIntegerField(null=True, blank=True)
    k_modified = models.PositiveIntegerField(null=True, blank=True)
    k_abz = models.PositiveIntegerField(null=True, blank=True)
    k_exact = models.PositiveIntegerField(null=True, blank=True)
    statistic = models.FloatField(null=True, blank=True)
    elapsed = models.FloatField(default=0.0, help_text="Wall-clock seconds")

    class Meta:
        ordering = ['run', 'n', 'trial']
        unique_together = ['run', 'n', 'trial']
        verbose_name = 'Trial Record'
        verbose_name_plural = 'Trial Records'

    def __str__(self):
        return f"{self.run.run_id} n={self.n} #{self.trial}"
