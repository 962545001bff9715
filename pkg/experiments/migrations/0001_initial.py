# Generated by Django 4.2.7 on 2026-10-18 09:12

import django.db.models.deletion
from django.db import migrations, models


class Migration(migrations.Migration):

    initial = True

    dependencies = [
    ]

    operations = [
        migrations.CreateModel(
            name='ExperimentRun',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('run_id', models.CharField(editable=False, max_length=20, unique=True)),
                ('kind', models.CharField(choices=[('schedule', 'Schedule batches'), ('estimate_m', 'Estimate the depth constant'), ('profile', 'Layer and service profiles'), ('fine_asymptotics', 'Second-order correction'), ('sandwich', 'Sandwich bounds')], max_length=20)),
                ('status', models.CharField(choices=[('completed', 'Completed'), ('failed', 'Completed with failures')], default='completed', max_length=20)),
                ('config', models.JSONField(default=dict)),
                ('config_hash', models.CharField(db_index=True, max_length=64)),
                ('seed', models.CharField(help_text='Master seed (unsigned 64-bit)', max_length=20)),
                ('output_dir', models.CharField(blank=True, max_length=500)),
                ('summary', models.JSONField(default=dict)),
                ('failures', models.PositiveIntegerField(default=0)),
                ('created_at', models.DateTimeField(auto_now_add=True)),
                ('updated_at', models.DateTimeField(auto_now=True)),
            ],
            options={
                'verbose_name': 'Experiment Run',
                'verbose_name_plural': 'Experiment Runs',
                'ordering': ['-created_at'],
            },
        ),
        migrations.CreateModel(
            name='TrialRecord',
            fields=[
                ('id', models.BigAutoField(auto_created=True, primary_key=True, serialize=False, verbose_name='ID')),
                ('n', models.PositiveIntegerField()),
                ('trial', models.PositiveIntegerField()),
                ('seed', models.CharField(max_length=20)),
                ('depth', models.PositiveIntegerField(blank=True, null=True)),
                ('k_modified', models.PositiveIntegerField(blank=True, null=True)),
                ('k_abz', models.PositiveIntegerField(blank=True, null=True)),
                ('k_exact', models.PositiveIntegerField(blank=True, null=True)),
                ('statistic', models.FloatField(blank=True, null=True)),
                ('elapsed', models.FloatField(default=0.0, help_text='Wall-clock seconds')),
                ('run', models.ForeignKey(on_delete=django.db.models.deletion.CASCADE, related_name='trials', to='experiments.experimentrun')),
            ],
            options={
                'verbose_name': 'Trial Record',
                'verbose_name_plural': 'Trial Records',
                'ordering': ['run', 'n', 'trial'],
                'unique_together': {('run', 'n', 'trial')},
            },
        ),
    ]
