from django.contrib import admin
from .models import ExperimentRun, TrialRecord

class TrialRecordInline(admin.TabularInline):
    model = TrialRecord
    extra = 0
    readonly_fields = ('n', 'trial', 'seed', 'depth', 'k_modified', 'k_abz', 'k_exact', 'statistic', 'elapsed')
    fields = readonly_fields
    can_delete = False

class ExperimentRunAdmin(admin.ModelAdmin):
    list_display = ('run_id', 'kind', 'status', 'seed', 'failures', 'trial_count', 'created_at')
    list_filter = ('kind', 'status', 'created_at')
    search_fields = ('run_id', 'config_hash', 'seed')
    readonly_fields = ('run_id', 'config_hash', 'trial_count', 'created_at', 'updated_at')
    inlines = [TrialRecordInline]

    fieldsets = (
        ('Run Information', {
            'fields': ('run_id', 'kind', 'status', 'failures')
        }),
        ('Configuration', {
            'fields': ('config', 'config_hash', 'seed', 'output_dir')
        }),
        ('Results', {
            'fields': ('summary', 'trial_count')
        }),
        ('Metadata', {
            'fields': ('created_at', 'updated_at'),
            'classes': ('collapse',)
        })
    )

    def trial_count(self, obj):
        return obj.trial_count
    trial_count.short_description = 'Trials'

class TrialRecordAdmin(admin.ModelAdmin):
    list_display = ('run', 'n', 'trial', 'depth', 'k_modified', 'k_abz', 'k_exact', 'statistic')
    list_filter = ('run__kind', 'n')
    search_fields = ('run__run_id', 'seed')

admin.site.register(ExperimentRun, ExperimentRunAdmin)
admin.site.register(TrialRecord, TrialRecordAdmin)
