from django.http import HttpResponse, JsonResponse
from django.contrib.auth.decorators import login_required
from django.shortcuts import get_object_or_404
from django.utils import timezone
from experiments.models import ExperimentRun
import csv

TRIAL_HEADERS = ['n', 'trial', 'seed', 'depth', 'k_modified', 'k_abz', 'k_exact', 'statistic', 'elapsed']


def _blank(value):
    return '' if value is None else value


@login_required
def export_run_trials_csv(request, run_id):
    """Export the trial records of a saved run to CSV"""
    run = get_object_or_404(ExperimentRun, run_id=run_id)
    response = HttpResponse(content_type='text/csv')
    response['Content-Disposition'] = f'attachment; filename="{run.run_id}_trials_{timezone.now().strftime("%Y%m%d_%H%M%S")}.csv"'

    writer = csv.writer(response)
    writer.writerow(TRIAL_HEADERS)
    for record in run.trials.order_by('n', 'trial'):
        writer.writerow([_blank(getattr(record, name)) for name in TRIAL_HEADERS])

    return response


@login_required
def export_run_summary_json(request, run_id):
    """Export the summary of a saved run (config, predictions, aggregates)"""
    run = get_object_or_404(ExperimentRun, run_id=run_id)
    payload = {
        'run_id': run.run_id,
        'kind': run.kind,
        'status': run.status,
        'created_at': run.created_at.isoformat(),
        'summary': run.summary,
    }
    response = JsonResponse(payload, json_dumps_params={'indent': 2})
    response['Content-Disposition'] = f'attachment; filename="{run.run_id}_summary.json"'
    return response
