import csv
import io

from django.contrib.auth import get_user_model
from django.test import TestCase
from django.urls import reverse

from experiments.models import ExperimentRun, TrialRecord


class RunExportTests(TestCase):

    @classmethod
    def setUpTestData(cls):
        cls.user = get_user_model().objects.create_user(username='analyst', password='pass-1234')
        cls.experiment_run = ExperimentRun.objects.create(
            kind='sandwich', config={'kind': 'sandwich'}, config_hash='a' * 64, seed='7',
            summary={'kind': 'sandwich', 'failures': 0},
        )
        TrialRecord.objects.create(run=cls.experiment_run, n=3, trial=1, seed='11', depth=2, k_modified=3, k_abz=3, k_exact=2)
        TrialRecord.objects.create(run=cls.experiment_run, n=3, trial=0, seed='10', depth=2, k_modified=2, k_abz=2)

    def test_login_required(self):
        response = self.client.get(reverse('exports:run_trials_csv', args=[self.experiment_run.run_id]))
        self.assertEqual(response.status_code, 302)
        self.assertIn('/admin/login/', response['Location'])

    def test_trials_csv(self):
        self.client.force_login(self.user)
        response = self.client.get(reverse('exports:run_trials_csv', args=[self.experiment_run.run_id]))
        self.assertEqual(response.status_code, 200)
        self.assertEqual(response['Content-Type'], 'text/csv')
        rows = list(csv.reader(io.StringIO(response.content.decode())))
        self.assertEqual(rows[0][:4], ['n', 'trial', 'seed', 'depth'])
        self.assertEqual([row[1] for row in rows[1:]], ['0', '1'])
        # missing exact optimum exports as an empty cell
        self.assertEqual(rows[1][6], '')

    def test_summary_json(self):
        self.client.force_login(self.user)
        response = self.client.get(reverse('exports:run_summary_json', args=[self.experiment_run.run_id]))
        self.assertEqual(response.status_code, 200)
        payload = response.json()
        self.assertEqual(payload['run_id'], self.experiment_run.run_id)
        self.assertEqual(payload['summary']['failures'], 0)

    def test_unknown_run(self):
        self.client.force_login(self.user)
        response = self.client.get(reverse('exports:run_summary_json', args=['EXP00000000DEADBEEF']))
        self.assertEqual(response.status_code, 404)
