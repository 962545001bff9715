from django.urls import path
from . import views

app_name = 'exports'

urlpatterns = [
    # Saved experiment runs
    path('runs/<str:run_id>/trials.csv', views.export_run_trials_csv, name='run_trials_csv'),
    path('runs/<str:run_id>/summary.json', views.export_run_summary_json, name='run_summary_json'),
]
