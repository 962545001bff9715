"""
WSGI entry point; the project serves the admin for saved runs and the
export downloads.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'disk_scheduling.settings')

application = get_wsgi_application()
