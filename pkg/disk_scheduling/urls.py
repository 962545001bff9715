"""
URL configuration for the disk_scheduling project.

The admin browses persisted experiment runs; exports serves their files.
"""
from django.contrib import admin
from django.urls import path, include
from django.views.generic import RedirectView

urlpatterns = [
    path('admin/', admin.site.urls),
    path('', RedirectView.as_view(url='/admin/', permanent=False)),
    path('exports/', include('exports.urls')),
]
