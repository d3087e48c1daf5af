"""
URL configuration for plgp_project project.

The admin exposes recorded experiment runs and particle snapshots; the
``plgp`` app serves the same records as read-only JSON.
"""
from django.contrib import admin
from django.urls import path, include

urlpatterns = [
    path('admin/', admin.site.urls),
    path('plgp/', include('plgp.urls')),
]
