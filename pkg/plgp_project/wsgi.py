"""
WSGI config for plgp_project project.

It exposes the WSGI callable as a module-level variable named ``application``.
Only the admin and the read-only run browser are served over HTTP.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'plgp_project.settings')

application = get_wsgi_application()
