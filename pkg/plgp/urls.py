from django.urls import path
from . import views

app_name = 'plgp'

urlpatterns = [
    path('runs/', views.run_list_view, name='run_list'),
    path('runs/<int:run_id>/', views.run_detail_view, name='run_detail'),
]
