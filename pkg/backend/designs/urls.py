from django.urls import path

from . import views

urlpatterns = [
    path('runs/<int:run_id>/design.csv', views.export_run_csv, name='export_run_csv'),
    path('runs/<int:run_id>/design.xlsx', views.export_run_xlsx, name='export_run_xlsx'),
    path('runs/<int:run_id>/report.json', views.run_report, name='run_report'),
]
