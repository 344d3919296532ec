import csv
import io

from django.contrib.auth.decorators import login_required
from django.http import Http404, HttpResponse, JsonResponse
from django.shortcuts import get_object_or_404
from django.utils import timezone

from .models import DesignRun
from .problem import design_workbook, workbook_bytes


def _filename(run, extension):
    stamp = timezone.localtime(run.created).strftime("%Y%m%d_%H%M%S")
    return f'design_run_{run.pk}_{stamp}.{extension}'


def _design_rows(run):
    if not run.design_csv:
        raise Http404('This run has no design.')
    return list(csv.reader(io.StringIO(run.design_csv)))


@login_required
def export_run_csv(request, run_id):
    run = get_object_or_404(DesignRun, pk=run_id)
    rows = _design_rows(run)

    response = HttpResponse(content_type='text/csv')
    response['Content-Disposition'] = f'attachment; filename="{_filename(run, "csv")}"'
    writer = csv.writer(response)
    writer.writerows(rows)
    return response


@login_required
def export_run_xlsx(request, run_id):
    run = get_object_or_404(DesignRun, pk=run_id)
    wb = design_workbook(_design_rows(run), title=f'{run.verb} {run.criterion}')

    response = HttpResponse(
        workbook_bytes(wb),
        content_type='application/vnd.openxmlformats-officedocument.spreadsheetml.sheet',
    )
    response['Content-Disposition'] = f'attachment; filename="{_filename(run, "xlsx")}"'
    return response


@login_required
def run_report(request, run_id):
    run = get_object_or_404(DesignRun, pk=run_id)
    return JsonResponse({
        'id': run.pk,
        'verb': run.verb,
        'created': run.created.isoformat(),
        'problem': run.problem_data,
        'report': run.report_data,
        'sequence': run.sequence,
    })
