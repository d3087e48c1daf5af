from django.http import JsonResponse
from django.shortcuts import get_object_or_404
from django.views.decorators.http import require_http_methods

from .models import ExperimentRun


def _run_payload(run, detail=False):
    payload = {
        'id': run.id,
        'experiment': run.experiment,
        'preset': run.preset,
        'seed': run.seed,
        'status': run.status,
        'version': run.version,
        'started_at': run.started_at.isoformat(),
        'finished_at': run.finished_at.isoformat() if run.finished_at else None,
        'duration': run.duration(),
    }
    if detail:
        payload.update({
            'config': run.config,
            'summary': run.summary,
            'error': run.error,
            'output_dir': run.output_dir,
            'snapshots': [
                {'id': s.id, 't': s.t, 'kind': s.kind, 'n_particles': s.n_particles}
                for s in run.snapshots.all()
            ],
        })
    return payload


@require_http_methods(["GET"])
def run_list_view(request):
    """Recorded runs, newest first; ?experiment= and ?status= filter"""
    runs = ExperimentRun.objects.all()
    experiment = request.GET.get('experiment')
    if experiment:
        runs = runs.filter(experiment=experiment)
    status = request.GET.get('status')
    if status:
        runs = runs.filter(status=status)
    return JsonResponse({'runs': [_run_payload(run) for run in runs]})


@require_http_methods(["GET"])
def run_detail_view(request, run_id):
    run = get_object_or_404(ExperimentRun, pk=run_id)
    return JsonResponse(_run_payload(run, detail=True))
