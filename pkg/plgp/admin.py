from django.contrib import admin

from .models import ExperimentRun, ParticleSnapshot


class ParticleSnapshotInline(admin.TabularInline):
    model = ParticleSnapshot
    fields = ('t', 'kind', 'n_particles', 'created_at')
    readonly_fields = ('t', 'kind', 'n_particles', 'created_at')
    extra = 0
    can_delete = False


@admin.register(ExperimentRun)
class ExperimentRunAdmin(admin.ModelAdmin):
    """Admin interface for recorded experiment runs"""
    list_display = ('experiment', 'preset', 'seed', 'status', 'version', 'started_at', 'duration_seconds')
    list_filter = ('experiment', 'preset', 'status', 'started_at')
    search_fields = ('experiment', 'version', 'output_dir')
    ordering = ('-started_at',)
    inlines = [ParticleSnapshotInline]

    fieldsets = (
        ('Run', {'fields': ('experiment', 'preset', 'seed', 'status', 'version', 'output_dir')}),
        ('Results', {'fields': ('config', 'summary', 'error')}),
        ('Timestamps', {'fields': ('started_at', 'finished_at'), 'classes': ('collapse',)}),
    )

    readonly_fields = ('started_at', 'finished_at')

    def duration_seconds(self, obj):
        seconds = obj.duration()
        return None if seconds is None else round(seconds, 1)
    duration_seconds.short_description = 'Duration (s)'


@admin.register(ParticleSnapshot)
class ParticleSnapshotAdmin(admin.ModelAdmin):
    """Admin interface for particle snapshots"""
    list_display = ('run', 'kind', 't', 'n_particles', 'created_at')
    list_filter = ('kind', 'created_at')
    search_fields = ('run__experiment',)
    ordering = ('-created_at',)
    readonly_fields = ('created_at',)

    def get_queryset(self, request):
        return super().get_queryset(request).select_related('run')
