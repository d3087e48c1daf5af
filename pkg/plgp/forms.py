from django import forms
from django.conf import settings
from django.core.exceptions import ValidationError

from .exceptions import PLGPError
from .experiments import FORMATS, PRESETS, RunConfig
from .particles import RESAMPLE_SCHEMES

# form field -> RunConfig.build keyword
FIELD_MAP = {
    'particles': 'n_particles',
    'seed': 'seed',
    't0': 't0',
    'rounds': 'T',
    'out': 'out_dir',
    'resample': 'resample_scheme',
    'format': 'fmt',
    'workers': 'workers',
    'rep_workers': 'rep_workers',
    'replications': 'replications',
    'candidates': 'candidates',
    'pool_size': 'pool_size',
    'test_size': 'test_size',
    'noise_sd': 'noise_sd',
    'window_u': 'window_u',
    'window_l': 'window_l',
    'window_gamma': 'window_gamma',
    'init_mh_rounds': 'init_mh_rounds',
    'init_thin': 'init_thin',
    'mcmc_iters': 'mcmc_iters',
    'mcmc_thin': 'mcmc_thin',
    'class_samples': 'class_samples',
    'fold_size': 'fold_size',
    'fmin_mode': 'fmin_mode',
    'med_range': 'med_range',
}


class RunConfigForm(forms.Form):
    """Validates command-line options (merged with a JSON config file) for one experiment"""
    preset = forms.ChoiceField(choices=[('desk', 'desk'), ('full', 'full')], required=False)
    particles = forms.IntegerField(min_value=1, required=False)
    seed = forms.IntegerField(min_value=0, required=False)
    t0 = forms.IntegerField(min_value=0, required=False)
    rounds = forms.IntegerField(min_value=1, required=False, help_text='Final design size T')
    out = forms.CharField(required=False)
    no_rejuvenate = forms.BooleanField(required=False)
    resample = forms.ChoiceField(choices=[(s, s) for s in RESAMPLE_SCHEMES], required=False)
    format = forms.ChoiceField(choices=[(f, f) for f in FORMATS], required=False)
    workers = forms.IntegerField(min_value=1, required=False)
    rep_workers = forms.IntegerField(min_value=1, required=False)
    replications = forms.IntegerField(min_value=1, required=False)
    candidates = forms.IntegerField(min_value=1, required=False)
    pool_size = forms.IntegerField(min_value=1, required=False)
    test_size = forms.IntegerField(min_value=1, required=False)
    noise_sd = forms.FloatField(min_value=0.0, required=False)
    window_u = forms.FloatField(required=False)
    window_l = forms.FloatField(required=False)
    window_gamma = forms.FloatField(required=False)
    init_mh_rounds = forms.IntegerField(min_value=0, required=False)
    init_thin = forms.IntegerField(min_value=1, required=False)
    mcmc_iters = forms.IntegerField(min_value=1, required=False)
    mcmc_thin = forms.IntegerField(min_value=1, required=False)
    class_samples = forms.IntegerField(min_value=1, required=False)
    fold_size = forms.IntegerField(min_value=1, required=False)
    fmin_mode = forms.ChoiceField(
        choices=[('mean-surface', 'mean-surface'), ('observed', 'observed')], required=False,
    )
    med_range = forms.FloatField(required=False)
    smoothing = forms.CharField(required=False, help_text="'map' or a kernel range")

    def __init__(self, experiment, *args, **kwargs):
        super().__init__(*args, **kwargs)
        self.experiment = experiment

    def _preset_value(self, key):
        preset = self.cleaned_data.get('preset') or 'desk'
        return PRESETS[self.experiment][preset].get(key)

    def clean_smoothing(self):
        value = (self.cleaned_data.get('smoothing') or '').strip()
        if not value or value == 'off':
            return None
        if value == 'map':
            return value
        try:
            value = float(value)
        except ValueError:
            raise ValidationError("Smoothing must be 'off', 'map' or a positive kernel range")
        if value <= 0:
            raise ValidationError('Smoothing range must be positive')
        return value

    def clean_med_range(self):
        value = self.cleaned_data.get('med_range')
        if value is not None and value <= 0:
            raise ValidationError('MED range must be positive')
        return value

    def clean(self):
        cleaned_data = super().clean()
        if self.experiment not in PRESETS:
            raise ValidationError(f'Unknown experiment {self.experiment}')

        t0 = cleaned_data.get('t0')
        if t0 is None:
            t0 = self._preset_value('t0')
        rounds = cleaned_data.get('rounds')
        if rounds is None:
            rounds = self._preset_value('T')
        if t0 is not None and rounds is not None and rounds <= t0:
            raise ValidationError(f'Rounds (T = {rounds}) must exceed t0 = {t0}')

        u, l = cleaned_data.get('window_u'), cleaned_data.get('window_l')
        if u is not None or l is not None:
            u = settings.PLGP_WINDOW[0] if u is None else u
            l = settings.PLGP_WINDOW[1] if l is None else l
            if not (u > l > 0):
                raise ValidationError(f'Proposal window needs u > l > 0, got ({u}, {l})')
        return cleaned_data

    def to_run_config(self):
        """RunConfig for the validated options; errors from the config land on the form."""
        overrides = {
            target: self.cleaned_data.get(name)
            for name, target in FIELD_MAP.items()
            if self.cleaned_data.get(name) not in (None, '')
        }
        if self.cleaned_data.get('no_rejuvenate'):
            overrides['rejuvenate'] = False
        if self.cleaned_data.get('smoothing') is not None:
            overrides['smoothing'] = self.cleaned_data['smoothing']
        try:
            return RunConfig.build(
                self.experiment, preset=self.cleaned_data.get('preset') or 'desk', **overrides,
            )
        except PLGPError as exc:
            self.add_error(None, str(exc))
            return None
