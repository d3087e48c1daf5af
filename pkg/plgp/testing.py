from django.conf import settings
from django.test.runner import DiscoverRunner


class PLGPTestRunner(DiscoverRunner):
    """Skips tests tagged ``acceptance`` unless PLGP_ACCEPTANCE is set or the tag is asked for."""

    def __init__(self, *args, tags=None, exclude_tags=None, **kwargs):
        exclude_tags = set(exclude_tags or ())
        if not settings.PLGP_ACCEPTANCE and 'acceptance' not in (tags or ()):
            exclude_tags.add('acceptance')
        super().__init__(*args, tags=tags, exclude_tags=exclude_tags, **kwargs)
