"""
Django settings for plgp_project project.

Every PLGP_* knob below can be overridden from the environment or a ``.env``
file at the project root (python-decouple), e.g. ``PLGP_WORKERS=4``.
"""

from pathlib import Path

from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = config(
    'SECRET_KEY',
    default='django-insecure-plgp-local-development-key-change-me',
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config('DEBUG', default=True, cast=bool)

ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# Application definition

INSTALLED_APPS = [
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'plgp',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'plgp_project.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'context_processors': [
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    },
]

WSGI_APPLICATION = 'plgp_project.wsgi.application'


# Database

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_TZ = True


# Static files (admin only)

STATIC_URL = 'static/'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Long desk-preset acceptance runs are excluded unless PLGP_ACCEPTANCE is set
TEST_RUNNER = 'plgp.testing.PLGPTestRunner'
PLGP_ACCEPTANCE = config('PLGP_ACCEPTANCE', default=False, cast=bool)


# Particle learning defaults (desk scale; the `full` preset raises them)
PLGP_PARTICLES = config('PLGP_PARTICLES', default=200, cast=int)
PLGP_INIT_MH_ROUNDS = config('PLGP_INIT_MH_ROUNDS', default=2000, cast=int)
PLGP_INIT_THIN = config('PLGP_INIT_THIN', default=10, cast=int)
PLGP_WINDOW = (
    config('PLGP_WINDOW_U', default=4.0, cast=float),
    config('PLGP_WINDOW_L', default=3.0, cast=float),
)
# exponent of the (1 + 0.1 (t - t0)) window narrowing factor; 0 disables
PLGP_WINDOW_GAMMA = config('PLGP_WINDOW_GAMMA', default=0.0, cast=float)
PLGP_PRIOR_RATE = config('PLGP_PRIOR_RATE', default=5.0, cast=float)
PLGP_CLASS_PRIOR = (
    config('PLGP_CLASS_PRIOR_A', default=5.0, cast=float),
    config('PLGP_CLASS_PRIOR_B', default=10.0, cast=float),
)
PLGP_CLASS_SAMPLES = config('PLGP_CLASS_SAMPLES', default=100, cast=int)
PLGP_GIBBS_FOLD = config('PLGP_GIBBS_FOLD', default=10, cast=int)
PLGP_RESAMPLE = config('PLGP_RESAMPLE', default='multinomial')
PLGP_REJUVENATE = config('PLGP_REJUVENATE', default=True, cast=bool)
PLGP_WORKERS = config('PLGP_WORKERS', default=1, cast=int)
PLGP_SEED = config('PLGP_SEED', default=1, cast=int)

# Sequential design defaults
PLGP_EI_CANDIDATES = config('PLGP_EI_CANDIDATES', default=40, cast=int)
PLGP_AL_POOL = config('PLGP_AL_POOL', default=300, cast=int)
PLGP_MED_RANGE = config('PLGP_MED_RANGE', default=0.5, cast=float)
PLGP_FMIN_MODE = config('PLGP_FMIN_MODE', default='mean-surface')

# Output locations
PLGP_OUTPUT_DIR = Path(config('PLGP_OUTPUT_DIR', default=str(BASE_DIR / 'results')))
PLGP_SNAPSHOT_VERSION = 1

LOG_DIR = BASE_DIR / 'logs'
PLGP_LOG_FILE = config('PLGP_LOG_FILE', default=False, cast=bool)

# Logging Configuration
LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {thread:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': False,
        },
        'plgp': {
            'handlers': ['console'],
            'level': config('PLGP_LOG_LEVEL', default='INFO'),
            'propagate': False,
        },
    },
}

if PLGP_LOG_FILE:
    LOG_DIR.mkdir(exist_ok=True)
    LOGGING['handlers']['file'] = {
        'class': 'logging.FileHandler',
        'filename': LOG_DIR / 'plgp.log',
        'formatter': 'verbose',
    }
    LOGGING['loggers']['plgp']['handlers'].append('file')
    LOGGING['loggers']['django']['handlers'].append('file')
