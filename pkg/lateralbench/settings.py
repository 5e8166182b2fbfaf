"""
Django settings for the lateralbench project.
"""

import os
from pathlib import Path
from dotenv import load_dotenv
import dj_database_url

# Load environment variables from .env
load_dotenv()

# BASE DIR
BASE_DIR = Path(__file__).resolve().parent.parent

# --------------------------
# GENERAL SETTINGS
# --------------------------
# Secret key (unused by the command-line surface, required by Django)
SECRET_KEY = os.environ.get('DJANGO_SECRET_KEY', 'django-insecure-dev-key-only-for-local')

# Debug mode
DEBUG = os.environ.get('DEBUG', 'False').lower() == 'true'

ALLOWED_HOSTS = []

# --------------------------
# APPLICATIONS
# --------------------------
INSTALLED_APPS = [
    'numerics',
    'vehicle',
    'trajectory',
    'controllers',
    'metrics',
    'tuning',
    'campaigns',
]

# --------------------------
# DATABASE
# --------------------------
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

# Override with DATABASE_URL if provided
if 'DATABASE_URL' in os.environ:
    DATABASES['default'] = dj_database_url.config(
        default=os.environ['DATABASE_URL'],
        conn_max_age=600,
        conn_health_checks=True,
    )

# --------------------------
# INTERNATIONALIZATION
# --------------------------
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

# --------------------------
# LOGGING
# --------------------------
LOG_LEVEL = os.environ.get('LATERAL_BENCH_LOG_LEVEL', 'INFO').upper()

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
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
        'level': LOG_LEVEL,
    },
    'loggers': {
        # matplotlib is chatty at INFO about font discovery
        'matplotlib': {'level': 'WARNING'},
    },
}


# --------------------------
# SIMULATION DEFAULTS
# --------------------------
def _env_float(name, default):
    return float(os.environ.get(f'LATERAL_BENCH_{name}', default))


def _env_int(name, default):
    return int(os.environ.get(f'LATERAL_BENCH_{name}', default))


LATERAL_BENCH = {
    'CONTROL_PERIOD': _env_float('CONTROL_PERIOD', 0.05),   # s, 20 Hz
    'PLANT_STEP': _env_float('PLANT_STEP', 0.001),          # s
    'MAX_LATERAL_ERROR': _env_float('MAX_LATERAL_ERROR', 3.0),  # m
    'PATH_STEP': _env_float('PATH_STEP', 0.5),              # m
    'MIN_MODEL_SPEED': _env_float('MIN_MODEL_SPEED', 1.0),  # m/s
    'GAIN_SCHEDULE_STEP': _env_float('GAIN_SCHEDULE_STEP', 0.5),  # m/s
    'END_TOLERANCE': _env_float('END_TOLERANCE', 1.0),      # m
    'TIMEOUT_FACTOR': _env_float('TIMEOUT_FACTOR', 2.0),
    'SPEED_GAIN': _env_float('SPEED_GAIN', 1.0),            # 1/s
    'SPEED_LOOKAHEAD': _env_float('SPEED_LOOKAHEAD', 1.0),  # m
    'CREEP_SPEED': _env_float('CREEP_SPEED', 0.5),          # m/s
    'QP_MAX_ITER': _env_int('QP_MAX_ITER', 10),
    'DARE_TOL': _env_float('DARE_TOL', 1e-12),
    'DARE_MAX_ITER': _env_int('DARE_MAX_ITER', 100000),
    'JOBS': _env_int('JOBS', os.cpu_count() or 1),
    'SEED': _env_int('SEED', 0),
}

# --------------------------
# DEFAULTS
# --------------------------
DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'
