"""
Django settings for the weakmeasure project.

The project hosts a simulation library (one Django app per concern under
``apps/``) and exposes it through the ``run_scenario`` management command.
There is no web surface and no database.

Environment variables are read with environs. A ``.env`` file in the
project root is picked up when present.
"""

from pathlib import Path

from environs import Env

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

env = Env()
try:
    env.read_env(BASE_DIR / ".env")
except Exception:  # noqa: broad-except (missing or malformed .env is not fatal)
    pass

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = env.str("SECRET_KEY", "insecure-key")

DEBUG = env.bool("DEBUG", False)

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    # third party apps
    "rest_framework",
    # local apps
    "apps.linalg",
    "apps.classical",
    "apps.quantum",
    "apps.trajectories",
    "apps.ensemble",
    "apps.scenarios",
]

# Simulations never touch the ORM
DATABASES = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Reports are rendered to JSON through DRF serializers
REST_FRAMEWORK = {
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "UNAUTHENTICATED_USER": None,
    "COERCE_DECIMAL_TO_STRING": False,
}


# Simulation defaults used by the run_scenario command

WEAKMEASURE = {
    "DEFAULT_SEED": env.int("WEAKMEASURE_DEFAULT_SEED", 20240601),
    "THREADS": env.int("WEAKMEASURE_THREADS", 1),
    "OUTPUT_DIR": env.path("WEAKMEASURE_OUTPUT_DIR", BASE_DIR / "results"),
    "BLOCK_SIZE": env.int("WEAKMEASURE_BLOCK_SIZE", 250),
}

LOG_LEVEL = env.log_level("WEAKMEASURE_LOG_LEVEL", "INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "verbose": {
            "format": "%(filename)s [LINE:%(lineno)d] #%(levelname)-8s [%(asctime)s]  %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "verbose",
        },
    },
    "loggers": {
        "apps": {
            "handlers": ["console"],
            "level": LOG_LEVEL,
            "propagate": False,
        },
    },
}
