import os


class Config:
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE = os.getenv("LOG_FILE", "characterisation.log")
    LOG_MAX_BYTES = 5_000_000
    LOG_BACKUP_COUNT = 3

    # Threads running sweep steps; 1 runs them in the calling thread
    SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS", "1"))

    CRITICAL_RANGE_K = 6.0


class DevelopmentConfig(Config):
    DEBUG = True
    LOG_LEVEL = os.getenv("LOG_LEVEL", "DEBUG")


class TestingConfig(Config):
    TESTING = True

    LOG_FILE = None
    SWEEP_WORKERS = 2


class ProductionConfig(Config):
    DEBUG = False

    SWEEP_WORKERS = int(os.getenv("SWEEP_WORKERS", str(os.cpu_count() or 1)))
