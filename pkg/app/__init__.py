__version__ = "1.0.0"

import logging
import sys

from flask import Flask
from logging.handlers import RotatingFileHandler

from app.cli import commands
from app.extensions import step_executor

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(name)s - %(message)s"


def setup_logging(level="INFO", log_file=None, max_bytes=5_000_000, backup_count=3):
    """
    Configures package-wide logging.

    Console output goes to stderr so command results on stdout stay
    machine-readable.
    """
    logger = logging.getLogger(__name__)
    logger.setLevel(level)

    for handler in list(logger.handlers):
        logger.removeHandler(handler)
        handler.close()

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(console_handler)

    if log_file:
        file_handler = RotatingFileHandler(log_file, maxBytes=max_bytes, backupCount=backup_count)
        file_handler.setFormatter(logging.Formatter(LOG_FORMAT))
        logger.addHandler(file_handler)

    return logger


def create_app(config_class='config.DevelopmentConfig'):
    app = Flask(__name__)
    app.config.from_object(config_class)

    setup_logging(
        level=app.config['LOG_LEVEL'],
        log_file=app.config['LOG_FILE'],
        max_bytes=app.config['LOG_MAX_BYTES'],
        backup_count=app.config['LOG_BACKUP_COUNT'],
    )

    step_executor.init_app(app)
    app.register_blueprint(commands)

    return app
