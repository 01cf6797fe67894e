from flask import Blueprint

commands = Blueprint("characterisation", __name__, cli_group=None)

from app.cli import analyze, detect, plot, sweep  # noqa: E402,F401  registers the commands
