import logging
from concurrent.futures import ThreadPoolExecutor

logger = logging.getLogger(__name__)


class StepExecutor:
    """
    Runs independent sweep steps, on a thread pool when more than one worker
    is configured.

    Sweep results do not depend on scheduling, so the worker count only
    changes wall-clock time.
    """

    def __init__(self, workers=1):
        self.workers = workers

    def init_app(self, app):
        self.workers = max(1, int(app.config.get("SWEEP_WORKERS", 1)))
        app.extensions["step_executor"] = self
        logger.debug(f"Step executor configured with {self.workers} worker(s).")

    def map(self, fn, iterable):
        if self.workers == 1:
            return list(map(fn, iterable))

        with ThreadPoolExecutor(max_workers=self.workers) as pool:
            return list(pool.map(fn, iterable))


step_executor = StepExecutor()
