"""Process-wide thread cap for FFT workers.

Only the number of workers handed to ``scipy.fft`` is affected. Multi-axis
transforms split independent 1-D lines across workers, so results do not
depend on the setting.
"""
import os

_threads = None


def get_threads():
    if _threads is not None:
        return _threads
    env = os.environ.get("FRACSPACE_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return 1


def set_threads(n):
    global _threads
    _threads = None if n is None else max(1, int(n))
