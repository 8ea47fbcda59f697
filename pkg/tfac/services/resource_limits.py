import logging
import multiprocessing
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from queue import Empty
from typing import TYPE_CHECKING, Any, Callable, Iterable, TypeVar

from tfac.exceptions import MemoryLimitError, RunLimitError, RunTimeoutError, TfacError
from tfac.settings import settings


if sys.platform != "win32" or TYPE_CHECKING:
    import signal
    import resource


logger = logging.getLogger(__name__)

T = TypeVar("T")

_POLL_INTERVAL = 0.2


def _limit_resources() -> None:
    """Apply the configured memory and CPU rlimits to the current process."""
    if sys.platform == "win32":
        return

    if settings.MAX_PROCESS_MEMORY:
        resource.setrlimit(
            resource.RLIMIT_AS,
            (settings.MAX_PROCESS_MEMORY, settings.MAX_PROCESS_MEMORY),
        )

    if settings.MAX_PROCESS_CPU_TIME:
        resource.setrlimit(
            resource.RLIMIT_CPU,
            (settings.MAX_PROCESS_CPU_TIME, settings.MAX_PROCESS_CPU_TIME),
        )


def _worker_wrapper(
    func: Callable[..., T],
    queue: multiprocessing.Queue,  # type: ignore[type-arg]
    *args: Any,
    **kwargs: Any,
) -> None:
    try:
        _limit_resources()
        result = func(*args, **kwargs)
        queue.put({"success": True, "result": result})
    except MemoryError:
        queue.put({"success": False, "error": "Memory limit exceeded", "type": "memory"})
    except TfacError as e:
        # Solver errors travel back intact so their exit codes survive
        queue.put({"success": False, "exception": e})
    except Exception as e:
        queue.put({"success": False, "error": str(e), "type": type(e).__name__})


def limits_configured() -> bool:
    return bool(
        settings.MAX_RUN_TIME
        or settings.MAX_PROCESS_MEMORY
        or settings.MAX_PROCESS_CPU_TIME
    )


def run_with_limits(
    func: Callable[..., T], *args: Any, timeout: int | None = None, **kwargs: Any
) -> T:
    """
    Run one sweep item in a child process with resource limits.

    Args:
        func: Module-level function to execute
        *args: Positional arguments for func
        timeout: Maximum time in seconds (default: settings.MAX_RUN_TIME)
        **kwargs: Keyword arguments for func

    Returns:
        Result from func

    Raises:
        RunTimeoutError: If execution exceeds timeout
        MemoryLimitError: If execution exceeds memory limit
        RunLimitError: If the child is killed or fails outside the solver
        TfacError: Any solver error raised by func
    """
    if timeout is None:
        timeout = settings.MAX_RUN_TIME

    queue: multiprocessing.Queue = multiprocessing.Queue()  # type: ignore[type-arg]
    process = multiprocessing.Process(
        target=_worker_wrapper, args=(func, queue, *args), kwargs=kwargs
    )

    process.start()
    deadline = None if timeout is None else time.monotonic() + timeout
    response = None
    # Large results block the child until drained, so read before joining
    while response is None:
        try:
            response = queue.get(timeout=_POLL_INTERVAL)
        except Empty:
            if not process.is_alive():
                try:
                    response = queue.get(timeout=_POLL_INTERVAL)
                except Empty:
                    pass
                break
            if deadline is not None and time.monotonic() > deadline:
                break
    process.join(timeout=5)

    if process.is_alive():
        process.terminate()
        process.join(timeout=5)
        if process.is_alive():
            process.kill()
            process.join()
        raise RunTimeoutError(f"Run exceeded {timeout} second timeout")

    if response is None:
        if sys.platform != "win32" and process.exitcode == -signal.SIGXCPU:
            raise RunLimitError("CPU time limit exceeded")
        if sys.platform != "win32" and process.exitcode in (
            -signal.SIGKILL,
            -signal.SIGTERM,
        ):
            raise MemoryLimitError("Memory limit exceeded or process killed")
        raise RunLimitError(f"Run terminated with exit code {process.exitcode}")

    if not response["success"]:
        if "exception" in response:
            raise response["exception"]
        if response.get("type") == "memory":
            raise MemoryLimitError(response["error"])
        raise RunLimitError(f"{response.get('type', 'Unknown')}: {response.get('error')}")

    result: T = response["result"]
    return result


def run_sweep(
    func: Callable[..., T],
    items: Iterable[tuple[Any, ...]],
    workers: int | None = None,
) -> list[T]:
    """
    Run ``func(*item)`` for every item of a sweep; results keep the input order.

    With one worker and no limits configured the calls run inline; otherwise each
    item gets its own limited child process, at most ``workers`` at a time.
    """
    items = list(items)
    workers = workers or settings.MAX_WORKERS

    if workers <= 1 and not limits_configured():
        return [func(*item) for item in items]

    logger.info("Running %d sweep items on %d workers", len(items), workers)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(run_with_limits, func, *item) for item in items]
        return [future.result() for future in futures]
