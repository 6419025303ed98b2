import asyncio
from typing import Any, Callable, Dict, List


class EventEmitter:
    """
    Registers callbacks by event name and awaits them in registration order.

    Evolution and sweep services emit progress through this class ("step", "crossing",
    "checkpoint", "rundone") so that loggers, writers and oracles can subscribe without the
    services knowing about them.
    """

    def __init__(self):
        self._events: Dict[str, List[Callable]] = {}

    def on(self, event: str, callback: Callable):
        """
        Registers a callback for a specific event.

        Args:
            event (str): The name of the event.
            callback (Callable): Plain function or coroutine function.
        """
        self._events.setdefault(event, []).append(callback)

    def once(self, event: str, callback: Callable):
        """Registers a callback that is removed after its first call."""
        async def wrapper(*args: Any, **kwargs: Any):
            self.off(event, wrapper)
            await self._run_callback(callback, *args, **kwargs)

        self.on(event, wrapper)

    def off(self, event: str, callback: Callable):
        """Removes a previously registered callback; unknown callbacks are ignored."""
        if callback in self._events.get(event, []):
            self._events[event].remove(callback)

    def has_listeners(self, event: str) -> bool:
        return bool(self._events.get(event))

    async def emit(self, event: str, *args: Any, **kwargs: Any):
        """
        Emits an event and awaits all registered callbacks for that event.

        Args:
            event (str): The name of the event.
            *args (Any): Positional arguments passed to the callbacks.
            **kwargs (Any): Keyword arguments passed to the callbacks.
        """
        for callback in list(self._events.get(event, [])):
            await self._run_callback(callback, *args, **kwargs)

    async def _run_callback(self, callback: Callable, *args: Any, **kwargs: Any):
        if asyncio.iscoroutinefunction(callback):
            await callback(*args, **kwargs)
        else:
            callback(*args, **kwargs)
