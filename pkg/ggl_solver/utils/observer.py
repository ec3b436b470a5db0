"""Observer pattern for solver progress events."""


class ObserverKeys:
    """Event keys published by the solvers."""

    OUTER_ITERATION = 'outer_iteration'
    ADMM_ITERATION = 'admm_iteration'
    SOLVE_FINISHED = 'solve_finished'
    OBSERVER_KEYS_SOLVER = {OUTER_ITERATION, ADMM_ITERATION, SOLVE_FINISHED}

    INFO_MESSAGE = 'info_message'
    ERROR_MESSAGE = 'error_message'
    OBSERVER_KEYS_MESSAGE = {INFO_MESSAGE, ERROR_MESSAGE}

    ALL_KEYS = OBSERVER_KEYS_SOLVER | OBSERVER_KEYS_MESSAGE


class Observable:
    """Base class of every solver that reports progress."""

    def __init__(self):
        """Start without observers."""
        self.observers: list[Observer] = []

    def add_observer(self, observer):
        """Register an observer once."""
        if observer not in self.observers:
            self.observers.append(observer)

    def remove_observer(self, observer):
        """Unregister an observer; unknown observers are ignored."""
        if observer in self.observers:
            self.observers.remove(observer)

    def notify_observers(self, key: str, *args, **kwargs):
        """Send an event key and its payload to every observer in registration order."""
        if key not in ObserverKeys.ALL_KEYS:
            raise ValueError(f'Unknown observer key: {key}')
        for observer in list(self.observers):
            observer.updateObservable(self, key, *args, **kwargs)


class Observer:
    """Receiver of solver events; args[0] is the ObserverKeys key."""

    def updateObservable(self, observable, *args, **kwargs):
        """Handle one event; the default ignores it."""
        pass
