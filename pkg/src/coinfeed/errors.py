"""Exception hierarchy shared by every coinfeed module."""


class CoinGameError(Exception):
    """Base class for all errors raised by coinfeed."""


class ConfigError(CoinGameError, ValueError):
    """Invalid game, strategy or experiment parameters."""


class GameFinished(CoinGameError):
    pass


class GameNotFinished(CoinGameError):
    pass


class PartitionMismatch(CoinGameError, ValueError):
    pass


class ScriptExhausted(CoinGameError):
    pass


class WrongK(ConfigError):
    pass


class TooFewCoins(ConfigError):
    pass


class BadQ(ConfigError):
    pass


class NotSWPartition(CoinGameError):
    """Bob offered something other than the rank-parity split."""


class TooLarge(CoinGameError):
    """An exhaustive search exceeds its size guard."""


class MemoUnsound(CoinGameError):
    """Memoization was requested for a Bob strategy that cannot support it."""


class BudgetExceeded(CoinGameError):
    pass


class TraceError(CoinGameError, ValueError):
    """A serialized trace is malformed or internally inconsistent."""


class NotSlowTuple(CoinGameError, ValueError):
    """The index tuple has two or more indices of the moved parity."""
