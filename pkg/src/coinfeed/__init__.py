"""Coin-game simulator and list-decoding feedback code."""
from .bob import RandomBob, ScriptedBob, SWBob, bob_from_name
from .codec import ChannelAdversary, ListDecodingFailure, Message, SessionResult, decode_list, run_session
from .eve import GreedyEve, RandomEve, eve_from_name, full_upper_bound_adversary, sw_attack_schedule
from .game import GameConfig, GameState, GameTrace, Partition, Winner, apply_round, evaluate, play, surviving_list

__version__ = "0.1.0"

__all__ = [
    "ChannelAdversary",
    "GameConfig",
    "GameState",
    "GameTrace",
    "GreedyEve",
    "ListDecodingFailure",
    "Message",
    "Partition",
    "RandomBob",
    "RandomEve",
    "SWBob",
    "ScriptedBob",
    "SessionResult",
    "Winner",
    "apply_round",
    "bob_from_name",
    "decode_list",
    "eve_from_name",
    "evaluate",
    "full_upper_bound_adversary",
    "play",
    "run_session",
    "surviving_list",
    "sw_attack_schedule",
]
