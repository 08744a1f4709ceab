"""Console wire protocol and the websocket service that speaks it."""

from .protocol import (ProtocolError, WireMessage, decode_message,
                       effect_payload, encode_message)
from .service import EngineService, serve

__all__ = ["ProtocolError", "WireMessage", "decode_message", "encode_message",
           "effect_payload", "EngineService", "serve"]
