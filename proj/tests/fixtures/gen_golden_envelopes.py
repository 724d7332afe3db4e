#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Hand-encodes one envelope per message type: A2 01 <type> <u32 BE length> <sorted compact JSON><raw payload>."""
import json

MESSAGES = [
    (0x01, "InviteNotify", {"session_id": "s1", "wearer": "alice", "expires_at": 3600000}, b""),
    (0x02, "DropInRequest", {"session_id": "s1"}, b""),
    (0x03, "DropInGrant", {"dropin_id": "d1", "ends_at": 60000, "presence_indicator": True}, b""),
    (0x04, "DropInDeny", {"reason": "NotInvited"}, b""),
    (0x05, "FrameChunk", {"dropin_id": "d1", "captured_at": 100, "width": 2, "height": 2, "blur_applied": 3},
     bytes([0, 64, 128, 255])),
    (0x06, "AudioChunk", {"dropin_id": "d1", "seq": 7, "sender": "bob"}, bytes([1, 2, 3])),
    (0x07, "MuteToggle", {"dropin_id": "d1", "muted": True}, b""),
    (0x08, "Project", {"dropin_id": "d1", "content_id": "dragon"}, b""),
    (0x09, "Reposition", {"dropin_id": "d1", "anchor_x": 0.25, "anchor_y": 0.75}, b""),
    (0x0A, "ExtendTap", {"dropin_id": "d1"}, b""),
    (0x0B, "TimerSync", {"dropin_id": "d1", "remaining_ms": 40000}, b""),
    (0x0C, "DropInEnd", {"dropin_id": "d1", "cause": "timeout"}, b""),
    (0x0D, "SessionEnd", {"session_id": "s1", "cause": "expired"}, b""),
    (0x0E, "Error", {"code": "WrongRole", "detail": "friend only"}, b""),
    (0x81, "Hello", {"user": "alice", "role": "wearer", "token": "t0k"}, b""),
    (0x82, "StartArcall", {"friend": "bob", "arcall_duration_s": 300, "blur_level": 4}, b""),
]


def envelope(msg_type, body, raw):
    payload = json.dumps(body, sort_keys=True, separators=(",", ":")).encode() + raw
    return bytes([0xA2, 0x01, msg_type]) + len(payload).to_bytes(4, "big") + payload


for t, name, body, raw in MESSAGES:
    print(f'{{"{name}", "{envelope(t, body, raw).hex()}"}},')
