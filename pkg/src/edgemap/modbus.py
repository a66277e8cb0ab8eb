"""Minimal Modbus/TCP Read Device Identification framing.

Only the Basic identification category is handled: function 0x2B
(Encapsulated Interface Transport), MEI type 0x0E, read code 0x01,
objects 0x00 VendorName / 0x01 ProductCode / 0x02 MajorMinorRevision.
"""

from __future__ import annotations

import struct

from .errors import MalformedResponse

FUNCTION = 0x2B
MEI_TYPE = 0x0E
READ_BASIC = 0x01

OBJ_VENDOR = 0x00
OBJ_PRODUCT = 0x01
OBJ_REVISION = 0x02


def _mbap(tid: int, unit: int, pdu: bytes) -> bytes:
    return struct.pack(">HHHB", tid, 0, len(pdu) + 1, unit) + pdu


def _split_mbap(frame: bytes):
    if len(frame) < 8:
        raise ValueError("frame shorter than MBAP header")
    tid, proto, length, unit = struct.unpack(">HHHB", frame[:7])
    if proto != 0:
        raise ValueError(f"bad protocol id {proto}")
    pdu = frame[7:]
    if len(pdu) + 1 != length:
        raise ValueError("MBAP length does not match frame")
    return tid, unit, pdu


def build_device_id_request(tid: int = 0, unit: int = 1) -> bytes:
    pdu = bytes([FUNCTION, MEI_TYPE, READ_BASIC, 0x00])
    return _mbap(tid, unit, pdu)


def parse_device_id_request(frame: bytes):
    """Return (tid, unit) if the frame is a Basic device-id request."""
    tid, unit, pdu = _split_mbap(frame)
    if len(pdu) != 4 or pdu[0] != FUNCTION or pdu[1] != MEI_TYPE:
        raise ValueError("not a device identification request")
    if pdu[2] != READ_BASIC:
        raise ValueError(f"unsupported read code {pdu[2]:#x}")
    return tid, unit


def build_device_id_response(tid: int, unit: int, objects: dict) -> bytes:
    """Serialize an object-id -> string map, ids ascending."""
    body = bytearray([FUNCTION, MEI_TYPE, READ_BASIC, 0x01, 0x00, 0x00, len(objects)])
    for obj_id in sorted(objects):
        data = objects[obj_id].encode("ascii")
        body += bytes([obj_id, len(data)]) + data
    return _mbap(tid, unit, bytes(body))


def parse_device_id_response(frame: bytes) -> dict:
    """Parse a device-id response back into an object-id -> string map.

    Replies that are not device identification responses at all (wrong
    framing, wrong function, or a Modbus exception) raise ValueError and
    mean "identification unsupported".  A reply that does claim to be a
    device-id response but has corrupt object encoding raises
    MalformedResponse instead.
    """
    tid, unit, pdu = _split_mbap(frame)
    if len(pdu) >= 1 and pdu[0] == (FUNCTION | 0x80):
        raise ValueError("device returned a Modbus exception")
    if len(pdu) < 7 or pdu[0] != FUNCTION or pdu[1] != MEI_TYPE:
        raise ValueError("not a device identification response")
    if pdu[2] != READ_BASIC:
        raise ValueError(f"unexpected read code {pdu[2]:#x}")
    count = pdu[6]
    objects = {}
    offset = 7
    for _ in range(count):
        if offset + 2 > len(pdu):
            raise MalformedResponse("truncated object header")
        obj_id, length = pdu[offset], pdu[offset + 1]
        offset += 2
        if offset + length > len(pdu):
            raise MalformedResponse("truncated object data")
        try:
            objects[obj_id] = pdu[offset:offset + length].decode("ascii")
        except UnicodeDecodeError as exc:
            raise MalformedResponse("non-ascii object data") from exc
        offset += length
    if offset != len(pdu):
        raise MalformedResponse("trailing bytes after last object")
    return objects
