"""Core domain types: scan configuration, host records, fingerprints, events.

Everything here is immutable after construction and free of I/O.  Durations
and timestamps are integer microseconds on the monotonic scan clock.
"""

from __future__ import annotations

import hashlib
import ipaddress
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Optional

from .timebase import SECOND, MILLISECOND

IPv4 = ipaddress.IPv4Address


@dataclass(frozen=True)
class AddressRange:
    """Inclusive IPv4 address interval.

    Parsed from either 'a.b.c.d-e.f.g.h', a single address, or a CIDR
    block (host addresses only, network/broadcast excluded).
    """

    low: IPv4
    high: IPv4

    def __post_init__(self):
        if self.high < self.low:
            raise ValueError(f"address range is empty: {self.low}-{self.high}")

    @classmethod
    def parse(cls, text: str) -> "AddressRange":
        text = text.strip()
        if "-" in text:
            lo, hi = text.split("-", 1)
            return cls(ipaddress.IPv4Address(lo.strip()), ipaddress.IPv4Address(hi.strip()))
        if "/" in text:
            net = ipaddress.IPv4Network(text, strict=False)
            hosts = list(net.hosts())
            if not hosts:
                raise ValueError(f"CIDR block {text} contains no host addresses")
            return cls(hosts[0], hosts[-1])
        addr = ipaddress.IPv4Address(text)
        return cls(addr, addr)

    def __iter__(self):
        cur = int(self.low)
        end = int(self.high)
        while cur <= end:
            yield ipaddress.IPv4Address(cur)
            cur += 1

    def __contains__(self, addr: IPv4) -> bool:
        return int(self.low) <= int(addr) <= int(self.high)

    def __len__(self) -> int:
        return int(self.high) - int(self.low) + 1

    def __str__(self) -> str:
        return f"{self.low}-{self.high}"


class PortState(Enum):
    OPEN = "open"          # handshake reached SYN+ACK
    CLOSED = "closed"      # RST received
    FILTERED = "filtered"  # no reply within the probe timeout


class Alive(Enum):
    UP = "up"               # answered ICMP echo
    SILENT_UP = "silent"    # answered ARP but ignores ICMP echo
    DOWN = "down"           # no response at all


@dataclass(frozen=True)
class ScanConfig:
    """All knobs of one scanner instance.  Durations in microseconds."""

    address_range: AddressRange
    port_range: tuple[int, int] = (1, 1024)
    ping_delay: int = 100 * MILLISECOND
    port_delay: int = 100 * MILLISECOND
    startup_delay_min: int = 60 * SECOND
    startup_delay_max: int = 300 * SECOND
    rescan_interval: int = 300 * SECOND
    seed: Optional[int] = None
    scan_silent_hosts: bool = False
    banner_grab: bool = True
    banner_max_bytes: int = 128
    rtt_anomaly_factor: float = 2.0
    rtt_anomaly_floor: int = 1 * MILLISECOND
    connect_timeout: int = 1 * SECOND
    ping_timeout: int = 1 * SECOND
    syn_scan: bool = False

    def __post_init__(self):
        lo, hi = self.port_range
        if not (1 <= lo <= hi <= 65535):
            raise ValueError(f"invalid port range {lo}..{hi}")
        if self.startup_delay_min < 0 or self.startup_delay_min > self.startup_delay_max:
            raise ValueError("invalid startup delay window")
        for name in ("ping_delay", "port_delay", "rescan_interval",
                     "connect_timeout", "ping_timeout"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.rtt_anomaly_factor < 1.0:
            raise ValueError("rtt_anomaly_factor must be >= 1.0")
        if self.rtt_anomaly_floor <= 0:
            raise ValueError("rtt_anomaly_floor must be strictly positive")
        if self.banner_max_bytes <= 0:
            raise ValueError("banner_max_bytes must be strictly positive")

    def ports(self):
        return range(self.port_range[0], self.port_range[1] + 1)


def config_digest(config: ScanConfig) -> int:
    """Stable 64-bit digest over the fields that decide scan comparability.

    Two fingerprints may only be diffed when these fields match: the swept
    address range, the port interval, and the banner collection settings.
    Timing knobs and the PRNG seed deliberately do not contribute.
    """
    canon = "|".join([
        str(config.address_range),
        f"{config.port_range[0]}-{config.port_range[1]}",
        "b1" if config.banner_grab else "b0",
        str(config.banner_max_bytes),
    ])
    h = hashlib.sha256(canon.encode("ascii")).digest()
    return int.from_bytes(h[:8], "big")


@dataclass(frozen=True)
class HostRecord:
    """One discovered host: liveness, ping timing, port states, banners."""

    address: IPv4
    alive: Alive
    rtt_samples: tuple[int, ...] = ()
    ports: Mapping[int, PortState] = field(default_factory=dict)
    banners: Mapping[int, bytes] = field(default_factory=dict)

    def __post_init__(self):
        if (len(self.rtt_samples) > 0) != (self.alive is Alive.UP):
            raise ValueError("rtt_samples must be nonempty exactly for Up hosts")
        if self.ports and self.alive is Alive.DOWN:
            raise ValueError("a Down host cannot have probed ports")
        for port, banner in self.banners.items():
            if self.ports.get(port) is not PortState.OPEN:
                raise ValueError(f"banner recorded for non-open port {port}")
            if not isinstance(banner, bytes):
                raise ValueError("banners must be byte strings")


@dataclass(frozen=True)
class NetworkFingerprint:
    """Timestamped result of one full sweep; the first one is the baseline."""

    started_at: int
    finished_at: int
    config_digest: int
    hosts: Mapping[IPv4, HostRecord]
    trusted: bool = False

    def __post_init__(self):
        if self.finished_at < self.started_at:
            raise ValueError("fingerprint finished before it started")
        for addr, rec in self.hosts.items():
            if rec.address != addr:
                raise ValueError(f"host map key {addr} != record address {rec.address}")

    def open_port_count(self) -> int:
        return sum(
            1
            for rec in self.hosts.values()
            for state in rec.ports.values()
            if state is PortState.OPEN
        )


class EventKind(Enum):
    # numeric values define the canonical sort order within one address
    HOST_ADDED = 0
    HOST_REMOVED = 1
    PORT_OPENED = 2
    PORT_CLOSED = 3
    BANNER_CHANGED = 4
    LATENCY_ANOMALY = 5

    @property
    def wire_name(self) -> str:
        return _KIND_WIRE[self]


_KIND_WIRE = {
    EventKind.HOST_ADDED: "HostAdded",
    EventKind.HOST_REMOVED: "HostRemoved",
    EventKind.PORT_OPENED: "PortOpened",
    EventKind.PORT_CLOSED: "PortClosed",
    EventKind.BANNER_CHANGED: "BannerChanged",
    EventKind.LATENCY_ANOMALY: "LatencyAnomaly",
}

KIND_BY_WIRE = {v: k for k, v in _KIND_WIRE.items()}

_PORT_KINDS = {EventKind.PORT_OPENED, EventKind.PORT_CLOSED, EventKind.BANNER_CHANGED}


@dataclass(frozen=True)
class IntrusionEvent:
    """One classified deviation between the baseline and a current scan."""

    kind: EventKind
    address: IPv4
    port: Optional[int] = None
    baseline_value: str = ""
    observed_value: str = ""
    scan_epoch: int = 0

    def __post_init__(self):
        if self.kind in _PORT_KINDS:
            if self.port is None:
                raise ValueError(f"{self.kind.wire_name} requires a port")
        elif self.port is not None:
            raise ValueError(f"{self.kind.wire_name} must not carry a port")

    def sort_key(self):
        return (int(self.address), self.kind.value, self.port if self.port is not None else -1)
