"""Channel scheduling: pack signal occurrences into slot/cycle/offset grids.

Slots live on a single id timeline shared by both channels: the same slot
id can carry a frame from a different owner on each channel.  Fault-
tolerant signals occupy identical positions on both channels; cross-
channel signals get a gateway-retransmitted image on the opposite channel,
placed in the same base cycle and pushed to a strictly later slot by the
final reordering pass.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .assignment import CH_A, CH_B, ChannelAssignment
from .model import (
    HYPERPERIOD_CYCLES,
    EcuKind,
    Instance,
    NetworkConfig,
    Signal,
    feasible_base_cycles,
)

BOTH = "BOTH"
CHANNELS = (CH_A, CH_B)


class InfeasibleWindowError(ValueError):
    """No base cycle satisfies a signal's release/deadline window."""


@dataclass(frozen=True)
class Placement:
    signal: int
    channel: str  # CH_A, CH_B or BOTH
    base_cycle: int
    slot: int
    offset_bytes: int
    is_image: bool = False


@dataclass(frozen=True)
class Occupancy:
    signal: int
    offset: int
    payload: int
    is_image: bool


@dataclass
class SlotColumn:
    owner: int
    is_gateway: bool
    frames: dict[int, list[Occupancy]] = field(default_factory=dict)
    # occupied-byte bitmask per cycle, kept in step with frames
    masks: dict[int, int] = field(default_factory=dict)

    def add(self, cycle: int, occ: Occupancy) -> None:
        self.frames.setdefault(cycle, []).append(occ)
        bits = ((1 << occ.payload) - 1) << occ.offset
        self.masks[cycle] = self.masks.get(cycle, 0) | bits


@dataclass
class Schedule:
    config: NetworkConfig
    columns: dict[str, dict[int, SlotColumn]] = field(
        default_factory=lambda: {CH_A: {}, CH_B: {}})
    ft_slots: tuple[int, ...] = ()
    placements: list[Placement] = field(default_factory=list)

    def max_slot(self, channel: str) -> int:
        cols = self.columns[channel]
        return max(cols) if cols else 0

    def allocated_slots(self) -> int:
        return max(self.max_slot(CH_A), self.max_slot(CH_B))

    def gateway_slot_count(self) -> int:
        return sum(
            1 for ch in CHANNELS for col in self.columns[ch].values() if col.is_gateway
        )

    def frame_count(self) -> int:
        return sum(
            len(col.frames) for ch in CHANNELS for col in self.columns[ch].values()
        )


def occurrence_cycles(base_cycle: int, period_cycles: int) -> range:
    return range(base_cycle, HYPERPERIOD_CYCLES + 1, period_cycles)


def sort_signals(signals) -> list[Signal]:
    """Stable order: fault-tolerant first, then decreasing payload,
    increasing release-to-deadline gap, increasing period."""
    return sorted(signals, key=lambda s: (
        0 if s.fault_tolerant else 1,
        -s.payload_bytes,
        s.deadline_ms - s.release_ms,
        s.period_cycles,
    ))


def signal_volume(sig: Signal) -> int:
    """Payload bytes weighted by occurrence count over the hyperperiod."""
    return sig.payload_bytes * sig.occurrence_count()


def determine_channel(sig: Signal, inst: Instance, asg: ChannelAssignment,
                      loads: dict[str, float]) -> str:
    """Channel selection for a non-fault-tolerant signal.

    One-port endpoints force their assigned channel; if they span both,
    the signal must appear on both.  When every endpoint is wired to both
    channels the lighter-loaded channel is chosen.
    """
    required = set()
    for u in (sig.transmitter, *sig.receivers):
        if inst.kind_of(u) == EcuKind.ONE_PORT:
            required.add(asg.channel_of[u])
    if len(required) == 2:
        return BOTH
    if len(required) == 1:
        return next(iter(required))
    return CH_A if loads[CH_A] <= loads[CH_B] else CH_B


def _first_free_offset(mask: int, payload: int, slot_payload: int) -> int | None:
    probe = (1 << payload) - 1
    for offset in range(slot_payload - payload + 1):
        if mask & (probe << offset) == 0:
            return offset
    return None


def place_to_schedule(sched: Schedule, sig: Signal, target: str, owner: int, *,
                      is_image: bool = False,
                      fixed_base_cycle: int | None = None) -> list[Placement]:
    """First-fit placement of all occurrences of one signal.

    Scans slot ids ascending, base cycles ascending within the feasible
    window, offsets ascending; takes the first position where the slot is
    unowned or owned by `owner` on every target channel and all
    period-induced occurrences fit at a common offset.  Falls back to a
    fresh slot at max_slot+1.
    """
    h = sched.config.slot_payload_bytes
    channels = CHANNELS if target == BOTH else (target,)
    if fixed_base_cycle is not None:
        base_candidates = [fixed_base_cycle]
    else:
        base_candidates = feasible_base_cycles(sig, sched.config.cycle_duration_ms)
        if not base_candidates:
            raise InfeasibleWindowError(
                f"signal {sig.id}: no feasible base cycle in its window")

    limit = max(sched.max_slot(ch) for ch in channels) + 1
    chosen: tuple[int, int, int] | None = None
    for slot in range(1, limit + 1):
        cols = [sched.columns[ch].get(slot) for ch in channels]
        if any(c is not None and (c.owner != owner or c.is_gateway != is_image)
               for c in cols):
            continue
        for base in base_candidates:
            mask = 0
            for col in cols:
                if col is None:
                    continue
                for cyc in occurrence_cycles(base, sig.period_cycles):
                    mask |= col.masks.get(cyc, 0)
            offset = _first_free_offset(mask, sig.payload_bytes, h)
            if offset is not None:
                chosen = (slot, base, offset)
                break
        if chosen:
            break
    if chosen is None:
        # A fresh slot always has room; use the earliest feasible cycle.
        chosen = (limit, base_candidates[0], 0)

    slot, base, offset = chosen
    occ = Occupancy(signal=sig.id, offset=offset, payload=sig.payload_bytes,
                    is_image=is_image)
    for ch in channels:
        col = sched.columns[ch].get(slot)
        if col is None:
            col = SlotColumn(owner=owner, is_gateway=is_image)
            sched.columns[ch][slot] = col
        for cyc in occurrence_cycles(base, sig.period_cycles):
            col.add(cyc, occ)
    placement = Placement(signal=sig.id, channel=target, base_cycle=base,
                          slot=slot, offset_bytes=offset, is_image=is_image)
    sched.placements.append(placement)
    return [placement]


def schedule_channels(inst: Instance, asg: ChannelAssignment) -> Schedule:
    """Build both channel schedules for an instance under an assignment.

    Fault-tolerant signals are packed first into a common prefix shared by
    both channels.  Each remaining signal is routed by determine_channel;
    a one-port transmitter whose receivers span the channels additionally
    gets a gateway image on the opposite channel, while a common
    transmitter simply transmits on both channels itself.
    """
    sched = Schedule(config=inst.config)
    ordered = sort_signals(inst.signals)
    loads = {CH_A: 0.0, CH_B: 0.0}
    gw = inst.gateway.id

    i = 0
    while i < len(ordered) and ordered[i].fault_tolerant:
        sig = ordered[i]
        place_to_schedule(sched, sig, BOTH, owner=sig.transmitter)
        loads[CH_A] += signal_volume(sig)
        loads[CH_B] += signal_volume(sig)
        i += 1
    sched.ft_slots = tuple(sorted(sched.columns[CH_A]))

    for sig in ordered[i:]:
        ch = determine_channel(sig, inst, asg, loads)
        if ch != BOTH:
            place_to_schedule(sched, sig, ch, owner=sig.transmitter)
            loads[ch] += signal_volume(sig)
        elif inst.kind_of(sig.transmitter) == EcuKind.COMMON:
            place_to_schedule(sched, sig, CH_A, owner=sig.transmitter)
            place_to_schedule(sched, sig, CH_B, owner=sig.transmitter)
            loads[CH_A] += signal_volume(sig)
            loads[CH_B] += signal_volume(sig)
        else:
            home = asg.channel_of[sig.transmitter]
            other = CH_B if home == CH_A else CH_A
            original = place_to_schedule(sched, sig, home, owner=sig.transmitter)[0]
            place_to_schedule(sched, sig, other, owner=gw, is_image=True,
                              fixed_base_cycle=original.base_cycle)
            loads[home] += signal_volume(sig)
            loads[other] += signal_volume(sig)

    return reorder_slots(sched)


def _renumber(sched: Schedule) -> dict[tuple[str, int], int]:
    """New slot ids: shared fault-tolerant prefix first, per-channel
    non-gateway slots next in original order, gateway slots as soon as
    every original they retransmit has a smaller id."""
    ft = set(sched.ft_slots)
    original_slot = {p.signal: (p.channel, p.slot)
                     for p in sched.placements if not p.is_image and p.channel != BOTH}

    new_ids: dict[tuple[str, int], int] = {}
    for i, slot in enumerate(sorted(ft), start=1):
        new_ids[(CH_A, slot)] = i
        new_ids[(CH_B, slot)] = i

    chains: dict[str, list[int]] = {}
    gateways: dict[str, list[int]] = {}
    for ch in CHANNELS:
        pre = sorted(sched.columns[ch])
        chains[ch] = [t for t in pre if t not in ft and not sched.columns[ch][t].is_gateway]
        gateways[ch] = [t for t in pre if t not in ft and sched.columns[ch][t].is_gateway]
        next_id = len(ft) + 1
        for t in chains[ch]:
            new_ids[(ch, t)] = next_id
            next_id += 1

    for ch in CHANNELS:
        pending = []
        for t in gateways[ch]:
            latest = 0
            for cycle_entries in sched.columns[ch][t].frames.values():
                for occ in cycle_entries:
                    orig_ch, orig_slot = original_slot[occ.signal]
                    latest = max(latest, new_ids[(orig_ch, orig_slot)])
            pending.append((t, latest))
        tick = len(ft) + len(chains[ch]) + 1
        while pending:
            eligible = [item for item in pending if item[1] < tick]
            if eligible:
                t, _ = min(eligible)
                new_ids[(ch, t)] = tick
                pending.remove(min(eligible))
            tick += 1
    return new_ids


def reorder_slots(sched: Schedule) -> Schedule:
    """Renumber slots on the shared id timeline so that every gateway slot
    comes strictly after the slot of the latest original it retransmits.
    Frame contents are unchanged."""
    new_ids = _renumber(sched)
    out = Schedule(config=sched.config)
    for ch in CHANNELS:
        out.columns[ch] = {
            new_ids[(ch, t)]: col for t, col in sched.columns[ch].items()
        }
    out.ft_slots = tuple(range(1, len(sched.ft_slots) + 1))
    for p in sched.placements:
        ch = CH_A if p.channel == BOTH else p.channel
        out.placements.append(Placement(
            signal=p.signal, channel=p.channel, base_cycle=p.base_cycle,
            slot=new_ids[(ch, p.slot)], offset_bytes=p.offset_bytes,
            is_image=p.is_image,
        ))
    return out


def schedule_single_channel(inst: Instance) -> Schedule:
    """Schedule every signal onto one channel (mirrored-channels semantics:
    no assignment, no images); the baseline for bandwidth comparisons."""
    sched = Schedule(config=inst.config)
    for sig in sort_signals(inst.signals):
        place_to_schedule(sched, sig, CH_A, owner=sig.transmitter)
    return sched


def lbsc(signals, slot_payload_bytes: int) -> int:
    """Area lower bound on single-channel slot count.

    Every slot is exclusive to one transmitter, so each transmitting ECU
    independently needs at least ceil(byte-cycles / slot capacity) slots.
    """
    per_ecu: dict[int, int] = {}
    for s in signals:
        per_ecu[s.transmitter] = per_ecu.get(s.transmitter, 0) + signal_volume(s)
    capacity = HYPERPERIOD_CYCLES * slot_payload_bytes
    return sum(-(-load // capacity) for load in per_ecu.values())


def format_schedule(sched: Schedule) -> str:
    """Fixed-width table per channel: rows are cycles, columns slots."""
    lines = []
    for ch in CHANNELS:
        cols = sched.columns[ch]
        slots = sorted(cols)
        lines.append(f"channel {ch} (max slot {sched.max_slot(ch)})")
        if not slots:
            lines.append("  (empty)")
            continue
        owners = "  ".join(
            f"s{t}:ECU{cols[t].owner}" + ("*" if cols[t].is_gateway else "")
            for t in slots
        )
        lines.append(f"  owners: {owners}")
        for cyc in range(1, HYPERPERIOD_CYCLES + 1):
            cells = []
            for t in slots:
                entries = cols[t].frames.get(cyc, [])
                cell = ",".join(
                    f"{occ.signal}{'~' if occ.is_image else ''}@{occ.offset}"
                    for occ in sorted(entries, key=lambda o: o.offset)
                )
                cells.append(cell or "-")
            lines.append(f"  c{cyc:02d} | " + " | ".join(cells))
    return "\n".join(lines)
