"""Simplified FIBEX-style XML export of schedules.

A documented simplified subset, not a conformant FIBEX database: channels,
ECUs with their channel connections, static slots with owners, one frame
element per occupied (channel, slot, base-cycle) triple, and signal
instances with bit offsets and cycle repetitions.  Element order is
deterministic so identical inputs yield byte-identical files.
"""
from __future__ import annotations

import xml.etree.ElementTree as ET
from pathlib import Path

from .assignment import ChannelAssignment
from .model import EcuKind, Instance, NetworkConfig
from .scheduler import CHANNELS, Occupancy, Schedule, SlotColumn


def _ecu_channels(inst: Instance, asg: ChannelAssignment, ecu_id: int) -> str:
    if inst.kind_of(ecu_id) == EcuKind.ONE_PORT:
        return asg.channel_of.get(ecu_id, "")
    return "AB"


def export_fibex(inst: Instance, asg: ChannelAssignment, sched: Schedule,
                 path: str | Path) -> None:
    root = ET.Element("flexray-schedule", {"format": "simplified-1"})
    ET.SubElement(root, "cluster", {
        "cycle-duration-ms": repr(inst.config.cycle_duration_ms),
        "slot-payload-bytes": str(inst.config.slot_payload_bytes),
        "hyperperiod-cycles": str(inst.config.hyperperiod_cycles),
    })
    ecus = ET.SubElement(root, "ecus")
    for e in inst.ecus:
        ET.SubElement(ecus, "ecu", {
            "id": str(e.id),
            "class": e.kind.value,
            "channels": _ecu_channels(inst, asg, e.id),
        })

    channels = ET.SubElement(root, "channels")
    periods = {s.id: s.period_cycles for s in inst.signals}
    for ch in CHANNELS:
        ch_el = ET.SubElement(channels, "channel", {
            "name": ch, "max-slot": str(sched.max_slot(ch)),
        })
        for slot in sorted(sched.columns[ch]):
            col = sched.columns[ch][slot]
            slot_el = ET.SubElement(ch_el, "slot", {
                "id": str(slot),
                "owner": str(col.owner),
                "gateway": "true" if col.is_gateway else "false",
            })
            # One frame element per base cycle: an occurrence belongs to the
            # base-cycle frame of its signal in this slot.
            frames: dict[int, list[Occupancy]] = {}
            base_cycle: dict[tuple[int, bool], int] = {}
            for cycle in sorted(col.frames):
                for occ in col.frames[cycle]:
                    key = (occ.signal, occ.is_image)
                    if key not in base_cycle:
                        base_cycle[key] = cycle
                        frames.setdefault(cycle, []).append(occ)
            for base in sorted(frames):
                frame_el = ET.SubElement(slot_el, "frame", {"base-cycle": str(base)})
                for occ in sorted(frames[base], key=lambda o: (o.offset, o.signal)):
                    ET.SubElement(frame_el, "signal-instance", {
                        "signal": str(occ.signal),
                        "bit-offset": str(occ.offset * 8),
                        "payload-bytes": str(occ.payload),
                        "repetition": str(periods[occ.signal]),
                        "image": "true" if occ.is_image else "false",
                    })

    ET.indent(root)
    text = ET.tostring(root, encoding="unicode", xml_declaration=True)
    Path(path).write_text(text + "\n")


def read_fibex(path: str | Path) -> tuple[Schedule, dict[int, str]]:
    """Parse an exported file back into a Schedule plus the one-port
    ECU-to-channel map embedded in the ecu elements."""
    try:
        root = ET.parse(path).getroot()
        return _read_parsed(root)
    except (ET.ParseError, AttributeError, TypeError, KeyError) as exc:
        raise ValueError(f"{path} is not a schedule file: {exc}") from exc


def _read_parsed(root: ET.Element) -> tuple[Schedule, dict[int, str]]:
    cluster = root.find("cluster")
    config = NetworkConfig(
        cycle_duration_ms=float(cluster.get("cycle-duration-ms")),
        slot_payload_bytes=int(cluster.get("slot-payload-bytes")),
        hyperperiod_cycles=int(cluster.get("hyperperiod-cycles")),
    )
    channel_of: dict[int, str] = {}
    for ecu_el in root.find("ecus"):
        if ecu_el.get("class") == EcuKind.ONE_PORT.value and ecu_el.get("channels"):
            channel_of[int(ecu_el.get("id"))] = ecu_el.get("channels")

    sched = Schedule(config=config)
    for ch_el in root.find("channels"):
        ch = ch_el.get("name")
        for slot_el in ch_el:
            slot = int(slot_el.get("id"))
            col = SlotColumn(owner=int(slot_el.get("owner")),
                             is_gateway=slot_el.get("gateway") == "true")
            sched.columns[ch][slot] = col
            for frame_el in slot_el:
                base = int(frame_el.get("base-cycle"))
                for inst_el in frame_el:
                    occ = Occupancy(
                        signal=int(inst_el.get("signal")),
                        offset=int(inst_el.get("bit-offset")) // 8,
                        payload=int(inst_el.get("payload-bytes")),
                        is_image=inst_el.get("image") == "true",
                    )
                    rep = int(inst_el.get("repetition"))
                    for cycle in range(base, config.hyperperiod_cycles + 1, rep):
                        col.add(cycle, occ)
    return sched, channel_of
