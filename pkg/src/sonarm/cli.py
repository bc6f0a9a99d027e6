"""Command line entry points: run, render, validate, probe."""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import replace

from . import engine as eng
from .api import ControlServer, PortInUse
from .config import ConfigInvalid, ScriptUnordered, load_config, load_script


def _apply_overrides(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    osc_cfg = cfg.osc
    if getattr(args, "osc_in", None) is not None:
        osc_cfg = replace(osc_cfg, in_port=args.osc_in)
    if getattr(args, "osc_out", None) is not None:
        osc_cfg = replace(osc_cfg, out_port=args.osc_out)
    cfg = replace(cfg, osc=osc_cfg)
    if getattr(args, "api_port", None) is not None:
        cfg = replace(cfg, api=replace(cfg.api, port=args.api_port))
    return cfg


def _cmd_render(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    cfg = replace(cfg, mode="offline")
    script = load_script(args.script) if args.script else None
    wav_bytes = eng.render_offline(cfg, script, args.duration)
    with open(args.out, "wb") as f:
        f.write(wav_bytes)
    channels = cfg.speakers.layout().channels
    print(f"wrote {args.out}: {args.duration}s, {channels}ch float32 @ {cfg.sample_rate} Hz")
    return 0


def _cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    cfg = replace(cfg, mode="realtime")

    sink = eng.NullSink()
    if args.device:
        try:
            import sounddevice as sd

            stream = sd.OutputStream(
                samplerate=cfg.sample_rate,
                blocksize=cfg.block_size,
                channels=cfg.speakers.layout().channels,
                dtype="float32",
            )
            stream.start()

            class _DeviceSink:
                def write(self, block):
                    stream.write(block.astype("float32").T.copy())

            sink = _DeviceSink()
            print("audio device output enabled")
        except Exception as e:
            print(f"audio device unavailable ({e}); rendering to null sink", file=sys.stderr)

    sender = eng.OscSender(cfg.osc.out_host, cfg.osc.out_port)
    runner = eng.RealtimeRunner(cfg, sink=sink, osc_send=sender)
    receiver = eng.OscReceiver(runner.engine, "0.0.0.0", cfg.osc.in_port)
    server = ControlServer(runner.engine, cfg.api.host, cfg.api.port)
    try:
        server.start()
    except PortInUse as e:
        print(f"error: API port in use: {e}", file=sys.stderr)
        return 1
    receiver.start()
    runner.start()
    print(
        f"running: OSC in :{cfg.osc.in_port}, OSC out {cfg.osc.out_host}:{cfg.osc.out_port}, "
        f"API ws://{cfg.api.host}:{cfg.api.port}"
    )
    try:
        if args.duration is not None:
            time.sleep(args.duration)
        else:
            while True:
                time.sleep(1.0)
    except KeyboardInterrupt:
        pass
    finally:
        runner.stop()
        receiver.stop()
        server.stop()
        sender.close()
    return 0


def _cmd_validate(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigInvalid as e:
        print(f"invalid config ({len(e.errors)} problem(s)):")
        for path, msg in e.errors:
            print(f"  {path}: {msg}")
        return 1
    n_params = len(cfg.param_addresses())
    print(
        f"ok: {cfg.sample_rate} Hz / {cfg.block_size} frames, "
        f"{len(cfg.graph)} nodes, {len(cfg.mapping.routes)} routes, "
        f"{n_params} parameter addresses"
    )
    return 0


def _cmd_probe(args) -> int:
    try:
        import sounddevice as sd
    except ImportError:
        print("sounddevice is not installed; realtime device output unavailable.")
        print("Offline rendering (`sonarm render`) and null-sink `run` work without it.")
        return 0
    for i, dev in enumerate(sd.query_devices()):
        if dev.get("max_output_channels", 0) > 0:
            print(f"{i:3d}  {dev['name']}  ({dev['max_output_channels']} out @ {dev['default_samplerate']:.0f} Hz)")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sonarm",
        description="Simulated arm sonification engine: render offline or run live.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_render = sub.add_parser("render", help="deterministic offline render to WAV")
    p_render.add_argument("--config", required=True)
    p_render.add_argument("--script", default=None)
    p_render.add_argument("--duration", type=float, required=True, help="seconds")
    p_render.add_argument("--out", required=True, help="output WAV path")
    p_render.add_argument("--seed", type=int, default=None)
    p_render.set_defaults(func=_cmd_render)

    p_run = sub.add_parser("run", help="run live: OSC in/out plus the control API")
    p_run.add_argument("--config", required=True)
    p_run.add_argument("--duration", type=float, default=None, help="exit after N seconds")
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--osc-in", type=int, default=None)
    p_run.add_argument("--osc-out", type=int, default=None)
    p_run.add_argument("--api-port", type=int, default=None)
    p_run.add_argument("--device", action="store_true", help="write to the default audio device")
    p_run.set_defaults(func=_cmd_run)

    p_val = sub.add_parser("validate", help="check a session config")
    p_val.add_argument("--config", required=True)
    p_val.set_defaults(func=_cmd_validate)

    p_probe = sub.add_parser("probe", help="list audio output devices")
    p_probe.set_defaults(func=_cmd_probe)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as e:
        print(f"error: invalid config: {e}", file=sys.stderr)
        return 1
    except ScriptUnordered as e:
        print(f"error: script events out of order: {e}", file=sys.stderr)
        return 1
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
