"""Command-line pipeline: import corpora, build lattices, render, sample, serve.

Data goes to stdout, logs to stderr. Exit codes: 0 success, 2 usage or
validation problems, 3 external failures (provider down, embedding service
unreachable). A config file of ``key = value`` lines can supply defaults;
explicit flags always win.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .embedding import (
    ContextEmbedder,
    DEFAULT_REMOTE_MODEL,
    HashedTrigramEmbedder,
    ProviderError,
    RemoteEmbedder,
)
from .lattice import (
    DEFAULT_MERGE_THRESHOLD,
    build_lattice,
    from_json as lattice_from_json,
    stats,
    to_dot,
    to_json as lattice_to_json,
)
from .layout import LayoutParams, compute_layout, layout_to_json
from .sampling import (
    ConfigurationError,
    CorpusFormatError,
    GenerationRequest,
    PartialResultError,
    SamplerClient,
    TransportError,
    import_corpus,
)
from .segmentation import segment_generation
from .svg import render_svg


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def _read_config(path: str | None) -> dict[str, str]:
    if not path:
        return {}
    config: dict[str, str] = {}
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        config[key.strip().replace("-", "_")] = value.strip().strip('"')
    return config


def _setting(args, config: dict[str, str], name: str, default, cast=None):
    value = getattr(args, name, None)
    if value is not None:
        return value
    if name in config:
        raw = config[name]
        if cast is bool:
            return raw.lower() in ("1", "true", "yes")
        return cast(raw) if cast else raw
    return default


def _make_embedder(kind: str, endpoint: str | None, model: str,
                   window: int) -> ContextEmbedder:
    if kind == "remote":
        if not endpoint:
            raise ConfigurationError("--embedder remote requires --endpoint")
        return ContextEmbedder(RemoteEmbedder(endpoint, model), window=window)
    return ContextEmbedder(HashedTrigramEmbedder(), window=window)


def _write_output(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, "utf-8")
    else:
        sys.stdout.write(text)


def cmd_build(args) -> int:
    config = _read_config(args.config)
    mode = _setting(args, config, "mode", "space")
    threshold = _setting(args, config, "threshold", DEFAULT_MERGE_THRESHOLD, float)
    embedder_kind = _setting(args, config, "embedder", "fallback")
    endpoint = _setting(args, config, "endpoint", None)
    window = _setting(args, config, "window", 2, int)
    embed_model = _setting(args, config, "embed_model", DEFAULT_REMOTE_MODEL)

    generations = import_corpus(args.input, prompt_id=args.prompt_id)
    seqs = [segment_generation(g, mode) for g in generations]
    prompt_of = {g.id: g.prompt_id for g in generations}
    embedder = _make_embedder(embedder_kind, endpoint, embed_model, window)
    lattice = build_lattice(seqs, mode, threshold, embedder, prompt_of,
                            collapse=not args.no_collapse)
    _log(f"built lattice: {len(lattice.nodes)} nodes over "
         f"{len(generations)} generations")
    doc = json.dumps(lattice_to_json(lattice), indent=2) + "\n"
    _write_output(doc, args.out)
    if args.dot:
        Path(args.dot).write_text(to_dot(lattice), "utf-8")
    return 0


def _load_lattice(path: str):
    try:
        doc = json.loads(Path(path).read_text("utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: not valid JSON: {exc.msg}")
    try:
        return lattice_from_json(doc)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: not a lattice export: {exc}")


def cmd_render(args) -> int:
    config = _read_config(args.config)
    lattice = _load_lattice(args.lattice)
    params = LayoutParams(
        parent_interpolation=_setting(args, config, "parent_interpolation", 0.5, float),
        seed=_setting(args, config, "seed", 42, int),
        max_iterations=_setting(args, config, "max_iterations", 1000, int),
    )
    longtail = _setting(args, config, "longtail", 0.0, float)
    if not 0.0 <= longtail <= 1.0:
        raise ConfigurationError("--longtail must be in [0, 1]")
    result = compute_layout(lattice, params, longtail_t=longtail)
    _log(f"layout: {len(result.nodes)} nodes, converged={result.converged} "
         f"after {result.iterations_used} iterations")
    if args.svg:
        Path(args.svg).write_text(render_svg(lattice, result), "utf-8")
    doc = json.dumps(layout_to_json(result, params), indent=2) + "\n"
    _write_output(doc, args.out)
    return 0


def cmd_stats(args) -> int:
    lattice = _load_lattice(args.lattice)
    doc = json.dumps(stats(lattice).to_dict(), indent=2) + "\n"
    _write_output(doc, args.out)
    return 0


def cmd_sample(args) -> int:
    config = _read_config(args.config)
    endpoint = _setting(args, config, "endpoint", "")
    cache_dir = _setting(args, config, "cache_dir", ".genlattice-cache")
    model = _setting(args, config, "model", "")
    if not model:
        raise ConfigurationError("--model is required")
    req = GenerationRequest(
        prompt_text=args.prompt,
        model_id=model,
        temperature=_setting(args, config, "temperature", 0.7, float),
        n=_setting(args, config, "n", 20, int),
        client_seed=_setting(args, config, "seed", None, int),
        endpoint=endpoint,
    )
    client = SamplerClient(cache_dir)
    generations = client.sample(req, prompt_id=args.prompt_id)
    _log(f"sampled {len(generations)} generations "
         f"({client.provider_calls} provider calls)")
    lines = [
        json.dumps({"text": g.text, "prompt_id": g.prompt_id,
                    "meta": {"id": g.id, "model_id": g.model_id,
                             "temperature": g.temperature}})
        for g in generations
    ]
    _write_output("\n".join(lines) + "\n", args.out)
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .api import SessionStore, create_app

    config = _read_config(args.config)
    endpoint = _setting(args, config, "endpoint", "")
    cache_dir = _setting(args, config, "cache_dir", ".genlattice-cache")
    sampler = SamplerClient(cache_dir) if endpoint else None
    store = SessionStore(sampler=sampler, endpoint=endpoint)
    app = create_app(store)
    host = _setting(args, config, "host", "127.0.0.1")
    port = _setting(args, config, "port", 8000, int)
    _log(f"serving on http://{host}:{port}")
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="genlattice",
        description="Merged token lattices over sampled LM completions",
    )
    parser.add_argument("--config", help="key = value defaults file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="corpus file -> lattice JSON")
    p.add_argument("--input", required=True, help="JSONL or plain-text corpus")
    p.add_argument("--mode", choices=["space", "sentence", "phrase"])
    p.add_argument("--threshold", type=float)
    p.add_argument("--embedder", choices=["fallback", "remote"])
    p.add_argument("--endpoint", help="embedding service URL (remote embedder)")
    p.add_argument("--embed-model", dest="embed_model")
    p.add_argument("--window", type=int, help="context tokens per side")
    p.add_argument("--prompt-id", default="prompt-0")
    p.add_argument("--no-collapse", action="store_true",
                   help="skip chain collapsing (token-level nodes)")
    p.add_argument("--out")
    p.add_argument("--dot", help="also write an adjacency-only DOT file")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("render", help="lattice JSON -> layout JSON / SVG")
    p.add_argument("--lattice", required=True)
    p.add_argument("--lambda", dest="parent_interpolation", type=float)
    p.add_argument("--longtail", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--max-iterations", dest="max_iterations", type=int)
    p.add_argument("--svg", help="write an SVG rendering here")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("stats", help="lattice JSON -> summary numbers")
    p.add_argument("--lattice", required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("sample", help="sample completions into JSONL")
    p.add_argument("--prompt", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--model")
    p.add_argument("--endpoint")
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--seed", type=int)
    p.add_argument("--prompt-id", default="prompt-0")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host")
    p.add_argument("--port", type=int)
    p.add_argument("--cache-dir", dest="cache_dir")
    p.add_argument("--endpoint", help="chat-completions provider URL")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigurationError, CorpusFormatError, ValueError) as exc:
        _log(f"error: {exc}")
        return 2
    except FileNotFoundError as exc:
        _log(f"error: file not found: {exc.filename or exc}")
        return 2
    except (TransportError, PartialResultError, ProviderError) as exc:
        _log(f"error: {exc}")
        return 3


if __name__ == "__main__":
    sys.exit(main())
