"""Regenerate openapi.json from the live FastAPI app."""

from __future__ import annotations

import json
from pathlib import Path

from genlattice.api import create_app


def main() -> None:
    app = create_app()
    out = Path(__file__).resolve().parent.parent / "openapi.json"
    out.write_text(json.dumps(app.openapi(), indent=2, sort_keys=True) + "\n",
                   "utf-8")
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
