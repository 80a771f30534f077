"""Command-line entry point.

Exit codes: 0 on success, 2 for usage or configuration problems, 3 when an
internal numerical check fails while building a dataset.
"""

from __future__ import annotations

import sys
from typing import Sequence

from .experiments import ValidationError, parse_config, render_csv, run_experiment


def main(argv: Sequence[str] | None = None) -> int:
    try:
        cfg = parse_config(argv)
    except (ValueError, OSError) as exc:
        print(f"corrwork: {exc}", file=sys.stderr)
        return 2

    try:
        dataset = run_experiment(cfg)
    except ValidationError as exc:
        print(f"corrwork: validation failed: {exc}", file=sys.stderr)
        return 3

    text = render_csv(dataset)
    if cfg.out == "-":
        sys.stdout.write(text)
    else:
        try:
            with open(cfg.out, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
        except OSError as exc:
            print(f"corrwork: cannot write {cfg.out}: {exc}", file=sys.stderr)
            return 2

    if cfg.plot:
        from .plotting import figure_path, render_figure

        render_figure(dataset, cfg, figure_path(cfg))
    return 0


if __name__ == "__main__":
    sys.exit(main())
