"""Entry point: ``plot <figure-spec-file>``.

The figure-spec file is JSON: input_csv, series (policy names for sweep files,
column names for certificate files), output_path (.svg or .png), optional
x_axis and log_y. Exit codes: 0 rendered, 1 bad spec or schema mismatch,
2 unreadable input.
"""

from __future__ import annotations

import json
import sys

from .render import SchemaError, SpecError, load_figure_spec, render


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if len(argv) != 1 or argv[0] in ("-h", "--help"):
        print(__doc__, file=sys.stderr)
        return 0 if argv and argv[0] in ("-h", "--help") else 1
    try:
        spec = load_figure_spec(argv[0])
        result = render(spec)
    except (SpecError, SchemaError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    except (OSError, json.JSONDecodeError) as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2
    print(result.output_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
