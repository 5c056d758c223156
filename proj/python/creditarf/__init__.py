"""Python access to the creditarf C++ core.

The heavy lifting (training, embedding, evaluation) runs in C++; these
bindings expose the command line, the binary file formats and the metric
helpers for scripting and notebooks.
"""

from ._creditarf import (
    CLASS_NAMES,
    InputError,
    ModeError,
    NumericError,
    __version__,
    compare_reports,
    consolidate_rating,
    evaluate_predictions,
    format_delta,
    hash_embed,
    read_arfe,
    read_checkpoint,
    run_cli,
    write_arfe,
)

__all__ = [
    "CLASS_NAMES",
    "InputError",
    "ModeError",
    "NumericError",
    "__version__",
    "compare_reports",
    "consolidate_rating",
    "evaluate_predictions",
    "format_delta",
    "hash_embed",
    "read_arfe",
    "read_checkpoint",
    "run_cli",
    "write_arfe",
]


def main(argv=None):
    """Console entry point mirroring the native `creditarf` binary."""
    import sys

    code, out, err = run_cli(list(sys.argv[1:] if argv is None else argv))
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code
