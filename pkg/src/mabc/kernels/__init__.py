"""Hot-loop kernels with two interchangeable backends.

``_native`` is a Cython extension; ``_pure`` is numpy/Python producing
bit-identical results. The native backend is used when importable; set
``MABC_KERNELS=pure`` (or ``native``) to force a choice. Both backends stay
installed so the parity tests and the benchmark can compare them.
"""

import os

from . import _pure

_forced = os.environ.get("MABC_KERNELS", "").strip().lower()

if _forced == "pure":
    _impl = _pure
elif _forced == "native":
    from . import _native as _impl
else:
    try:
        from . import _native as _impl
    except ImportError:
        _impl = _pure

BACKEND = "native" if _impl is not _pure else "pure"

block_motion_search = _impl.block_motion_search
warp_plane = _impl.warp_plane
RangeEncoder = _impl.RangeEncoder
RangeDecoder = _impl.RangeDecoder
encode_coeff_block = _impl.encode_coeff_block
decode_coeff_block = _impl.decode_coeff_block

PROB_BITS = _pure.PROB_BITS
PROB_INIT = _pure.PROB_INIT


def available_backends():
    names = ["pure"]
    try:
        from . import _native  # noqa: F401

        names.append("native")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the raw backend module, mainly for parity tests and benchmarks."""
    if name == "pure":
        return _pure
    if name == "native":
        from . import _native

        return _native
    raise ValueError(f"unknown kernel backend {name!r}")
