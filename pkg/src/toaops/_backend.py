"""Select the compiled kernel module, falling back to numpy.

Set ``TOAOPS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from . import _fallback

NAME = "python"
impl = _fallback

if os.environ.get("TOAOPS_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core as impl  # noqa: F811
        NAME = "compiled"
    except ImportError:
        impl = _fallback

hyp0f1_scalar = impl.hyp0f1_scalar
hyp0f1_array = impl.hyp0f1_array
weighted_rowsum = impl.weighted_rowsum
