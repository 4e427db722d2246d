"""Backend selection for the PACMaxing inner loop.

The compiled extension is used when importable; set ``QEXPLORE_PURE_PYTHON=1``
to force the pure-Python kernel.  Both expose ``lucb_run``, ``kl_upper``,
``kl_lower`` and the status constants, and agree bit for bit.
"""
import os

from qexplore import _lucb_py

try:
    from qexplore import _lucb_ext
except ImportError:  # extension not built
    _lucb_ext = None

DONE = _lucb_py.DONE
NEED_UNIFORMS = _lucb_py.NEED_UNIFORMS


def available() -> list[str]:
    return ["python"] + (["compiled"] if _lucb_ext is not None else [])


def get(name: str | None = None):
    """Return the kernel module called ``name`` (``"compiled"``/``"python"``) or the default."""
    if name is None:
        return _default
    if name == "python":
        return _lucb_py
    if name == "compiled":
        if _lucb_ext is None:
            raise RuntimeError("compiled kernel is not built; run `pip install -e .`")
        return _lucb_ext
    raise ValueError(f"unknown kernel backend {name!r}")


if _lucb_ext is not None and not os.environ.get("QEXPLORE_PURE_PYTHON"):
    _default = _lucb_ext
else:
    _default = _lucb_py

BACKEND = _default.BACKEND
