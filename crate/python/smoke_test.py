"""Smoke test for the ptss_py extension.

Build first:  cargo build --release -p ptss-py --features extension-module
Then run:     python3 python/smoke_test.py
"""

import importlib.util
import pathlib
import shutil
import sys
import tempfile
from fractions import Fraction

ROOT = pathlib.Path(__file__).resolve().parents[1]


def load_extension():
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libptss_py.so"
        if lib.exists():
            tmp = pathlib.Path(tempfile.mkdtemp()) / "ptss_py.so"
            shutil.copy(lib, tmp)
            spec = importlib.util.spec_from_file_location("ptss_py", tmp)
            mod = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(mod)
            return mod
    sys.exit("libptss_py.so not found; build the ptss-py crate first")


def corpus(name):
    return (ROOT / "corpus" / name).read_text()


def main():
    p = load_extension()

    assert p.model(corpus("f.ptss")) == [("f", "b", [("f", "1")])]

    for src, label, dist in p.model(corpus("pchoice.ptss")):
        assert sum(Fraction(q) for _, q in dist) == 1, (src, label)

    assert p.format_check(corpus("fig1.ptss")) == []
    assert any("cond4" in v for v in p.format_check(corpus("cond4.ptss")))

    reduced = p.reduce(corpus("f.ptss"))
    assert p.format_check(reduced, "pntree") == []
    assert p.model(reduced) == p.model(corpus("f.ptss"))

    assert p.bisimilar(corpus("cond4.ptss"), "s", "t")
    checked, bad = p.congruence(corpus("sync.ptss"), samples=50)
    assert checked > 0 and bad == 0

    try:
        p.spec("signature {")
    except ValueError:
        pass
    else:
        raise AssertionError("parse error not raised")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
