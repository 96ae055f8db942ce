"""Smoke test for the `ugleason` extension module.

Builds the cdylib with cargo unless UGLEASON_LIB points at a built library,
copies it into a temp dir as `ugleason.so`, imports it and exercises the
main operations.
"""

import json
import os
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def load():
    lib = os.environ.get("UGLEASON_LIB")
    if lib is None:
        subprocess.run(
            ["cargo", "build", "--release", "-p", "ugleason-python", "--features", "extension-module"],
            cwd=ROOT,
            check=True,
        )
        lib = ROOT / "target" / "release" / "libugleason_py.so"
    tmp = Path(tempfile.mkdtemp())
    shutil.copy(lib, tmp / "ugleason.so")
    sys.path.insert(0, str(tmp))
    import ugleason

    return ugleason


def close(a, b, tol):
    assert abs(a - b) <= tol, f"{a} vs {b}"


def main():
    ug = load()

    t = ug.Operator.random_psd(4, 42)
    assert t.dim == 4
    close(ug.Operator.from_json(t.to_json()).distance(t), 0.0, 0.0)

    f = ug.FrameFunction.operator_induced([2, 2], t)
    close(f.declared_weight, t.trace().real, 1e-12)
    e0, e1 = [1, 0], [0, 1]
    close(sum(f([a, b]) for a in (e0, e1) for b in (e0, e1)), t.trace().real, 1e-12)

    r = ug.reconstruct(f)
    assert r.unique and r.rank == 16, r
    assert r.T.distance(t) < 1e-8, r
    assert ug.holdout_validate(f, r, trials=50) < 1e-8

    audit = json.loads(ug.audit_weight(f, trials=5, seed=1))
    assert audit["verdict"]["verdict"] == "constant_within", audit["verdict"]

    rt = json.loads(ug.roundtrip([3, 3], seed=42))
    assert rt["error"] < 1e-8, rt

    ce1 = ug.counterexample([2, 3], seed=7, trials=5)
    ce2 = ug.counterexample([2, 3], seed=7, trials=5)
    assert ce1 == ce2
    assert json.loads(ce1)["holdout_deviation"] >= 0.01

    q = ug.FrameFunction.pathological()
    close(q([[1, 0]]) + q([[0, 1]]), 1.0, 1e-12)

    scale, ps = ug.dyadic_decompose(t, depth=40)
    assert scale > 0 and len(ps) == 40

    v = [0.6, 0.0, 0.8, 0.0]  # (0.6, 0.8) ⊗ e0
    assert ug.simple_tensor_factor(v, [2, 2]) is not None
    assert ug.simple_tensor_factor([2**-0.5, 0, 0, 2**-0.5], [2, 2]) is None

    assert len(ug.branching_basis([2, 3], seed=1)) == 6

    try:
        ug.roundtrip([0, 3])
    except ug.UgleasonError:
        pass
    else:
        raise AssertionError("expected UgleasonError")

    print("python smoke test: ok")


if __name__ == "__main__":
    main()
