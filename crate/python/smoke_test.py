"""Smoke test for the pydstau extension.

Builds the extension with cargo if needed, loads it, and checks a few results.
"""

import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import pydstau
        return pydstau
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "-p", "dstau-python", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "debug" / "libpydstau.so"
    tmp = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(lib, tmp / "pydstau.so")
    sys.path.insert(0, str(tmp))
    import pydstau
    return pydstau


def main():
    m = load()
    assert "A1^(1)" in m.supported_types()

    flows = m.derive("A1^(1)", "1:0,1:1")
    assert flows["1:0"] == ["u_t = -u_x"], flows
    assert len(flows["1:1"]) == 1

    assert m.verify("A1^(1)", "1:0,1:1", gauge_check=False)

    omega = m.run("omega", {"type": "A1^(1)", "flows": "1:0,1:1"})
    assert isinstance(omega, dict)

    solved = m.run("solve", {"flows": "1:0", "t_degree": 0, "initial": ["3/(1-x)^2"]})
    assert isinstance(solved, dict)

    disc = m.run("discrete", {"samples": 10})
    assert disc is not None

    try:
        m.derive("E8^(1)", "1:0")
    except RuntimeError:
        pass
    else:
        raise AssertionError("unsupported type accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
