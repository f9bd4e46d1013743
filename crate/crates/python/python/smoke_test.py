"""Smoke test for the macswe extension module."""

import math
import os
import sys
import tempfile

import macswe


def main():
    assert "vortex" in macswe.CASES and "heun_muscl" in macswe.SCHEMES

    sim = macswe.Simulation("vortex", mesh=16, scheme="heun_muscl")
    m0 = sim.mass()
    sim.run_until()
    assert abs(sim.time - 0.8) < 1e-12, sim.time
    assert abs(sim.mass() - m0) <= 1e-12 * m0
    err_h, err_u = sim.error()
    assert 0.0 < err_h < 0.2 and 0.0 < err_u < 1.0, (err_h, err_u)
    h = sim.height()
    assert len(h) == 16 and len(h[0]) == 16

    lake = macswe.Simulation("lake-at-rest", mesh=16)
    lake.step(50)
    u1, u2 = lake.velocity()
    assert max(abs(v) for row in u1 + u2 for v in row) < 1e-12

    hs, us = macswe.riemann_exact(0.5, 0.1)
    assert abs(hs - 0.507871) < 1e-5 and abs(us - 1.800007) < 1e-5

    cfg = macswe.parse_config("case = vortex\nmesh = 64")
    assert cfg["scheme"] == "heun_muscl" and cfg["mesh"] == "64"
    try:
        macswe.parse_config("")
    except ValueError as e:
        assert "case" in str(e)
    else:
        raise AssertionError("empty config accepted")

    rows = macswe.convergence("vortex", "euler_upwind", [8, 16])
    assert rows[0][2] is None and not math.isnan(rows[1][2])

    flags = macswe.verify(seed=3, states=10)
    assert all(flags.values()), flags

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "snap.vtk")
        sim.write_vtk(path)
        with open(path) as f:
            assert f.readline().startswith("# vtk DataFile")

    print("smoke test passed:", repr(sim))
    return 0


if __name__ == "__main__":
    sys.exit(main())
