"""Quick checks of the geophase extension module.

Build and install first, e.g. `maturin develop --release -m crates/python/Cargo.toml`.
"""

import cmath
import json
import math
import tempfile

import geophase


def close(a, b, tol):
    assert abs(a - b) < tol, (a, b)


def main():
    atom = geophase.TwoLevel(1.0, 1.0)
    close(atom.r, math.sqrt(2.0), 1e-15)
    close(atom.upper_eigenvalue, (1.0 + math.sqrt(2.0)) / 2.0, 1e-15)

    h = atom.hamiltonian(0.3)
    close(h[0][1], 0.5 * cmath.exp(0.3j), 1e-15)
    close(h[1][0], h[0][1].conjugate(), 1e-15)

    psi = atom.plus_state(0.7)
    close(sum(abs(z) ** 2 for z in psi), 1.0, 1e-14)

    close(atom.berry_phase(), -math.pi / (2.0 + math.sqrt(2.0)), 1e-6)
    close(geophase.TwoLevel(1.0, 0.0).berry_phase(), -math.pi, 1e-6)
    close(abs(atom.aq_coefficient()), 1.0 / (2.0 * math.sqrt(2.0)), 1e-15)

    w = geophase.disturbance_w(0.4)
    close(w[0][0], cmath.exp(0.2j), 1e-15)
    assert w[0][1] == 0

    times, dtheta = geophase.phase_noise_path(steps=100, t_end=10.0, seed=3)
    again = geophase.phase_noise_path(steps=100, t_end=10.0, seed=3)
    assert len(times) == len(dtheta) == 101 and dtheta == again[1]

    ens = geophase.ensemble(atom, n=200, t_end=40.0, steps=400, record_every=20, seed=1)
    assert ens.max_individual_deviation < 1e-9
    assert ens.abort_count == 0
    close(ens.dressed_modulus[0], 1.0, 1e-12)

    rows = geophase.fidelity_sweep(atom, [20.0, 40.0])
    assert rows[1][1] > rows[0][1] > 0.9

    try:
        geophase.TwoLevel(-1.0, 0.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative omega accepted")

    with tempfile.TemporaryDirectory() as out:
        report = json.loads(geophase.run("holonomy", out, "[schedule]\nsteps = 2000\n"))
        assert report["command"] == "holonomy"
        close(report["results"]["phase"], report["results"]["oracle_phase"], 1e-5)
        try:
            geophase.run("holonomy", out, "[model]\nomgea = 1.0\n")
        except ValueError:
            pass
        else:
            raise AssertionError("unknown config key accepted")

    print("geophase", geophase.__version__, "smoke test passed")


if __name__ == "__main__":
    main()
