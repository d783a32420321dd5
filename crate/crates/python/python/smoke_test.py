"""Smoke test for the oruc_py extension.

Build and run from the workspace root:

    cargo build --release -p oruc-python --features extension-module
    cp target/release/liboruc_py.so crates/python/python/oruc_py.so
    python3 crates/python/python/smoke_test.py
"""

import math

import oruc_py

FIG3 = """
kind = "oruc"
n = 1
u = { generators = { X = 0.5 } }
probs = { I = 0.6, X = 0.05, Y = 0.3, Z = 0.05 }
v = { generators = { Z = -0.5 } }
"""


def main():
    x, z = oruc_py.PauliString("XZ"), oruc_py.PauliString("ZX")
    assert x.weight == 2 and x.num_qubits == 2
    assert x.commutes_with(z)
    assert not oruc_py.PauliString("XI").commutes_with(oruc_py.PauliString("ZI"))
    assert str(x) == "XZ"

    assert oruc_py.pauli_labels(1) == ["I", "X", "Y", "Z"]
    f = oruc_py.fidelities_from_probs(1, [0.6, 0.05, 0.3, 0.05])
    assert all(abs(a - b) < 1e-12 for a, b in zip(f, [1.0, 0.3, 0.8, 0.3]))
    p = oruc_py.probs_from_fidelities(1, f)
    assert abs(p[2] - 0.3) < 1e-12

    target = oruc_py.Channel.from_toml(FIG3)
    assert target.kind == "oruc" and target.num_qubits == 1
    t = target.ptm()
    assert len(t) == 4 and abs(t[0][0] - 1.0) < 1e-12

    pauli = oruc_py.Channel.pauli(1, [("I", 0.6), ("X", 0.1), ("Y", 0.18), ("Z", 0.12)])
    losses, probs = oruc_py.learn_pauli(pauli, iterations=200)
    assert losses[-1] < 1e-6 < losses[0], losses[-1]
    assert abs(sum(probs) - 1.0) < 1e-12

    distances, estimate = oruc_py.learn_oruc(target, rounds=100, seed=1)
    assert len(distances) == 101
    assert distances[-1] < distances[0]
    assert abs(estimate.distance(target) - distances[-1]) < 1e-12
    assert "kind" in estimate.to_toml()

    assert oruc_py.layout_delta("single_site", 8) == (24, 2.0, 22.0, 20.0)
    assert math.isclose(oruc_py.equivalent_pbar(1e-9, 2.0), 1e-9, rel_tol=1e-6)

    try:
        oruc_py.PauliString("XQ")
    except ValueError:
        pass
    else:
        raise AssertionError("bad label accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
