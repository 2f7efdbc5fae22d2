import json
import subprocess
import sys

import numpy as np
import pytest

from aqec import io
from aqec.algebras import basis_of, block_algebra, conjugate, subspace_distance
from aqec.channels import bitflip_code_channel, choi, random_channel, standard_channel
from aqec.cli import main, sci
from aqec.matcore import haar_unitary


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_sci_format():
    assert sci(0.0) == "0.0e0"
    assert sci(0.866) == "8.7e-1"
    assert sci(12345.0) == "1.2e4"


def test_channel_round_trip(rng):
    N = random_channel(2, 3, 2, rng)
    M = io.channel_from_doc(json.loads(io.dumps(io.channel_to_doc(N))))
    for a, b in zip(N.kraus, M.kraus):
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_algebra_round_trip(rng):
    alg = conjugate(block_algebra([(2, 1), (1, 2)]), haar_unitary(4, rng))
    back = io.algebra_from_doc(json.loads(io.dumps(io.algebra_to_doc(alg))))
    assert back.shape == alg.shape
    for a, b in zip(alg.blocks, back.blocks):
        np.testing.assert_allclose(a.iso, b.iso, atol=1e-12)


def test_generator_form():
    doc = {"generators": [io.matrix_to_doc(np.diag([1.0, -1.0]))]}
    alg = io.algebra_from_doc(doc)
    assert sorted(alg.shape) == [(1, 1), (1, 1)]


def test_named_channel_docs():
    N = io.channel_from_doc({"name": "dephasing", "params": [0.25], "dim": 2})
    np.testing.assert_allclose(choi(N), choi(standard_channel("dephasing", [0.25])))
    four = io.channel_from_doc(io.read_document("amplitude_damping4"))
    assert four.dim_in == 16


def test_document_errors():
    with pytest.raises(io.DocumentError):
        io.channel_from_doc({"dim_in": 2, "dim_out": 2, "kraus": [[[1, 0]]]})
    with pytest.raises(io.DocumentError):
        io.channel_from_doc({"dim_in": 2})
    with pytest.raises(io.DocumentError):
        io.read_document("no-such-entry")


def test_catalog_contents():
    names = io.catalog_names()
    for required in ("identity", "dephasing", "depolarizing", "amplitude_damping", "bitflip3", "ad4-code", "full-qubit-algebra"):
        assert required in names
    N = io.channel_from_doc(io.read_document("bitflip3"))
    np.testing.assert_allclose(choi(N), choi(bitflip_code_channel()), atol=1e-12)


def test_check_exact(capsys):
    code, out, _ = run(["check-exact", "--channel", "bitflip3.json", "--algebra", "full-qubit-algebra.json"], capsys)
    assert code == 0 and out.strip() == "EXACT (defect 0.0e0)"
    code, out, _ = run(["check-exact", "--channel", "dephasing.json", "--algebra", "full-algebra.json"], capsys)
    assert code == 1 and out.startswith("NOT EXACT")


def test_malformed_json(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"dim_in": 2,\n  "kraus": [}\n')
    code, _, err = run(["complement", "--channel", str(bad)], capsys)
    assert code == 2
    assert f"{bad}:2:" in err


def test_dimension_mismatch_is_named(capsys):
    code, _, err = run(["check-exact", "--channel", "bitflip3", "--algebra", "ad4-code"], capsys)
    assert code == 2
    code, _, err = run(["delta", "--channel", "dephasing", "--code", "ad4-code"], capsys)
    assert code == 2 and "dimension" in err


def test_bad_flags(capsys):
    assert main(["diamond", "--tol", "-1"]) == 2
    assert main(["diamond", "--samples", "0"]) == 2
    assert main(["nonsense"]) == 2


def test_diamond_command(capsys):
    code, out, _ = run(["diamond", "--channel", "identity", "--channel", "depolarizing", "--output", "json", "--samples", "50"], capsys)
    assert code == 0
    assert json.loads(out)["diamond_distance"] == pytest.approx(1.5, abs=1e-5)


def test_verify_bounds_text(capsys):
    code, out, _ = run(["verify-bounds", "--channel", "bitflip3", "--algebra", "full-qubit-algebra"], capsys)
    assert code == 0
    assert out.splitlines()[0] == "δ=0.000 E=0.000 BOUNDS OK"


def test_verify_bounds_json_is_deterministic(capsys):
    argv = ["verify-bounds", "--channel", "dephasing", "--algebra", "full-algebra", "--output", "json"]
    _, a, _ = run(argv, capsys)
    _, b, _ = run(argv, capsys)
    assert a == b
    doc = json.loads(a)
    assert set(doc) == {"delta", "optimal_error", "exact", "kl_defect", "bounds_ok", "recovery", "tolerances", "seed"}
    io.channel_from_doc(doc["recovery"])


def test_largest_algebra_doc(capsys):
    code, out, _ = run(["largest-algebra", "--channel", "dephasing"], capsys)
    assert code == 0
    alg = io.algebra_from_doc(json.loads(out))
    assert alg.shape == [(1, 1), (1, 1)]
    # the emitted document reloads to the same algebra
    again = io.algebra_from_doc(json.loads(io.dumps(io.algebra_to_doc(alg))))
    assert subspace_distance(basis_of(alg), basis_of(again)) < 1e-12


def test_complement_doc(capsys):
    code, out, _ = run(["complement", "--channel", "amplitude_damping"], capsys)
    assert code == 0
    Nc = io.channel_from_doc(json.loads(out))
    assert Nc.dim_in == 2 and Nc.dim_out == 2


def test_delta_and_optimal_with_code(capsys):
    code, out, _ = run(["delta", "--channel", "amplitude_damping4", "--code", "ad4-code", "--output", "json"], capsys)
    assert code == 0
    delta = json.loads(out)["delta"]
    code, out, _ = run(["optimal", "--channel", "amplitude_damping4", "--code", "ad4-code", "--output", "json"], capsys)
    E = json.loads(out)["optimal_error"]
    assert delta**2 / 4 <= E + 1e-4 and E <= 2 * np.sqrt(delta) + 1e-4


def test_console_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "aqec.cli", "check-exact", "--channel", "bitflip3", "--algebra", "full-qubit-algebra"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0 and "EXACT" in proc.stdout


def test_solver_failure_exit_code(monkeypatch, capsys):
    from aqec import cli
    from aqec.sdp import SolverError

    def broken(*args, **kwargs):
        raise SolverError("step length collapsed", [{"iter": 1, "gap": 1.0}])

    monkeypatch.setattr(cli, "optimal_error", broken)
    code, _, err = run(["optimal", "--channel", "dephasing", "--algebra", "full-algebra"], capsys)
    assert code == 3
    assert "solver trace:" in err
