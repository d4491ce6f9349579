"""Tree primitives and full successive-cancellation traversals."""

import numpy as np
import pytest

import polarflip.sc_kernel as sc_kernel
from polarflip import CodeSpec, ScDecoder, combine, f_op, g_op, make_code, sc_decode
from polarflip.channel import ChannelConfig, channel_llrs
from polarflip.code_spec import encode

from _reference import ref_f, ref_g, ref_sc_decode


def _spec4(frozen):
    frozen = np.asarray(frozen, dtype=bool)
    k = int((~frozen).sum())
    return CodeSpec(n=2, k=k, c=0, frozen_mask=frozen, crc_poly=(1,))


ALL_OPEN4 = _spec4([False, False, False, False])
FROZEN0_4 = _spec4([True, False, False, False])
LLRS4 = np.array([2.0, -3.0, 1.0, 5.0])


# ---------------------------------------------------------------------------
# Primitives
# ---------------------------------------------------------------------------

def test_f_op_literals_and_zero_sign():
    assert f_op(2.0, -3.0) == -2.0
    assert f_op(-2.0, -3.0) == 2.0
    assert f_op(4.0, 1.5) == 1.5
    # zero is treated as non-negative on both sides
    assert f_op(0.0, -5.0) == 0.0
    assert f_op(0.0, 5.0) == 0.0
    assert f_op(-5.0, 0.0) == 0.0


def test_g_op_literals():
    assert g_op(2.0, 5.0, 0) == 7.0
    assert g_op(2.0, 5.0, 1) == 3.0
    assert g_op(-1.5, 0.25, 1) == 1.75


def test_primitives_match_reference_elementwise():
    rng = np.random.default_rng(21)
    a = rng.normal(size=200)
    b = rng.normal(size=200)
    bits = rng.integers(0, 2, 200)
    fa = f_op(a, b)
    ga = g_op(a, b, bits)
    for i in range(a.size):
        assert fa[i] == ref_f(a[i], b[i])
        assert ga[i] == ref_g(a[i], b[i], int(bits[i]))


def test_combine_literal_and_mismatch():
    out = combine([1, 0], [1, 1])
    assert out.tolist() == [0, 1, 1, 1]
    assert out.dtype == np.uint8
    with pytest.raises(ValueError):
        combine([1, 0], [1])


# ---------------------------------------------------------------------------
# Hand-worked 4-leaf traversals (exact values)
# ---------------------------------------------------------------------------

def test_four_leaf_traversal_all_open():
    res = sc_decode(LLRS4, ALL_OPEN4)
    assert res.u_hat.tolist() == [1, 1, 0, 0]
    assert res.leaf_llrs.tolist() == [-1.0, -4.0, 3.0, 11.0]
    assert res.info_hat.tolist() == [1, 1, 0, 0]
    assert res.corrected_count == 0 and res.first_corrected is None


def test_four_leaf_traversal_with_frozen_leaf():
    res = sc_decode(LLRS4, FROZEN0_4)
    assert res.u_hat.tolist() == [0, 1, 1, 0]
    assert res.leaf_llrs.tolist() == [-1.0, -2.0, -1.0, 9.0]
    assert res.info_hat.tolist() == [1, 1, 0]


def test_four_leaf_forced_flip_and_prefix():
    natural = sc_decode(LLRS4, ALL_OPEN4)
    flipped = sc_decode(LLRS4, ALL_OPEN4, forced={1: 0})
    assert flipped.u_hat.tolist() == [1, 0, 1, 0]
    assert flipped.leaf_llrs.tolist() == [-1.0, -4.0, -1.0, 3.0]
    # decisions and soft values up to the flip are untouched
    assert flipped.u_hat[:1].tolist() == natural.u_hat[:1].tolist()
    assert flipped.leaf_llrs[:2].tolist() == natural.leaf_llrs[:2].tolist()
    # forcing the natural value is a no-op
    same = sc_decode(LLRS4, ALL_OPEN4, forced={1: 1})
    assert np.array_equal(same.u_hat, natural.u_hat)
    assert np.array_equal(same.leaf_llrs, natural.leaf_llrs)


def test_four_leaf_oracle_correction():
    dec = ScDecoder(FROZEN0_4)
    res = dec.decode(LLRS4, correct_with=[0, 0, 0, 0])
    assert res.u_hat.tolist() == [0, 0, 0, 0]
    assert res.leaf_llrs.tolist() == [-1.0, -2.0, 2.0, 5.0]
    assert res.corrected_count == 1
    assert res.first_corrected == 1


# ---------------------------------------------------------------------------
# Equality with the independent recursive reference
# ---------------------------------------------------------------------------

@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_matches_recursive_reference(n):
    rng = np.random.default_rng(100 + n)
    N = 1 << n
    for _ in range(40):
        frozen = np.zeros(N, dtype=bool)
        frozen[rng.permutation(N)[: N // 2]] = True
        spec = CodeSpec(n=n, k=N - N // 2, c=0, frozen_mask=frozen, crc_poly=(1,))
        llrs = rng.normal(scale=3.0, size=N)
        res = sc_decode(llrs, spec)
        ref_u, ref_llrs = ref_sc_decode(llrs, frozen)
        assert res.u_hat.tolist() == ref_u
        assert res.leaf_llrs.tolist() == ref_llrs


def test_prefix_property_on_random_frames():
    # A forced decision at leaf j leaves every earlier decision and the
    # soft values up to and including leaf j unchanged.
    spec = make_code(64, 24, crc_bits=8)
    dec = ScDecoder(spec)
    rng = np.random.default_rng(31)
    for _ in range(25):
        llrs = rng.normal(scale=2.0, size=64)
        base = dec.decode(llrs)
        j = int(rng.choice(spec.unfrozen_indices))
        res = dec.decode(llrs, forced={j: int(base.u_hat[j]) ^ 1})
        assert np.array_equal(res.u_hat[:j], base.u_hat[:j])
        assert np.array_equal(res.leaf_llrs[: j + 1], base.leaf_llrs[: j + 1])
        assert res.u_hat[j] == base.u_hat[j] ^ 1


def test_oracle_path_properties_on_noisy_frames():
    spec = make_code(32, 12, crc_bits=4)
    dec = ScDecoder(spec)
    cfg = ChannelConfig(ebn0_db=1.0, rate=spec.payload_bits / 32, seed=5)
    rng = np.random.default_rng(77)
    saw_error = False
    for frame in range(60):
        payload = rng.integers(0, 2, spec.payload_bits, dtype=np.uint8)
        u = np.zeros(32, dtype=np.uint8)
        u[spec.unfrozen_indices] = payload
        llrs = channel_llrs(encode(payload, spec), cfg, frame)
        natural = dec.decode(llrs)
        oracle = dec.decode(llrs, correct_with=u)
        # the corrected path reproduces the truth exactly
        assert np.array_equal(oracle.u_hat, u)
        diffs = np.flatnonzero(natural.u_hat != u)
        if diffs.size == 0:
            assert oracle.corrected_count == 0
            assert oracle.first_corrected is None
        else:
            saw_error = True
            assert oracle.corrected_count >= 1
            # both paths agree until the first natural mistake
            assert oracle.first_corrected == int(diffs[0])
    assert saw_error  # the operating point must actually exercise corrections


# ---------------------------------------------------------------------------
# Backend selection and parity
# ---------------------------------------------------------------------------

def _has_ext():
    try:
        from polarflip import _sc_ext  # noqa: F401
        return True
    except ImportError:
        return False


def test_load_backend_env_selection(monkeypatch):
    monkeypatch.setenv("POLARFLIP_BACKEND", "python")
    assert sc_kernel._load_backend().BACKEND_NAME == "python"
    monkeypatch.setenv("POLARFLIP_BACKEND", "bogus")
    with pytest.raises(ValueError):
        sc_kernel._load_backend()
    monkeypatch.setenv("POLARFLIP_BACKEND", "cython")
    if _has_ext():
        assert sc_kernel._load_backend().BACKEND_NAME == "cython"
    else:
        with pytest.raises(ImportError):
            sc_kernel._load_backend()
    monkeypatch.delenv("POLARFLIP_BACKEND")
    assert sc_kernel._load_backend().BACKEND_NAME in ("cython", "python")


@pytest.mark.skipif(not _has_ext(), reason="compiled kernel not built")
def test_backend_parity_bit_exact(monkeypatch):
    from polarflip import _kernel_py, _sc_ext

    spec = make_code(128, 56, crc_bits=8)
    rng = np.random.default_rng(41)
    frames = [rng.normal(scale=2.0, size=128) for _ in range(20)]
    payload = rng.integers(0, 2, spec.payload_bits, dtype=np.uint8)
    u = np.zeros(128, dtype=np.uint8)
    u[spec.unfrozen_indices] = payload
    flip_leaf = int(spec.unfrozen_indices[3])

    outputs = []
    for backend in (_sc_ext, _kernel_py):
        monkeypatch.setattr(sc_kernel, "_backend", backend)
        dec = ScDecoder(spec)
        rows = []
        for llrs in frames:
            plain = dec.decode(llrs)
            forced = dec.decode(llrs, forced={flip_leaf: int(plain.u_hat[flip_leaf]) ^ 1})
            oracle = dec.decode(llrs, correct_with=u)
            rows.append((
                plain.u_hat, plain.leaf_llrs,
                forced.u_hat, forced.leaf_llrs,
                oracle.u_hat, oracle.corrected_count, oracle.first_corrected,
            ))
        outputs.append(rows)

    for row_ext, row_py in zip(*outputs):
        for a, b in zip(row_ext, row_py):
            if isinstance(a, np.ndarray):
                assert np.array_equal(a, b)
            else:
                assert a == b


# ---------------------------------------------------------------------------
# Validation and hygiene
# ---------------------------------------------------------------------------

def test_decode_input_validation():
    dec = ScDecoder(FROZEN0_4)
    with pytest.raises(ValueError):
        dec.decode([1.0, 2.0])  # wrong length
    with pytest.raises(ValueError):
        dec.decode(LLRS4, forced={0: 1})  # frozen leaf
    with pytest.raises(ValueError):
        dec.decode(LLRS4, forced={9: 1})  # out of range
    with pytest.raises(ValueError):
        dec.decode(LLRS4, forced={1: 2})  # not a bit
    with pytest.raises(ValueError):
        dec.decode(LLRS4, forced={1: 0}, correct_with=[0, 0, 0, 0])
    with pytest.raises(ValueError):
        dec.decode(LLRS4, correct_with=[1, 0, 0, 0])  # nonzero at frozen leaf
    with pytest.raises(ValueError):
        dec.decode(LLRS4, correct_with=[0, 0])  # wrong length
    with pytest.raises(ValueError):
        sc_decode([np.inf, 0.0, 1.0, 2.0], FROZEN0_4)
    with pytest.raises(ValueError):
        sc_decode([np.nan, 0.0, 1.0, 2.0], FROZEN0_4)


def test_forced_state_is_cleared_between_decodes():
    dec = ScDecoder(ALL_OPEN4)
    before = dec.decode(LLRS4)
    dec.decode(LLRS4, forced={1: 0})
    after = dec.decode(LLRS4)
    assert np.array_equal(before.u_hat, after.u_hat)
    assert np.array_equal(before.leaf_llrs, after.leaf_llrs)


def test_forced_state_cleared_even_on_error():
    dec = ScDecoder(ALL_OPEN4)
    before = dec.decode(LLRS4)
    with pytest.raises(ValueError):
        dec.decode(LLRS4, forced={1: 0, 9: 1})
    after = dec.decode(LLRS4)
    assert np.array_equal(before.u_hat, after.u_hat)


def test_results_are_independent_copies():
    dec = ScDecoder(ALL_OPEN4)
    first = dec.decode(LLRS4)
    first.u_hat[:] = 9
    first.leaf_llrs[:] = np.nan
    second = dec.decode(LLRS4)
    assert second.u_hat.tolist() == [1, 1, 0, 0]
    assert second.leaf_llrs.tolist() == [-1.0, -4.0, 3.0, 11.0]


def test_backend_name_reports_selected_backend():
    assert sc_kernel.backend_name() in ("cython", "python")
    assert sc_kernel.backend_name() == sc_kernel.BACKEND_NAME
