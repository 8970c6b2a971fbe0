import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from isacbeam.channels import ChannelKind
from isacbeam.conic import (Criterion, ProblemSpec, Receiver, build,
                            dump_program, embed_hermitian, extract,
                            load_program, unembed_hermitian)
from isacbeam.model import PowerMode, SystemConfig, UlaConfig

from conftest import five_beam_desired, five_beam_sensing, make_channels, make_spec


def _random_hermitian(rng, n):
    g = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (g + g.conj().T) / 2


def test_embed_roundtrip():
    rng = np.random.default_rng(0)
    h = _random_hermitian(rng, 6)
    s = embed_hermitian(h)
    assert s.shape == (12, 12)
    assert np.allclose(s, s.T)
    assert np.allclose(unembed_hermitian(s), h)


def test_embed_preserves_spectrum():
    rng = np.random.default_rng(1)
    h = _random_hermitian(rng, 5)
    ev_h = np.linalg.eigvalsh(h)
    ev_s = np.linalg.eigvalsh(embed_hermitian(h))
    # each eigenvalue of H appears twice in the real embedding
    assert np.allclose(np.sort(ev_s), np.sort(np.concatenate([ev_h, ev_h])))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.integers(2, 6))
def test_embed_roundtrip_property(seed, n):
    h = _random_hermitian(np.random.default_rng(seed), n)
    assert np.allclose(unembed_hermitian(embed_hermitian(h)), h)


def test_spec_validation(ula8):
    chans = make_channels(0, ula8, num_users=2)
    with pytest.raises(ValueError):
        ProblemSpec(criterion=Criterion.MATCHING, receiver=Receiver.TYPE_I,
                    ula=ula8,
                    system=SystemConfig(total_power=0.1,
                                        power_mode=PowerMode.EQUALITY),
                    channels=chans, sensing=five_beam_sensing())
    with pytest.raises(ValueError):
        ProblemSpec(criterion=Criterion.MATCHING, receiver=Receiver.TYPE_I,
                    ula=ula8,
                    system=SystemConfig(total_power=0.1,
                                        power_mode=PowerMode.EQUALITY),
                    channels=(), desired=five_beam_desired())


def test_build_shapes_matching(ula8):
    chans = make_channels(0, ula8)
    prog = build(make_spec(Criterion.MATCHING, Receiver.TYPE_I, chans))
    kinds = [k for k, _ in prog.cones]
    assert kinds.count("psd") == 6  # five users + radar
    assert "soc" in kinds  # epigraph of the matching error
    assert prog.a.shape[0] == prog.b.size
    vm = prog.var_map
    assert len(vm["info_offsets"]) == 5
    assert vm["radar_offset"] is not None
    assert vm["alpha"] is not None


def test_build_shapes_maxmin_noradar(ula8):
    chans = make_channels(0, ula8)
    prog = build(make_spec(Criterion.MAX_MIN, Receiver.NO_RADAR, chans))
    kinds = [k for k, _ in prog.cones]
    assert kinds.count("psd") == 5  # no dedicated radar block
    assert "soc" not in kinds
    assert prog.var_map["radar_offset"] is None


def test_build_radar_only(ula8):
    prog = build(make_spec(Criterion.MAX_MIN, Receiver.RADAR_ONLY, ()))
    assert [k for k, _ in prog.cones].count("psd") == 1


def test_extract_roundtrips_planted_point(ula8):
    # plant a feasible-looking x, then check extract recovers the blocks
    chans = make_channels(1, ula8, num_users=2)
    prog = build(make_spec(Criterion.MAX_MIN, Receiver.TYPE_I, chans))
    rng = np.random.default_rng(2)
    covs = [_random_hermitian(rng, 8) for _ in range(3)]
    x = np.zeros(prog.num_vars)
    from isacbeam._cones import svec
    vm = prog.var_map
    for off, c in zip(list(vm["info_offsets"]) + [vm["radar_offset"]], covs):
        v = svec(embed_hermitian(c))
        x[off:off + v.size] = v
    x[vm["t"]] = 0.25
    sol = extract(prog, x)
    assert sol.min_gain == pytest.approx(0.25)
    for got, want in zip(sol.info_covariances, covs):
        assert np.allclose(got, want, atol=1e-12)
    assert np.allclose(sol.radar_covariance, covs[2], atol=1e-12)


def test_dump_load_roundtrip(tmp_path, ula8):
    chans = make_channels(3, ula8, num_users=2)
    prog = build(make_spec(Criterion.MATCHING, Receiver.TYPE_II, chans))
    path = tmp_path / "prog.txt"
    dump_program(prog, path)
    back = load_program(path)
    assert back.cones == prog.cones
    assert np.array_equal(back.c, prog.c)
    assert np.array_equal(back.b, prog.b)
    assert (back.a != prog.a).nnz == 0
