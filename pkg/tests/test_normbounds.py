import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oapcert.construction import beta
from oapcert.linalg import operator_norm
from oapcert.normbounds import (
    PSI_CONSTANT,
    beta_tilde_closed_form,
    beta_tilde_norm,
    beta_tilde_stated,
    condition_ii_bound,
    condition_iii_bound,
    factorization_check,
    identity_interp_bound,
    block_norm_bound,
    oh_row_proj_norm,
    psi_groups,
    psi_sample_check,
)
from oapcert.partitions import PartitionPair, PartitionSet, generate_partitions


@pytest.fixture(scope="module")
def singles():
    return generate_partitions(12, "singleton")


@pytest.fixture(scope="module")
def greedy():
    return generate_partitions(12, "greedy", 0)


def coarse_set():
    """Levels 5..7 where the 16 offset-0 indices of sigma_6 form one Nabla block.

    Delta blocks group indices by residue (mod 2 at level 5, mod 4 at level 6
    except offset 0, mod 8 at level 7), so every f_k image of the block lies in
    a single Delta block.
    """
    def by_residue(n, mod, keep_single=()):
        blocks, singles = {}, []
        for j in range(2**n, 2 ** (n + 1)):
            if j % mod in keep_single:
                singles.append([j])
            else:
                blocks.setdefault(j % mod, []).append(j)
        return list(blocks.values()) + singles

    one = lambda n: [[j] for j in range(2**n, 2 ** (n + 1))]
    A = list(range(64, 128, 4))
    nabla6 = [A] + [[j] for j in range(64, 128) if j % 4]
    pairs = [
        PartitionPair.from_blocks(5, by_residue(5, 2), one(5), 1),
        PartitionPair.from_blocks(6, by_residue(6, 4, keep_single=(0,)), nabla6, 1),
        PartitionPair.from_blocks(7, by_residue(7, 8), one(7), 1),
    ]
    return PartitionSet(pairs, "synthetic", 0), A


def test_beta_tilde_values():
    assert beta_tilde_norm(2) == pytest.approx(0.4330127019, rel=1e-9)
    assert beta_tilde_norm(2) == pytest.approx(beta_tilde_closed_form(2), rel=1e-10)
    assert beta_tilde_closed_form(5) / beta_tilde_stated(5) == pytest.approx(2.0)
    for n in range(2, 8):
        assert beta_tilde_norm(n, dense=False) == pytest.approx(beta_tilde_norm(n), rel=1e-10)


def test_identity_interp_bound():
    assert identity_interp_bound([16]) == pytest.approx(2.0)
    assert identity_interp_bound([8, 8]) == pytest.approx(2.0)
    assert identity_interp_bound([1]) == 1.0
    with pytest.raises(ValueError):
        identity_interp_bound([])


def test_condition_ii_decreasing(singles):
    bounds = [condition_ii_bound(n, singles) for n in range(2, 10)]
    for a, b in zip(bounds, bounds[1:]):
        assert a / b == pytest.approx(np.sqrt(2), abs=1e-9)
    with pytest.raises(ValueError):
        condition_ii_bound(11, singles)


@pytest.mark.parametrize("n", range(2, 8))
def test_condition_ii_sandwich(n, singles, greedy):
    norm = operator_norm(beta(n).dense())
    assert norm <= condition_ii_bound(n, singles)
    assert norm <= condition_ii_bound(n, greedy)


def test_oh_row_examples():
    assert oh_row_proj_norm(np.eye(16)) == pytest.approx(8.0, rel=1e-12)
    assert oh_row_proj_norm(np.eye(1)) == 1.0
    assert oh_row_proj_norm(np.diag([2.0, 0.0, 0.0])) == pytest.approx(2.0)
    with pytest.raises(ValueError):
        oh_row_proj_norm(np.ones((2, 3)))


def test_block_norm_bound():
    assert block_norm_bound(range(16)) == pytest.approx(144.0)
    assert block_norm_bound([5]) == 18.0
    assert block_norm_bound([5, 6]) == pytest.approx(30.2723, abs=1e-4)


def test_psi_groups_cover_y():
    g = psi_groups([16, 17])
    assert len(g) == 9
    assert sum(len(members) for grp in g for members in grp.values()) == 18


def test_psi_zero_family(singles):
    rep = psi_sample_check([16], singles, families=np.zeros((3, 1, 2, 2)))
    assert rep.max_ratio == 0.0


@pytest.mark.parametrize("j", [4, 7, 33, 100])
def test_psi_singleton(singles, j):
    rep = psi_sample_check([j], singles, samples=200, seed=j)
    assert rep.ok and rep.max_ratio <= 10 + 1e-12


def test_psi_large_block():
    ps, A = coarse_set()
    rep = psi_sample_check(A, ps, dim=8, samples=200, seed=3)
    assert len(rep.block) == 16
    assert rep.max_ratio <= PSI_CONSTANT


def test_psi_rejects_split_images(singles):
    with pytest.raises(ValueError):
        psi_sample_check([16, 17], singles)


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 6))
def test_psi_ratio_bounded(seed, dim):
    ps, A = coarse_set()
    rep = psi_sample_check(A[: 1 + seed % 16], ps, dim=dim, samples=20, seed=seed)
    assert rep.max_ratio <= PSI_CONSTANT


@pytest.mark.parametrize("n", [3, 5])
def test_factorization_all_blocks(n, greedy):
    for A in greedy[n + 1].nabla:
        cert = factorization_check(A, n, greedy, seed=n)
        assert cert.exact_ok, A
        assert cert.max_trace_residual < 1e-10


def test_factorization_shapes(singles):
    cert = factorization_check([16], 3, singles)
    assert cert.psi.shape == (12, 1)
    assert cert.iota_z.shape == (56, 12)
    assert cert.ok


def test_factorization_rejects(singles):
    with pytest.raises(ValueError):
        factorization_check([8], 3, singles)
    ps, A = coarse_set()
    with pytest.raises(ValueError):
        # offset-1 indices share one Delta_6 block
        factorization_check([65, 69], 5, ps)


def test_condition_iii_examples(singles, greedy):
    b = condition_iii_bound(3, singles)
    assert (b.middle, b.final) == (18.0, 36.0)
    assert b.ok
    for n in range(3, 11):
        assert condition_iii_bound(n, greedy).ok
    with pytest.raises(ValueError):
        condition_iii_bound(2, greedy)
    with pytest.raises(ValueError):
        condition_iii_bound(11, greedy)


def test_condition_iii_chain_blocks():
    # a single Nabla block covering sigma_4 with m = 16
    n = 3
    one = lambda k: [[j] for j in range(2**k, 2 ** (k + 1))]
    pairs = [PartitionPair.from_blocks(k, one(k), one(k), 1) for k in (3, 5)]
    pairs.insert(1, PartitionPair.from_blocks(4, one(4), [list(range(16, 32))], 16))
    ps = PartitionSet(pairs, "synthetic", 0)
    b = condition_iii_bound(n, ps, certify=False)
    assert b.middle == pytest.approx(2**-4 * 18 * 16**0.75)
    assert b.final == pytest.approx(18.0)


@pytest.mark.parametrize("card", range(1, 65))
def test_oh_row_identity_all_cards(card):
    assert oh_row_proj_norm(np.eye(card)) == pytest.approx(card**0.75, abs=1e-9)


def test_factorization_detects_wrong_psi(monkeypatch, singles):
    import oapcert.normbounds as nb

    real = nb.y_as_z_combination
    # flip the sign of the leading z term for one index
    monkeypatch.setattr(nb, "y_as_z_combination", lambda j: (-real(j)[0],) + real(j)[1:] if j == 17 else real(j))
    assert not factorization_check([17], 3, singles).exact_ok
    assert factorization_check([16], 3, singles).exact_ok
