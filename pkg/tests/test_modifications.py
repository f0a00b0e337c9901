import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_scenario
from robust_esm import ModificationState
from robust_esm.modifications import (
    LocalBalanceCut,
    PrefixH2Cut,
    SpliceOverlapError,
    YearlyBalanceCut,
    mod1_demand_increase,
    mod2_splice,
    mod3_h2_prefix,
    mod3a_yearly_balance,
    mod3b_local_h2,
    mod4_local_capacity,
    mod6_global_h2,
    smooth_uniform,
)


def flat(n=4, pv=0.1, wind=0.1):
    return make_scenario("r", [pv] * n, [wind] * n, [10.0] * n)


def test_zero_gap_leaves_state_unchanged():
    state = ModificationState()
    assert mod1_demand_increase(state, np.zeros(5)) is state


def test_unsmoothed_adds_gaps():
    state = mod1_demand_increase(ModificationState(), [0, 2, 0, 1])
    assert list(state.additions(4)) == [0, 2, 0, 1]


def test_uniform_window_example():
    out = smooth_uniform(np.array([0, 0, 100, 0, 0.0]), 1)
    assert np.allclose(out, [0, 100 / 3, 100 / 3, 100 / 3, 0])


def test_window_clipped_at_edge():
    out = smooth_uniform(np.array([100.0, 0, 0, 0]), 1)
    assert np.allclose(out, [50, 50, 0, 0])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.lists(st.floats(0, 500, allow_nan=False), min_size=12, max_size=12), min_size=1, max_size=5),
       st.sampled_from([None, 1, 3, 12]))
def test_additions_never_decrease(rounds, window):
    state = ModificationState()
    previous = np.zeros(12)
    for gaps in rounds:
        state = mod1_demand_increase(state, np.array(gaps), smoothing=window)
        current = state.additions(12)
        assert np.all(current >= previous - 1e-12)
        previous = current


def test_negative_gap_rejected():
    with pytest.raises(ValueError):
        mod1_demand_increase(ModificationState(), [1.0, -1.0])


def test_identity_splice():
    ref = make_scenario("r", [0.1, 0.2, 0.3], [0.4, 0.5, 0.6], [1, 2, 3])
    _, synthetic = mod2_splice(ModificationState(), ref, ref, (0, 2))
    for p in ref.capacity_factors:
        assert np.array_equal(synthetic.capacity_factors[p], ref.capacity_factors[p])


def test_splice_substitutes_hours():
    ref = flat(pv=0.1)
    donor = make_scenario("d", [0.9] * 4, [0.9] * 4, [99.0] * 4)
    state, synthetic = mod2_splice(ModificationState(), ref, donor, (2, 3))
    assert np.allclose(synthetic.capacity_factors["pv_openfield"], [0.1, 0.1, 0.9, 0.9])
    assert np.array_equal(synthetic.demand, ref.demand)
    assert state.spliced_periods[0].donor_id == "d"


def test_overlapping_splice_rejected():
    ref, donor = flat(), make_scenario("d", [0.9] * 4, [0.9] * 4, [10.0] * 4)
    state, _ = mod2_splice(ModificationState(), ref, donor, (1, 2))
    with pytest.raises(SpliceOverlapError):
        mod2_splice(state, ref, donor, (2, 3))
    assert len(state.spliced_periods) == 1
    state2, _ = mod2_splice(state, ref, donor, (3, 3))
    assert len(state2.spliced_periods) == 2


def test_splice_horizon_mismatch():
    from robust_esm import SchemaError

    with pytest.raises(SchemaError):
        mod2_splice(ModificationState(), flat(4), flat(5), (0, 1))


def test_yearly_balance_passthrough():
    s = flat()
    zero = mod3a_yearly_balance(ModificationState(), s, 0.0, loss_weight=1.0)
    (cut,) = zero.extra_constraints
    assert isinstance(cut, YearlyBalanceCut) and cut.gap_total == 0 and cut.weight == 1.0
    (cut,) = mod3a_yearly_balance(ModificationState(), s, 500.0).extra_constraints
    assert cut.gap_total == 500 and cut.weight == ModificationState().alpha


def test_yearly_balance_replaces_previous():
    s = flat()
    state = mod3a_yearly_balance(ModificationState(), s, 10.0)
    state = mod3a_yearly_balance(state, s, 20.0)
    assert [c.gap_total for c in state.extra_constraints] == [20.0]


def test_local_h2_is_idempotent():
    s = flat()
    state = mod3b_local_h2(ModificationState(), s, (1, 2))
    assert mod3b_local_h2(state, s, (1, 2)) is state
    (cut,) = state.extra_constraints
    assert isinstance(cut, LocalBalanceCut)
    assert set(state.sigma_vars) == {cut.period_id}


def test_prefix_requires_sigma_and_order():
    s = flat(8)
    state = mod3b_local_h2(ModificationState(), s, (1, 2))
    with pytest.raises(ValueError):
        mod3_h2_prefix(state, s, [(4, 5)])
    state = mod3b_local_h2(state, s, (4, 5))
    with pytest.raises(ValueError):
        mod3_h2_prefix(state, s, [(4, 5), (1, 2)])
    with pytest.raises(ValueError):
        mod3_h2_prefix(state, s, [(1, 4), (4, 5)])
    assert mod3_h2_prefix(state, s, []).extra_constraints == state.extra_constraints
    done = mod3_h2_prefix(state, s, [(1, 2), (4, 5)])
    prefixes = [c for c in done.extra_constraints if isinstance(c, PrefixH2Cut)]
    assert [len(c.sigma_ids) for c in prefixes] == [1, 2]


def test_capacity_cut_dedup():
    s = flat()
    state = mod4_local_capacity(ModificationState(), s, (0, 1))
    assert mod4_local_capacity(state, s, (0, 1)) is state


def test_end_bonus_accumulates():
    state = mod6_global_h2(mod6_global_h2(ModificationState(), 300), 200)
    assert state.h2_end_bonus == 500
    assert mod6_global_h2(ModificationState(), 0).h2_end_bonus == 0
    with pytest.raises(ValueError):
        mod6_global_h2(ModificationState(), -1)


def test_state_summary():
    s = flat()
    state = mod3b_local_h2(mod1_demand_increase(ModificationState(), [1, 0, 0, 0]), s, (0, 1))
    assert state.summary() == {"demand_added": 1.0, "splices": 0, "cuts": {"LocalBalanceCut": 1},
                               "sigma_vars": 1, "h2_end_bonus": 0.0}
