import numpy as np
import pytest

from wfqubo.generator import (
    FALLOFFS,
    GeneratorConfig,
    derive_seed,
    fit_horizon,
    generate_instance,
    horizon_estimate,
    random_parents,
)
from wfqubo.instance import InstanceError, WorkflowInstance, validate_instance
from wfqubo.solvers import greedy_schedule


def test_config_validation():
    with pytest.raises(InstanceError):
        GeneratorConfig(0)
    with pytest.raises(InstanceError):
        GeneratorConfig(3, resource_lo=5, resource_hi=4)
    with pytest.raises(InstanceError):
        GeneratorConfig(3, falloff="linear")
    with pytest.raises(InstanceError):
        GeneratorConfig(3, policy="none")


def test_same_seed_same_instance():
    a = generate_instance(GeneratorConfig(12, seed=42))
    b = generate_instance(GeneratorConfig(12, seed=42))
    assert a == b
    assert a != generate_instance(GeneratorConfig(12, seed=43))


def test_single_job_is_root_without_edges():
    inst = generate_instance(GeneratorConfig(1, seed=3))
    assert inst.dag.edges == [] and inst.dag.parents == (frozenset(),)
    # horizon ends at the first slot the lone job fits into
    assert inst.resources.available[-1] >= inst.reqs[0]
    assert all(a < inst.reqs[0] for a in inst.resources.available[:-1])


@pytest.mark.parametrize("falloff", sorted(FALLOFFS))
@pytest.mark.parametrize("policy", ["sampled", "ample"])
def test_generated_instances_are_valid(falloff, policy):
    for seed in range(350):
        n = 1 + seed % 12
        inst = generate_instance(GeneratorConfig(n, falloff=falloff, seed=seed, policy=policy))
        assert validate_instance(inst).ok
        assert inst.horizon == greedy_schedule(inst).makespan
        assert all(1 <= r <= 10 for r in inst.reqs)


def test_tenth_node_takes_first_as_parent_one_in_ten():
    rng = np.random.default_rng(7)
    trials = 20000
    hits = sum(0 in random_parents(10, "inverse", rng)[9] for _ in range(trials))
    # binomial sd is about 0.0021; allow five of them
    assert abs(hits / trials - 0.1) < 0.011


def test_inverse_square_expected_parent_count():
    rng = np.random.default_rng(11)
    trials = 6000
    counts = np.zeros(8)
    for _ in range(trials):
        for k, ps in enumerate(random_parents(8, "inverse-square", rng), start=1):
            counts[k - 1] += len(ps)
    expected = np.array([(k - 1) / k**2 for k in range(1, 9)])
    sd = np.sqrt(np.array([(k - 1) * (1 / k**2) * (1 - 1 / k**2) for k in range(1, 9)]) / trials)
    assert np.all(np.abs(counts / trials - expected) <= 5 * sd + 1e-12)


def test_ample_policy_admits_every_job_everywhere():
    inst = generate_instance(GeneratorConfig(15, seed=5, policy="ample"))
    assert min(inst.resources.available) >= max(inst.reqs)


def test_sampled_policy_uses_job_requirements_or_zero():
    inst = generate_instance(GeneratorConfig(15, seed=5))
    assert set(inst.resources.available) <= set(inst.reqs) | {0}


def test_horizon_multiplier_extends_profile():
    base = generate_instance(GeneratorConfig(8, seed=2))
    longer = generate_instance(GeneratorConfig(8, seed=2, horizon_multiplier=1.5))
    assert longer.horizon == int(np.ceil(base.horizon * 1.5))
    assert longer.resources.available[: base.horizon] == base.resources.available


def test_horizon_estimate_examples():
    chain = WorkflowInstance.build([1, 1, 1], [(0, 1), (1, 2)], [5] * 6)
    assert horizon_estimate(chain) == 3
    assert fit_horizon(chain).horizon == 3
    assert horizon_estimate(WorkflowInstance.build([2], [], [3])) == 1


def test_canonical_horizon_estimate(canonical):
    assert horizon_estimate(canonical) == 7


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(0, 5, 1) == derive_seed(0, 5, 1)
    assert len({derive_seed(0, 5, k) for k in range(100)}) == 100
    assert 0 <= derive_seed(2**70, 1) < 2**64
