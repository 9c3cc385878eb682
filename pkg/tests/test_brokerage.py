import logging

import numpy as np
import pytest

from api.routes.tools.brokerage.functions import (
    apply_map,
    concentrated_profile,
    correlated_broker_assignment,
    correlated_map_for_log,
    dynamic_random_map,
    export_map,
    fixed_random_map,
    frequency_variance,
    load_profile,
    realized_profile,
    zipf_profile,
)
from api.routes.tools.decomposition.functions import decompose, splitting_ratio_mean
from api.routes.tools.event_log.functions import export, ingest
from api.routes.tools.simulators.functions.imitation import simulate_imitation
from api.routes.tools.simulators.functions.network import build_preferential_attachment
from api.routes.tools.simulators.functions.public_info import simulate_public_info
from api.routes.tools.simulators.functions.splitting import simulate_splitting
from api.routes.tools.stats.functions.measures import random_mapping_prediction
from core.config import settings
from core.errors import FeasibilityError, MappingError, ParameterError, ParseError
from models.brokerage import BrokerageMap
from models.simulation import ImitationParams, PublicInfoParams, SplittingModelParams
from tests.conftest import random_log, write_profile


def _loads(brokerage: BrokerageMap, freqs) -> np.ndarray:
    freqs = np.asarray(freqs, dtype=float)
    return np.bincount(brokerage.assignment, weights=freqs / freqs.sum(), minlength=brokerage.profile.M_prime)


def test_zipf_profiles():
    uniform = zipf_profile(20, 0.0)
    assert uniform.variance == pytest.approx(0.0, abs=1e-15)
    assert sum(uniform.P_prime) == pytest.approx(1.0, abs=1e-12)

    steep = zipf_profile(20, 1.5)
    assert steep.P_prime == sorted(steep.P_prime, reverse=True)
    with pytest.raises(ParameterError):
        zipf_profile(0)


def test_concentrated_profile_concentration():
    profile = concentrated_profile()
    P = profile.frequencies()
    assert profile.M_prime == 50
    assert 0.40 <= P[:5].sum() <= 0.50
    assert 0.055 <= random_mapping_prediction(50, profile.variance).split_fraction <= 0.07


def test_uniform_investors_on_as_many_uniform_brokers_is_a_bijection():
    brokerage = fixed_random_map(np.full(20, 0.05), zipf_profile(20, 0.0), seed=3)
    assert sorted(brokerage.assignment) == list(range(20))


def test_fixed_map_meets_the_concentrated_profile():
    profile = concentrated_profile()
    brokerage = fixed_random_map(np.full(10_000, 1e-4), profile, seed=0)
    tolerance = settings.REBALANCE_TOLERANCE * min(profile.P_prime)
    assert np.abs(_loads(brokerage, np.full(10_000, 1e-4)) - profile.frequencies()).max() <= tolerance


def _greedy_deviation(freqs: np.ndarray, target: np.ndarray) -> float:
    """Largest-first assignment to the broker with the most room left."""
    load = np.zeros_like(target)
    for f in np.sort(freqs)[::-1]:
        b = int(np.argmax(target - load))
        load[b] += f
    return float(np.abs(load - target).max())


def test_fixed_map_is_as_good_as_greedy_packing():
    weights = np.arange(1, 101, dtype=float) ** -0.5
    freqs = weights / weights.sum()
    profile = zipf_profile(10, 0.0)
    tolerance = settings.REBALANCE_TOLERANCE * 0.1

    brokerage = fixed_random_map(freqs, profile, seed=1)

    assert _greedy_deviation(freqs, profile.frequencies()) <= tolerance
    assert np.abs(_loads(brokerage, freqs) - profile.frequencies()).max() <= tolerance


def test_fixed_map_is_seeded():
    freqs = np.full(500, 1 / 500)
    a = fixed_random_map(freqs, zipf_profile(10, 1.0), seed=5)
    b = fixed_random_map(freqs, zipf_profile(10, 1.0), seed=5)
    assert a.assignment == b.assignment


def test_dominant_investor_is_infeasible():
    freqs = np.array([0.5] + [0.5 / 50] * 50)
    with pytest.raises(FeasibilityError):
        fixed_random_map(freqs, zipf_profile(10, 0.0))


def test_bijective_map_leaves_the_decomposition_alone():
    log = random_log(seed=2, N=3000, M=5, persistence=0.6)
    brokerage = fixed_random_map(np.full(5, 0.2), zipf_profile(5, 0.0), seed=4)
    brokers = apply_map(log, brokerage)

    a, b = decompose(log, 10), decompose(brokers, 10)
    np.testing.assert_array_equal(a.C, b.C)
    np.testing.assert_array_equal(a.C_split, b.C_split)
    np.testing.assert_array_equal(a.C_herd, b.C_herd)
    assert brokers.metadata["brokerage"] == "fixed_random"


def test_fixed_map_must_cover_the_log():
    log = random_log(seed=2, N=100, M=5)
    brokerage = fixed_random_map(np.full(3, 1 / 3), zipf_profile(3, 0.0))
    with pytest.raises(MappingError):
        apply_map(log, brokerage)


def test_splitting_survives_a_fixed_map():
    log = simulate_splitting(SplittingModelParams(M=1000, pool_size=2, v_min=2, N=200_000, seed=2))
    brokerage = fixed_random_map(log.frequencies(), zipf_profile(10, 0.5), seed=2)
    result = decompose(apply_map(log, brokerage), 5)
    assert 0.85 <= splitting_ratio_mean(result, 1, 5) <= 1.15


def test_dynamic_map_follows_the_profile_and_ignores_workers(monkeypatch):
    monkeypatch.setattr(settings, "DYNAMIC_MAP_CHUNK", 10_000)
    profile = zipf_profile(8, 1.0)
    log = random_log(seed=0, N=100_000, M=3)
    brokerage = dynamic_random_map(profile, seed=9)

    serial = apply_map(log, brokerage, workers=1)
    threaded = apply_map(log, brokerage, workers=4)

    np.testing.assert_array_equal(serial.agents, threaded.agents)
    P, _ = realized_profile(serial)
    np.testing.assert_allclose(P, profile.frequencies(), atol=0.01)


def test_dynamic_map_reproduces_the_random_mapping_prediction():
    investors = simulate_public_info(PublicInfoParams(M=50, N=100_000, seed=3))
    profile = concentrated_profile()
    brokers = apply_map(investors, dynamic_random_map(profile, seed=3))
    _, variance = realized_profile(brokers)

    result = decompose(brokers, 10)

    predicted = random_mapping_prediction(profile.M_prime, variance).split_fraction
    assert splitting_ratio_mean(result, 1, 10) == pytest.approx(predicted, abs=0.015)


def test_full_inheritance_puts_everyone_with_the_root():
    network = build_preferential_attachment(300, seed=0)
    profile = zipf_profile(10, 0.5)
    brokerage = correlated_broker_assignment(network, profile, phi=1.0, seed=1)

    assert len(set(brokerage.assignment)) == 1
    assert network.broker_of == brokerage.assignment

    log = simulate_imitation(network, ImitationParams(M=300, p=0.5, N=3000, seed=1))
    _, variance = realized_profile(apply_map(log, brokerage))
    assert variance == pytest.approx((1 / 10) * (1 - 1 / 10), abs=1e-12)


def test_no_inheritance_draws_from_the_profile():
    network = build_preferential_attachment(20_000, seed=0)
    profile = zipf_profile(5, 1.0)
    brokerage = correlated_broker_assignment(network, profile, phi=0.0, seed=2)
    counts = np.bincount(brokerage.assignment, minlength=5) / 20_000
    np.testing.assert_allclose(counts, profile.frequencies(), atol=0.01)


def test_correlated_assignment_needs_attachment_order():
    network = build_preferential_attachment(10, seed=0).model_copy(update={"parent": None})
    with pytest.raises(ParameterError):
        correlated_broker_assignment(network, zipf_profile(3), phi=0.5)


def test_correlated_map_matches_investors_by_label(tmp_path):
    network = build_preferential_attachment(400, seed=6)
    log = simulate_imitation(network, ImitationParams(M=400, p=0.7, N=500, seed=2))
    log = log.relabel(log.agents, log.labels, network_seed="6")
    path = tmp_path / "imitation.csv"
    export(log, path)
    ingested = ingest(path)

    brokerage = correlated_map_for_log(ingested, zipf_profile(10, 0.5), phi=0.5, seed=1)
    direct = correlated_broker_assignment(build_preferential_attachment(400, 6), zipf_profile(10, 0.5), 0.5, 1)

    brokers = apply_map(ingested, brokerage)
    expected = [direct.assignment[int(label[1:])] for label in np.asarray(ingested.labels)[ingested.agents]]
    assert brokers.agents.tolist() == expected


def test_correlated_map_rejects_unknown_investors():
    log = random_log(seed=0, N=100, M=3)
    with pytest.raises(MappingError):
        correlated_map_for_log(log, zipf_profile(3), phi=0.2, network_seed=0)


def test_profile_and_map_files(tmp_path, caplog):
    path = tmp_path / "profile.csv"
    write_profile(path, [2.0, 1.0, 1.0], ["x", "y", "z"])
    with caplog.at_level(logging.WARNING):
        profile = load_profile(path)
    assert profile.labels == ["x", "y", "z"]
    assert profile.P_prime == pytest.approx([0.5, 0.25, 0.25])
    assert "renormalising" in caplog.text

    brokerage = fixed_random_map(np.full(4, 0.25), profile, seed=0, tolerance=1.0)
    export_map(brokerage, tmp_path / "map.csv", ("i0", "i1", "i2", "i3"))
    lines = (tmp_path / "map.csv").read_text().splitlines()
    assert lines[0].startswith("# brokerage=fixed_random")
    assert "investor,broker" in lines

    export_map(dynamic_random_map(profile), tmp_path / "dynamic.csv")
    assert "broker,frequency" in (tmp_path / "dynamic.csv").read_text()


def test_bad_profiles(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("broker,weight\nx,1\n")
    with pytest.raises(ParseError):
        load_profile(path)
    path.write_text("broker,frequency\nx,0.5\ny,-1\n")
    with pytest.raises(ParseError):
        load_profile(path)
    with pytest.raises(ParameterError):
        load_profile(tmp_path / "missing.csv")


def test_frequency_variance():
    assert frequency_variance([0.25] * 4) == pytest.approx(0.0, abs=1e-15)
    assert frequency_variance([1.0, 0.0, 0.0, 0.0]) == pytest.approx(0.25 * 0.75)
