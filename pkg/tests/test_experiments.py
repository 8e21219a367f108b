import numpy as np
import pytest

from ligme.experiments import (
    ExperimentSpec,
    add_noise_snr,
    block_image,
    gen_scenario,
    noise_for_snr,
    num_rank,
    piecewise_constant_signal,
    run_experiment,
    sweep_mu,
)
from ligme.model import certify_convexity


def realized_snr(reference, noise):
    return 10 * np.log10(np.sum(reference ** 2) / np.sum(noise ** 2))


def test_noise_snr_is_exact():
    rng = np.random.default_rng(0)
    clean = rng.standard_normal(40) * 3
    for snr in (-5.0, 20.0, 30.0):
        noisy = add_noise_snr(clean, snr, np.random.default_rng(1))
        assert realized_snr(clean, noisy - clean) == pytest.approx(snr, abs=1e-10)


def test_noise_scales_with_signal():
    rng = np.random.default_rng(2)
    clean = rng.standard_normal(30)
    e1 = noise_for_snr(clean, 30, 10.0, np.random.default_rng(3))
    e2 = noise_for_snr(2 * clean, 30, 10.0, np.random.default_rng(3))
    assert np.linalg.norm(e2) == pytest.approx(2 * np.linalg.norm(e1), rel=1e-12)


def test_noise_rejects_zero_signal():
    with pytest.raises(ValueError):
        add_noise_snr(np.zeros(5), 10.0, np.random.default_rng(0))


def test_signal_recipe_is_blocky():
    x = piecewise_constant_signal(128)
    jumps = np.diff(x)
    assert np.count_nonzero(jumps) == 4
    assert x.shape == (128,)


def test_block_image_recipe():
    img = block_image(16)
    assert sorted(set(np.round(img.ravel(), 6))) == [0.25, 0.5, 0.75]
    s = np.linalg.svd(img, compute_uv=False)
    assert num_rank(img) == 3
    assert np.allclose(s[:3], [6.48, 0.901, 0.385], atol=5e-3)


def test_scenario_defaults_and_validation():
    spec = ExperimentSpec("tv1d").resolved()
    assert spec.snr_db == -5.0 and spec.iters == 15_000
    assert spec.mu_convex == 60.0 and spec.mu_ligme == 900.0
    with pytest.raises(ValueError):
        ExperimentSpec("unknown")
    with pytest.raises(ValueError):
        ExperimentSpec("tv1d", replications=0)


def test_gen_scenario_structures():
    inst = gen_scenario(ExperimentSpec("tv1d", seed=1))
    assert np.count_nonzero(inst.l.apply(inst.x_true)) == 4
    assert inst.a.shape == (100, 128)

    inst = gen_scenario(ExperimentSpec("deblur2d", seed=1))
    assert np.linalg.cond(inst.a.to_dense()) == pytest.approx(593.0, rel=0.01)

    inst = gen_scenario(ExperimentSpec("completion", seed=1))
    assert num_rank(inst.x_true.reshape(16, 16, order="F")) == 3
    kept = np.diag(inst.a.to_dense())
    assert int(kept.sum()) == 256 - 64

    inst = gen_scenario(ExperimentSpec("completion_tv", seed=1))
    assert len(inst.variants) == 4
    assert inst.l.rows == 240 + 240 + 256


@pytest.mark.parametrize("scenario", ["tv1d", "deblur2d", "completion", "completion_tv"])
def test_every_designed_variant_certifies(scenario):
    inst = gen_scenario(ExperimentSpec(scenario, seed=0))
    for variant in inst.variants:
        cert = certify_convexity(inst.problem(variant))
        assert cert.holds, f"{scenario}/{variant.name}: {cert.min_eig}"


@pytest.mark.parametrize("scenario", ["tv1d", "deblur2d", "completion", "completion_tv"])
def test_solver_metric_positive_definite_in_every_scenario(scenario):
    from ligme.solver import PMetric, auto_step_sizes

    inst = gen_scenario(ExperimentSpec(scenario, seed=0))
    for variant in inst.variants:
        prob = inst.problem(variant)
        sigma, tau = auto_step_sizes(prob, 1.001)
        assert PMetric(prob, sigma, tau).is_positive_definite(), \
            f"{scenario}/{variant.name}"


def test_paired_problems_share_observation():
    inst = gen_scenario(ExperimentSpec("tv1d", seed=4))
    probs = [inst.problem(v) for v in inst.variants]
    assert all(np.array_equal(p.y, probs[0].y) for p in probs[1:])


def test_run_experiment_is_deterministic():
    spec = ExperimentSpec("completion", replications=2, iters=120, seed=5)
    r1 = run_experiment(spec)
    r2 = run_experiment(spec)
    for name in r1.reports:
        assert r1.reports[name].mse == r2.reports[name].mse
        assert np.array_equal(r1.reports[name].final_x, r2.reports[name].final_x)
        assert np.array_equal(r1.reports[name].se_trace, r2.reports[name].se_trace)


def test_run_experiment_aggregates_mse():
    spec = ExperimentSpec("completion", replications=3, iters=100, seed=2)
    result = run_experiment(spec)
    for report in result.reports.values():
        assert report.mse == pytest.approx(float(np.mean(report.se_final)), abs=0.0)
        assert report.se_final.shape == (3,)
        assert report.num_ranks.shape == (3,)


def test_near_noiseless_low_mu_interpolates_observed_entries():
    # with B = 0 and vanishing penalty, kept entries are fit to the data
    spec = ExperimentSpec("completion", replications=1, iters=4000, seed=3,
                          snr_db=300.0, mu_convex=1e-9, mu_ligme=1e-9)
    inst = gen_scenario(spec)
    result = run_experiment(spec, instance=inst)
    kept = np.flatnonzero(np.diag(inst.a.to_dense()))
    x_hat = result.reports["convex"].final_x
    assert np.max(np.abs(x_hat[kept] - inst.x_true[kept])) <= 1e-6


def test_deblur_enhancement_improves_mse():
    spec = ExperimentSpec("deblur2d", replications=2, iters=3000, seed=0)
    result = run_experiment(spec)
    assert result.reports["ligme"].mse < result.reports["convex"].mse


def test_completion_tv_variant_ordering():
    # soft ordering of the four-penalty comparison at the benchmark weights
    spec = ExperimentSpec("completion_tv", replications=3, iters=1000, seed=0)
    result = run_experiment(spec)
    mse = {name: rep.mse for name, rep in result.reports.items()}
    assert mse["both_enhanced"] <= mse["tv_enhanced"]
    assert mse["lowrank_enhanced"] <= mse["convex"]


def test_sweep_mu_rows():
    spec = ExperimentSpec("completion", replications=1, iters=60, seed=0)
    rows = sweep_mu(spec, [0.05, 0.1])
    assert [r["mu"] for r in rows] == [0.05, 0.1]
    assert all({"convex", "ligme"} <= set(r) for r in rows)
    with pytest.raises(ValueError):
        sweep_mu(spec, [])


def test_sweep_minimizers_near_default_weights():
    # tuning curves bottom out at the scenario defaults (soft check: the
    # minimizer must land on the middle point of each bracket)
    spec = ExperimentSpec("tv1d", replications=2, iters=5000, seed=0)
    tv_grid = [35.0, 60.0, 110.0]
    rows = sweep_mu(spec, tv_grid)
    tv_curve = [r["convex"] for r in rows]
    assert tv_grid[int(np.argmin(tv_curve))] == 60.0
    enh_grid = [500.0, 900.0, 1600.0]
    rows = sweep_mu(spec, enh_grid)
    enh_curve = [r["ligme"] for r in rows]
    assert enh_grid[int(np.argmin(enh_curve))] == 900.0
    # gross over-regularization must blow the error up
    assert enh_curve[-1] > 3 * enh_curve[1]
