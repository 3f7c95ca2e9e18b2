use super::*;
use crate::model::coeffs::CoeffMeta;
use crate::model::registry::{build_model, model_names, ModelParams, OuMeanField, ZeroDrift};

fn grid(n: usize) -> TimeGrid {
    TimeGrid::new(1.0, n).unwrap()
}

fn sample_inputs(kind: NoiseKind, dim: usize, n: usize, g: TimeGrid, seed: u64) -> DrivingInputs {
    DrivingInputs::sample(g, &InitLaw::point(&vec![0.0; dim]), kind, dim, n, seed, 0).unwrap()
}

/// Drift equal to the ensemble mean at the current index; test-local model.
struct MeanDrift;

static MEAN_DRIFT_META: CoeffMeta = CoeffMeta {
    dim_state: 1,
    dim_noise: 1,
    lip_drift: 1.0,
    lip_diffusion: 0.0,
    bound_diffusion: 0.0,
    sigma_depends_on_x: false,
    sigma_depends_on_measure: false,
    is_binary_kernel: false,
};

impl Coefficients for MeanDrift {
    fn meta(&self) -> &CoeffMeta {
        &MEAN_DRIFT_META
    }

    fn interaction_stats(&self, _: usize, measure: &EnsemblePrefix, out: &mut Vec<f64>) {
        out.clear();
        out.extend_from_slice(&measure.mean_last());
    }

    fn drift(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, stats: &[f64], out: &mut [f64]) {
        out[0] = stats[0];
    }

    fn diffusion(&self, _: usize, _: &PrefixView, _: &EnsemblePrefix, _: &[f64], out: &mut [f64]) {
        out[0] = 0.0;
    }
}

#[test]
fn frozen_identity_diffusion_reproduces_noise() {
    let g = grid(16);
    let model = ZeroDrift::new(1, 1.0).unwrap();
    let noise = NoiseSource::new(NoiseKind::Brownian, 1, 3, 0).sample(&g);
    let measure = PathEnsemble::uniform(vec![Path::zeros(g, 1)]).unwrap();
    let x = solve_frozen(&FrozenInput { x0: &[0.0], noise: &noise, measure: &measure }, &model)
        .unwrap();
    for k in 0..g.n_points() {
        let want = noise.point(k)[0] - noise.point(0)[0];
        assert!((x.point(k)[0] - want).abs() <= 1e-12);
    }
}

#[test]
fn frozen_linear_decay_hand_values() {
    // drift -x, no noise, x0 = 1, h = 1/2: values 1, 1/2, 1/4.
    let g = grid(2);
    let model = OuMeanField::new(1, 1.0, 0.0).unwrap();
    // kernel a (y - x) against a measure frozen at zero gives drift -x.
    let measure = PathEnsemble::uniform(vec![Path::zeros(g, 1)]).unwrap();
    let noise = Path::zeros(g, 1);
    let x = solve_frozen(&FrozenInput { x0: &[1.0], noise: &noise, measure: &measure }, &model)
        .unwrap();
    assert_eq!(x.values(), &[1.0, 0.5, 0.25]);
}

#[test]
fn frozen_mean_drift_hand_values() {
    let g = grid(2);
    let measure = PathEnsemble::uniform(vec![Path::constant(g, &[2.0])]).unwrap();
    let noise = Path::zeros(g, 1);
    let x = solve_frozen(&FrozenInput { x0: &[0.0], noise: &noise, measure: &measure }, &MeanDrift)
        .unwrap();
    assert_eq!(x.values(), &[0.0, 1.0, 2.0]);
}

#[test]
fn two_particle_decay_with_zero_mean() {
    let g = grid(2);
    let model = OuMeanField::new(1, 1.0, 0.0).unwrap();
    let inputs = DrivingInputs {
        initials: vec![vec![1.0], vec![-1.0]],
        noises: vec![Path::zeros(g, 1), Path::zeros(g, 1)],
        weights: None,
    };
    let run = simulate_particles(&model, inputs).unwrap();
    assert_eq!(run.output.path(0).values(), &[1.0, 0.5, 0.25]);
    let negated: Vec<f64> = run.output.path(1).values().iter().map(|v| -v).collect();
    assert_eq!(run.output.path(0).values(), negated.as_slice());
}

#[test]
fn driftless_particles_follow_their_noise() {
    let g = grid(32);
    let model = ZeroDrift::new(2, 1.0).unwrap();
    let inputs = DrivingInputs::sample(
        g,
        &InitLaw::Gaussian { mean: vec![0.5, -0.5], std: vec![1.0, 1.0] },
        NoiseKind::Brownian,
        2,
        4,
        9,
        0,
    )
    .unwrap();
    let run = simulate_particles(&model, inputs).unwrap();
    for i in 0..4 {
        for k in 0..g.n_points() {
            for c in 0..2 {
                let want = run.inputs.initials[i][c] + run.inputs.noises[i].point(k)[c]
                    - run.inputs.noises[i].point(0)[c];
                assert!((run.output.path(i).point(k)[c] - want).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn fixed_point_identity_bit_exact() {
    for name in model_names() {
        let model = build_model(name, &ModelParams::new()).unwrap();
        let d = model.meta().dim_state;
        let g = grid(8);
        let inputs = DrivingInputs::sample(
            g,
            &InitLaw::Gaussian { mean: vec![0.1; d], std: vec![0.5; d] },
            NoiseKind::Brownian,
            model.meta().dim_noise,
            6,
            17,
            0,
        )
        .unwrap();
        let run = simulate_particles(model.as_ref(), inputs).unwrap();
        assert!(
            verify_fixed_point(model.as_ref(), &run).unwrap(),
            "fixed point identity failed for {name}"
        );
    }
}

#[test]
fn fixed_point_identity_holds_for_weighted_and_refined_runs() {
    let model = build_model("bounded_tanh", &ModelParams::new()).unwrap();
    let g = grid(16);
    let mut inputs = sample_inputs(NoiseKind::Brownian, 1, 5, g, 23);
    inputs.weights = Some(vec![0.3, 0.25, 0.2, 0.15, 0.1]);
    let run = simulate_particles_refined(model.as_ref(), inputs, 4).unwrap();
    assert!(verify_fixed_point(model.as_ref(), &run).unwrap());
}

#[test]
fn permutation_equivariance() {
    let model = build_model("ou_meanfield", &ModelParams::new()).unwrap();
    let g = grid(16);
    let inputs = sample_inputs(NoiseKind::Brownian, 1, 6, g, 31);
    let perm = [3usize, 0, 5, 1, 4, 2];
    let permuted = inputs.permuted(&perm);
    let run = simulate_particles(model.as_ref(), inputs).unwrap();
    let run_p = simulate_particles(model.as_ref(), permuted).unwrap();
    for (slot, &src) in perm.iter().enumerate() {
        for (a, b) in run_p.output.path(slot).values().iter().zip(run.output.path(src).values())
        {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn controlled_with_zero_control_is_bit_identical() {
    for name in ["ou_meanfield", "bounded_tanh", "common_vol"] {
        let model = build_model(name, &ModelParams::new()).unwrap();
        let g = grid(16);
        let dp = model.meta().dim_noise;
        let inputs = sample_inputs(NoiseKind::Brownian, model.meta().dim_state, 4, g, 41);
        let zero = ControlProcess::zeros(g, dp, 4);
        let plain = simulate_particles(model.as_ref(), inputs.clone()).unwrap();
        let controlled = simulate_controlled(model.as_ref(), inputs, &zero).unwrap();
        for i in 0..4 {
            let same = plain
                .output
                .path(i)
                .values()
                .iter()
                .zip(controlled.output.path(i).values())
                .all(|(a, b)| a.to_bits() == b.to_bits());
            assert!(same, "zero control changed bits for {name}");
        }
    }
}

#[test]
fn constant_control_shifts_linearly() {
    // driftless identity diffusion: X_t = x0 + c t + W_t - W_0 exactly.
    let g = grid(16);
    let model = ZeroDrift::new(1, 1.0).unwrap();
    let inputs = sample_inputs(NoiseKind::Brownian, 1, 3, g, 7);
    let control = ControlProcess::constant(g, 3, &[2.0]);
    let run = simulate_controlled(&model, inputs, &control).unwrap();
    for i in 0..3 {
        for k in 0..g.n_points() {
            let want = 2.0 * g.time(k) + run.inputs.noises[i].point(k)[0]
                - run.inputs.noises[i].point(0)[0];
            assert!((run.output.path(i).point(k)[0] - want).abs() <= 1e-12);
        }
    }
    assert!((control.mean_energy() - 2.0).abs() <= 1e-14);
}

#[test]
fn controlled_gaussian_shift_statistics() {
    // Oracle: mean at T is shifted by c T; standard error sigma-ish / sqrt(N).
    let g = grid(8);
    let model = ZeroDrift::new(1, 1.0).unwrap();
    let n = 4000;
    let inputs = sample_inputs(NoiseKind::Brownian, 1, n, g, 77);
    let control = ControlProcess::constant(g, n, &[1.0]);
    let run = simulate_controlled(&model, inputs, &control).unwrap();
    let last = g.n_points() - 1;
    let mean: f64 =
        (0..n).map(|i| run.output.path(i).point(last)[0]).sum::<f64>() / n as f64;
    let se = (1.0f64 / n as f64).sqrt() * 1.0;
    assert!((mean - 1.0).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn mckean_surrogate_degenerate_and_mean_conservation() {
    let g = grid(8);
    // no diffusion, deterministic start: every member equals the Euler flow.
    let det = OuMeanField::new(1, 1.0, 0.0).unwrap();
    let run = solve_mckean_ensemble(&det, g, &InitLaw::point(&[1.0]), NoiseKind::Brownian, 8, 3, 0)
        .unwrap();
    for i in 1..8 {
        assert_eq!(run.output.path(i).values(), run.output.path(0).values());
    }

    // the antisymmetric kernel conserves the mean of the limit equation.
    let model = OuMeanField::new(1, 1.0, 0.5).unwrap();
    let m = 2000;
    let run =
        solve_mckean_ensemble(&model, g, &InitLaw::point(&[0.7]), NoiseKind::Brownian, m, 5, 1)
            .unwrap();
    let last = g.n_points() - 1;
    let values: Vec<f64> = (0..m).map(|i| run.output.path(i).point(last)[0]).collect();
    let mean = crate::stats::mean(&values);
    let se = crate::stats::stderr_of_mean(&values);
    assert!((mean - 0.7).abs() <= 3.0 * se, "mean {mean} vs 0.7 (se {se})");
}

#[test]
fn marginal_projection() {
    let g = grid(2);
    let single = PathEnsemble::uniform(vec![Path::constant(g, &[3.0, -1.0])]).unwrap();
    let curve = project_marginals(&single);
    for k in 0..3 {
        assert_eq!(curve.cloud(k), &[3.0, -1.0]);
    }

    // two paths crossing at index 1 give a coincident cloud there.
    let a = Path::from_values(g, 1, vec![0.0, 1.0, 2.0]).unwrap();
    let b = Path::from_values(g, 1, vec![2.0, 1.0, 0.0]).unwrap();
    let curve = project_marginals(&PathEnsemble::uniform(vec![a, b]).unwrap());
    assert_eq!(curve.cloud(1), &[1.0, 1.0]);
    assert_eq!(curve.weights(), &[0.5, 0.5]);

    // marginal means equal columnwise path-value means.
    let ens = PathEnsemble::uniform(
        (0..5)
            .map(|i| NoiseSource::new(NoiseKind::Brownian, 2, 13, i).sample(&g))
            .collect(),
    )
    .unwrap();
    let curve = project_marginals(&ens);
    for k in 0..g.n_points() {
        let direct = ens.weighted_mean_at(k);
        let via_curve = curve.mean(k);
        for c in 0..2 {
            assert!((direct[c] - via_curve[c]).abs() <= 1e-15);
        }
    }
}

#[test]
fn step_refinement_gap_shrinks_with_h() {
    // Shared fine noise; mean-square gap between coarsened and fine runs
    // decreases along a dyadic ladder.
    let g = grid(256);
    let model = build_model("ou_meanfield", &ModelParams::new()).unwrap();
    let replicas = 16;
    let mut gaps = vec![0.0; 3];
    for r in 0..replicas {
        let inputs = DrivingInputs::sample(
            g,
            &InitLaw::point(&[0.0]),
            NoiseKind::Brownian,
            1,
            8,
            101,
            r,
        )
        .unwrap();
        let fine = simulate_particles_refined(model.as_ref(), inputs.clone(), 1).unwrap();
        for (slot, c) in [32usize, 16, 8].into_iter().enumerate() {
            let coarse = simulate_particles_refined(model.as_ref(), inputs.clone(), c).unwrap();
            let mut acc = 0.0;
            for i in 0..8 {
                let d = coarse.output.path(i).sub(fine.output.path(i)).unwrap();
                acc += d.sup_norm().powi(2);
            }
            gaps[slot] += acc / 8.0;
        }
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps not monotone: {gaps:?}");
}

#[test]
fn lipschitz_propagation_on_bounded_noise() {
    // Perturbing one input noise by delta moves each output by O(delta).
    let model = build_model("bounded_tanh", &ModelParams::new()).unwrap();
    let g = grid(16);
    let inputs = sample_inputs(NoiseKind::BoundedTanh { radius: 2.0 }, 1, 6, g, 51);
    let base = simulate_particles(model.as_ref(), inputs.clone()).unwrap();
    let mut ratios = Vec::new();
    for &delta in &[1e-2, 1e-3] {
        let mut bumped = inputs.clone();
        for k in 0..g.n_points() {
            bumped.noises[0].point_mut(k)[0] += delta;
        }
        let run = simulate_particles(model.as_ref(), bumped).unwrap();
        let worst = (0..6)
            .map(|i| run.output.path(i).sub(base.output.path(i)).unwrap().sup_norm())
            .fold(0.0, f64::max);
        ratios.push(worst / delta);
    }
    for r in &ratios {
        assert!(*r <= 50.0, "observed Lipschitz ratio {r} too large");
    }
}

#[test]
fn policy_runs_record_their_controls() {
    struct PushUp;
    impl ControlPolicy for PushUp {
        fn control(&self, _: usize, own: &PrefixView, _: &EnsemblePrefix, out: &mut [f64]) {
            out[0] = -own.last()[0].tanh();
        }
    }
    let g = grid(8);
    let model = ZeroDrift::new(1, 1.0).unwrap();
    let inputs = sample_inputs(NoiseKind::Brownian, 1, 3, g, 61);
    let (run, recorded) = simulate_with_policy(&model, inputs.clone(), &PushUp).unwrap();
    // replaying the recorded open-loop values reproduces the run bit for bit.
    let replay = simulate_controlled(&model, inputs, &recorded).unwrap();
    for i in 0..3 {
        let same = run
            .output
            .path(i)
            .values()
            .iter()
            .zip(replay.output.path(i).values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }
    assert!(recorded.mean_energy() > 0.0);
}

#[test]
fn binary_round_trip_and_csv_shape() {
    let g = grid(4);
    let model = build_model("kinetic_langevin", &ModelParams::new()).unwrap();
    let inputs = sample_inputs(NoiseKind::Brownian, 2, 3, g, 71);
    let run = simulate_particles(model.as_ref(), inputs).unwrap();
    let mut buf = Vec::new();
    io::write_binary(&run.output, &mut buf).unwrap();
    let back = io::read_binary(&mut buf.as_slice()).unwrap();
    assert_eq!(back.len(), 3);
    for i in 0..3 {
        let same = back
            .path(i)
            .values()
            .iter()
            .zip(run.output.path(i).values())
            .all(|(a, b)| a.to_bits() == b.to_bits());
        assert!(same);
    }
    let mut csv = Vec::new();
    io::write_csv(&run.output, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "particle,k,t,x0,x1");
    assert_eq!(text.lines().count(), 1 + 3 * g.n_points());
}

#[test]
fn rejects_mismatched_inputs() {
    let g = grid(4);
    let model = ZeroDrift::new(1, 1.0).unwrap();
    let bad = DrivingInputs {
        initials: vec![vec![0.0, 0.0]],
        noises: vec![Path::zeros(g, 1)],
        weights: None,
    };
    assert!(simulate_particles(&model, bad).is_err());
    let wrong_noise = DrivingInputs {
        initials: vec![vec![0.0]],
        noises: vec![Path::zeros(g, 2)],
        weights: None,
    };
    assert!(simulate_particles(&model, wrong_noise).is_err());
}
