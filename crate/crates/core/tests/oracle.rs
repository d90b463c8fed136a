use ep_moments::linalg::{self, c, CMatrix, C64};
use ep_moments::model::QuadraticSystem;
use ep_moments::moments::{first_moment_matrix, moment_power, reduce, EvolutionMatrix, MomentIndex};
use ep_moments::oracle::{
    build_space, coherent_state, sampled_moments, step_halving_deviation, verify_matrix, verify_moments, SimConfig,
};
use ep_moments::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn pair() -> QuadraticSystem {
    QuadraticSystem::incoherent_pair(1.0, 1.0, 0.8)
}

fn pair_start(cutoff: usize) -> ep_moments::oracle::DensityMatrix {
    coherent_state(&[c(0.6, 0.0), c(0.0, 0.3)], &build_space(2, cutoff).unwrap()).unwrap()
}

fn orders_up_to_three(sys: &QuadraticSystem) -> Vec<EvolutionMatrix> {
    let m1 = first_moment_matrix(sys, false).unwrap();
    let m2 = reduce(&moment_power(&m1, 2).unwrap()).unwrap();
    let m3 = reduce(&moment_power(&m1, 3).unwrap()).unwrap();
    vec![m1, m2, m3]
}

#[test]
fn squeezed_mode_first_moments_follow_the_interleaved_matrix() {
    let chi = linalg::from_rows(&[vec![c(0.3, 0.0)]]).unwrap();
    let sys = QuadraticSystem::new(vec![0.2], linalg::zeros(1, 1), chi, linalg::from_real_rows(&[&[1.0]])).unwrap();
    let m = first_moment_matrix(&sys, true).unwrap();
    let rho0 = coherent_state(&[c(0.3, 0.2)], &build_space(1, 12).unwrap()).unwrap();
    let report = verify_moments(&sys, &rho0, &m, &SimConfig::new(12, 1e-3, 2.0).with_sample_every(10), 1e-6).unwrap();
    assert!(report.pass, "max deviation {:e}", report.max_dev());
}

#[test]
fn squeezing_without_interleaving_is_rejected() {
    let chi = linalg::from_rows(&[vec![c(0.3, 0.0)]]).unwrap();
    let sys = QuadraticSystem::new(vec![0.0], linalg::zeros(1, 1), chi, linalg::from_real_rows(&[&[0.5]])).unwrap();
    assert!(matches!(first_moment_matrix(&sys, false), Err(Error::InvalidArgument(_))));
}

#[test]
fn random_u1_systems_match_their_moment_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for draw in 0..20 {
        let b = linalg::from_rows(&[
            vec![c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))],
            vec![c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)), c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))],
        ])
        .unwrap();
        let gamma = linalg::scale(&(&b * linalg::adjoint(&b)), c(0.4, 0.0));
        let g = c(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5));
        let coherent = linalg::from_rows(&[vec![c(0.0, 0.0), g], vec![g.conj(), c(0.0, 0.0)]]).unwrap();
        let detunings = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let sys = QuadraticSystem::new(detunings, coherent, linalg::zeros(2, 2), gamma).unwrap();
        let alphas: Vec<C64> = (0..2)
            .map(|_| C64::from_polar(rng.gen_range(0.0..0.6), rng.gen_range(0.0..std::f64::consts::TAU)))
            .collect();
        let rho0 = coherent_state(&alphas, &build_space(2, 8).unwrap()).unwrap();

        let bases = orders_up_to_three(&sys);
        let labels: Vec<MomentIndex> = bases.iter().flat_map(|m| m.basis().entries().to_vec()).collect();
        let config = SimConfig::new(8, 2e-3, 1.5).with_sample_every(25);
        let (times, values) = sampled_moments(&sys, &rho0, &config, &labels).unwrap();
        let mut offset = 0;
        for m in &bases {
            let k = m.dim();
            let oracle: Vec<Vec<C64>> = values.iter().map(|r| r[offset..offset + k].to_vec()).collect();
            let predicted = ep_moments::moments::propagate_matrix(m.matrix(), &oracle[0], &times).unwrap();
            for (o, p) in oracle.iter().zip(&predicted) {
                for (x, y) in o.iter().zip(p) {
                    assert!((x - y).norm() <= 1e-5, "draw {draw}, basis {:?}: {:e}", m.basis().labels(), (x - y).norm());
                }
            }
            offset += k;
        }
    }
}

#[test]
fn doubling_the_cutoff_leaves_moments_unchanged() {
    let labels: Vec<MomentIndex> = ["a1", "a2", "a1 a1", "a1 a2", "a2 a2", "a1† a1"]
        .iter()
        .map(|l| l.parse().unwrap())
        .collect();
    // At cutoff 8 the amplitude 0.6 still truncates ⟨a1 a1⟩ at the 4e-8 level
    // (the missing ⟨7|a²|9⟩ coherence), so the check starts from cutoff 10.
    let run = |cutoff| {
        let config = SimConfig::new(cutoff, 1e-3, 0.5).with_sample_every(50);
        sampled_moments(&pair(), &pair_start(cutoff), &config, &labels).unwrap().1
    };
    let (low, high) = (run(10), run(20));
    let d = low
        .iter()
        .zip(&high)
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).norm()))
        .fold(0.0, f64::max);
    assert!(d <= 1e-8, "cutoff 10 vs 20 differ by {d:e}");
}

#[test]
fn halving_the_step_leaves_moments_unchanged() {
    let labels: Vec<MomentIndex> = ["a1", "a1 a2", "a1 a1 a2"].iter().map(|l| l.parse().unwrap()).collect();
    let config = SimConfig::new(8, 1e-3, 1.0).with_sample_every(100);
    let d = step_halving_deviation(&pair(), &pair_start(8), &config, &labels).unwrap();
    assert!(d <= 1e-8, "step halving changed moments by {d:e}");
}

#[test]
fn corrupted_matrix_fails_verification() {
    let m = &orders_up_to_three(&pair())[1];
    let mut bad: CMatrix = m.matrix().clone();
    bad[(0, 1)] += c(0.05, 0.0);
    let config = SimConfig::new(8, 1e-3, 1.0).with_sample_every(20);
    let good = verify_moments(&pair(), &pair_start(8), m, &config, 1e-5).unwrap();
    assert!(good.pass);
    let report = verify_matrix(&pair(), &pair_start(8), &bad, m.basis().entries(), &config, 1e-5).unwrap();
    assert!(!report.pass);
    assert!(report.max_dev() > 1e-3);
}

#[test]
fn verification_report_serializes() {
    let m = first_moment_matrix(&pair(), false).unwrap();
    let config = SimConfig::new(8, 1e-2, 0.5).with_sample_every(10);
    let report = verify_moments(&pair(), &pair_start(8), &m, &config, 1e-5).unwrap();
    let back = ep_moments::oracle::VerificationReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back.per_moment_max_dev, report.per_moment_max_dev);
    assert_eq!(back.pass, report.pass);
    let csv = report.oracle_csv();
    assert!(csv.starts_with("t,re⟨a1⟩,im⟨a1⟩,re⟨a2⟩,im⟨a2⟩\n"));
    assert_eq!(csv.lines().count(), 1 + report.times.len());
}
