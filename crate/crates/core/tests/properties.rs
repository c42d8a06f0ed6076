use std::f64::consts::TAU;

use ergolab::cones::{
    check_joint_cone_with_grid, eigen_analysis, find_noncommuting_hyperbolic, search_cone_certificate, Eigenvalues,
};
use ergolab::lyapunov::nonrandomness_from_words;
use ergolab::stationary::{atom_detect, classify, fourier_spectrum, EmpiricalMeasure, Evidence, Thresholds};
use ergolab::unstable::{affine_parameter, conditional_slice, dimension_estimate, unstable_curve};
use ergolab::{sample_word, DrivingMeasure, IntMat2, MapSpec, RealMat2, ScaledMat2, SineTerm, TorusPoint};
use proptest::prelude::*;

const A: IntMat2 = IntMat2::new(2, 1, 1, 1);
const B: IntMat2 = IntMat2::new(1, 1, 1, 2);

fn shear(m: IntMat2, eps: f64) -> MapSpec {
    let h = vec![SineTerm::new(1, 1.0 / TAU, 0.0), SineTerm::new(2, 0.2 / TAU, 1.1)];
    let v = vec![SineTerm::new(1, 1.0 / TAU, 0.7)];
    MapSpec::shear_pair(m, h, v, eps).unwrap()
}

/// Matrices in SL(2,Z) with entries in `[-6, 6]`.
fn sl2() -> impl Strategy<Value = IntMat2> {
    (-6i64..=6, -6i64..=6, -6i64..=6).prop_filter_map("no integer completion", |(a, b, c)| {
        (a != 0 && (1 + b * c) % a == 0).then(|| IntMat2::new(a, b, c, (1 + b * c) / a))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn maps_reduce_and_conserve(x in 0f64..1.0, y in 0f64..1.0, eps in 0f64..0.1) {
        for m in [A, B] {
            let f = shear(m, eps);
            let q = f.apply(TorusPoint::new(x, y));
            prop_assert!((0.0..1.0).contains(&q.x()) && (0.0..1.0).contains(&q.y()));
            prop_assert!((f.derivative(TorusPoint::new(x, y)).det().abs() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn words_are_pure_functions_of_seed(seed in any::<u64>(), n in 1usize..500) {
        let nu = DrivingMeasure::new(vec![(0, 0.3), (1, 0.7)]).unwrap();
        prop_assert_eq!(sample_word(&nu, n, seed), sample_word(&nu, n, seed));
    }

    #[test]
    fn scaled_products_stay_normalized(word in proptest::collection::vec(0usize..3, 1..400)) {
        let mats = [A.to_real(), B.to_real(), RealMat2::new(0.5, 0.3, -0.2, 1.7)];
        let mut s = ScaledMat2::identity();
        let mut direct_log = 0.0f64;
        let mut direct = RealMat2::IDENTITY;
        for &i in &word {
            s = s.then(&mats[i]);
            let n = s.mat.opnorm();
            prop_assert!((0.5..=2.0).contains(&n));
            direct = mats[i] * direct;
            let d = direct.opnorm();
            direct = direct.scale(1.0 / d);
            direct_log += d.ln();
        }
        prop_assert!((s.log_opnorm() - (s.log_scale + s.mat.opnorm().ln())).abs() <= 1e-12);
        prop_assert!((s.log_opnorm() - direct_log).abs() <= 1e-9 * direct_log.abs().max(1.0));
    }

    #[test]
    fn eigenpairs_are_consistent(m in sl2()) {
        let r = eigen_analysis(&m);
        prop_assert_eq!(r.is_hyperbolic, m.trace().abs() > 2);
        if let (Eigenvalues::Real(l1, l2), Some((t1, t2))) = (r.eigenvalues, r.eigen_angles) {
            let mr = m.to_real();
            for (l, t) in [(l1, t1), (l2, t2)] {
                let v = [t.cos(), t.sin()];
                let w = mr.apply(v);
                prop_assert!((w[0] - l * v[0]).abs() < 1e-10 && (w[1] - l * v[1]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn certificates_survive_refinement(p in sl2(), q in sl2()) {
        let mats = [p.to_real(), q.to_real()];
        if let Some(cert) = search_cone_certificate(&mats) {
            let fine = check_joint_cone_with_grid(&mats, cert.cone_u, cert.cone_s, 100_000);
            prop_assert!(matches!(fine, Ok(c) if c.kappa > 1.0));
        }
    }

    #[test]
    fn noncommuting_words_are_hyperbolic(p in sl2(), q in sl2()) {
        if let Some((u, v)) = find_noncommuting_hyperbolic(&[p, q], 3) {
            let (mu, mv) = (u.evaluate(&[p, q]).unwrap(), v.evaluate(&[p, q]).unwrap());
            prop_assert!(eigen_analysis(&mu).is_hyperbolic && eigen_analysis(&mv).is_hyperbolic);
            prop_assert_ne!(mu * mv, mv * mu);
        }
    }

    #[test]
    fn nonrandomness_ignores_order(seed in 0u64..1000, rot in 0usize..8) {
        let fam = vec![MapSpec::linear(A).unwrap(), MapSpec::linear(B).unwrap()];
        let nu = DrivingMeasure::uniform(&[0, 1]).unwrap();
        let mut words: Vec<_> = (0..8).map(|i| sample_word(&nu, 30, seed * 8 + i)).collect();
        let x = TorusPoint::new(0.3, 0.6);
        let s1 = nonrandomness_from_words(&fam, &words, x, 30).unwrap().score;
        words.rotate_left(rot);
        words.reverse();
        prop_assert_eq!(s1, nonrandomness_from_words(&fam, &words, x, 30).unwrap().score);
    }

    #[test]
    fn atom_masses_partition(pts in proptest::collection::vec((0usize..6, 1usize..300), 1..6), seed in 0u64..100) {
        let sites = [(0.1, 0.1), (0.1004, 0.1002), (0.9999, 0.3), (0.0003, 0.3), (0.6, 0.6), (0.25, 0.9)];
        let mut samples: Vec<TorusPoint> = EmpiricalMeasure::uniform(200, seed).samples().to_vec();
        for (i, n) in pts {
            samples.extend(std::iter::repeat_n(TorusPoint::new(sites[i].0, sites[i].1), n));
        }
        let mu = EmpiricalMeasure::from_points(samples, 0);
        let rep = atom_detect(&mu, 1e-3, 0.01).unwrap();
        prop_assert_eq!(rep.clusters.iter().map(|c| c.count).sum::<usize>() + rep.residual_count, rep.total);
        let mass: f64 = rep.clusters.iter().map(|c| c.mass).sum::<f64>() + rep.residual_mass;
        prop_assert!((mass - 1.0).abs() < 1e-12);
        for (i, c) in rep.clusters.iter().enumerate() {
            for d in &rep.clusters[i + 1..] {
                prop_assert!(c.center.distance(&d.center) >= 1e-3);
            }
        }
    }

    #[test]
    fn point_mass_spectrum_is_one(x in 0f64..1.0, y in 0f64..1.0) {
        let mu = EmpiricalMeasure::from_points(vec![TorusPoint::new(x, y); 1500], 0);
        prop_assert!(fourier_spectrum(&mu, 5).magnitudes.iter().all(|m| m.1 == 1.0));
    }

    #[test]
    fn dimension_under_doubling(seed in 0u64..1000) {
        let cantor = ergolab::unstable::cantor_sample(2000, 10, seed);
        let doubled: Vec<f64> = cantor.iter().map(|c| 2.0 * c).collect();
        let (d1, d2) = (dimension_estimate(&cantor).unwrap().dim, dimension_estimate(&doubled).unwrap().dim);
        prop_assert!((d1 - d2).abs() < 1e-9);
    }

    #[test]
    fn classify_is_pure(u in -1f64..1.0, nr in 0f64..0.2, dim in 0f64..1.5) {
        let est = ergolab::lyapunov::LyapunovEstimate { lambda_u: u.abs(), lambda_s: -u.abs(), stderr_u: 1e-3, n_steps: 1000, mean_log_det: 0.0 };
        let e = Evidence { exponents: Some(est), nonrandomness: Some(nr), dim_u: Some(dim), ..Default::default() };
        prop_assert_eq!(classify(&e, &Thresholds::default()), classify(&e.clone(), &Thresholds::default()));
    }
}

#[test]
fn slice_count_is_monotone_in_tube() {
    let fam = vec![shear(A, 0.03), shear(B, 0.03)];
    let nu = DrivingMeasure::uniform(&[0, 1]).unwrap();
    let w = sample_word(&nu, 100, 1);
    let curve = unstable_curve(&fam, &w, 60, TorusPoint::new(0.4, 0.4), 0.08, 30, 512).unwrap();
    let chart = affine_parameter(&curve, 30).unwrap();
    let mu = EmpiricalMeasure::uniform(300_000, 2);
    let counts: Vec<usize> = [2e-3, 4e-3, 8e-3, 1.6e-2]
        .iter()
        .map(|&t| conditional_slice(&mu, &curve, &chart, t).map(|s| s.count).unwrap_or(0))
        .collect();
    assert!(counts.windows(2).all(|p| p[0] <= p[1]), "{counts:?}");
    assert!(counts[3] > 0);
}
