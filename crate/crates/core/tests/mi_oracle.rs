use nalgebra::ComplexField;
use rand::Rng;
use twrelay_core::*;

/// Interference plus forwarded relay noise, summed over destinations,
/// evaluated from the matrix form.
fn objective(b: &CMatrix, red: &ReducedChannels, powers: &[f64], pairing: &PairingMap, sigma2: f64) -> f64 {
    let k_n = red.num_sources();
    let mut total = 0.0;
    for k in 0..k_n {
        let row = red.effective(k).transpose() * b;
        for j in (0..k_n).filter(|&j| j != k && j != pairing.partner(k)) {
            total += powers[j] * (&row * red.effective(j))[(0, 0)].modulus_squared();
        }
        total += sigma2 * row.norm_squared();
    }
    total
}

fn random_vec(n: usize, rng: &mut impl Rng) -> CVector {
    CVector::from_fn(n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
}

#[test]
fn closed_form_beats_null_space_perturbations() {
    for seed in 0..20 {
        let mut rng = trial_rng(seed, 0);
        let set = draw_channels(4, 8, 0.0, &mut rng).unwrap().with_powers(vec![10.0; 4]).unwrap();
        let red = reduce(&set).unwrap();
        let beta = [1.0, 0.7, 0.3, 1.2];
        let cs = build_couplings(&red, &set.powers, &set.pairing, 1.0, &beta).unwrap();
        let sol = solve_mi(&cs).unwrap();
        let g = cs.g.map(C64::from);
        assert!((cs.c.adjoint() * &sol.b - &g).norm() < 1e-8);

        let b0 = unvec(&sol.b, red.dim()).unwrap();
        let best = objective(&b0, &red, &set.powers, &set.pairing, 1.0);
        let quad = (sol.b.adjoint() * &cs.phi * &sol.b)[(0, 0)].re;
        assert!((best - quad).abs() < 1e-10 * best);

        let n = sol.b.len();
        let pinv = cs.c.clone().pseudo_inverse(1e-12).unwrap();
        let projector = CMatrix::identity(n, n) - &cs.c * pinv;
        for i in 0..100 {
            let scale = 10f64.powi(i % 5 - 3);
            let step = &projector * random_vec(n, &mut rng) * C64::from(scale);
            let b = &sol.b + step;
            assert!((cs.c.adjoint() * &b - &g).norm() < 1e-8);
            let value = objective(&unvec(&b, red.dim()).unwrap(), &red, &set.powers, &set.pairing, 1.0);
            assert!(value >= best * (1.0 - 1e-12), "{value} < {best}");
        }

        let grad = &cs.phi * &sol.b;
        assert!((&projector * &grad).norm() < 1e-8 * grad.norm());
    }
}

#[test]
fn zero_noise_uses_the_ridge_and_still_meets_constraints() {
    let set = draw_channels(4, 8, 0.0, &mut trial_rng(4, 0)).unwrap();
    let red = reduce(&set).unwrap();
    let cs = build_couplings(&red, &set.powers, &set.pairing, 0.0, &[1.0; 4]).unwrap();
    let sol = solve_mi(&cs).unwrap();
    assert!(sol.regularized);
    assert!((cs.c.adjoint() * &sol.b - cs.g.map(C64::from)).norm() < 1e-6);
}

#[test]
fn power_scaling_matches_closed_form() {
    for seed in 0..50 {
        let set = draw_channels(4, 8, 0.0, &mut trial_rng(seed, 0)).unwrap().with_powers(vec![10.0; 4]).unwrap();
        let red = reduce(&set).unwrap();
        let target = 10.0;
        let bf = mi_beamformer(&red, &set.pairing, &set.powers, 1.0, target, &[1.0; 4], &MiOptions::default()).unwrap();
        let unit = relay_power(&(&bf.b * C64::from(1.0 / bf.alpha)), &red, &set.powers, 1.0);
        assert!((bf.alpha - (target / unit).sqrt()).abs() <= 1e-6);
        let achieved = relay_power(&bf.b, &red, &set.powers, 1.0);
        assert!((achieved - target).abs() <= 1e-6 * target);
    }
}
