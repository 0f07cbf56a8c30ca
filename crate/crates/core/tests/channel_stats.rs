use twrelay_core::*;

const DRAWS: u64 = 100_000;

#[test]
fn entries_have_unit_power() {
    let mut rng = trial_rng(21, 0);
    let mut total = 0.0;
    for _ in 0..DRAWS {
        let set = draw_channels(2, 2, 0.0, &mut rng).unwrap();
        total += set.uplink.norm_squared() / 4.0;
    }
    assert!((total / DRAWS as f64 - 1.0).abs() < 0.02);
}

fn mean_cross(rho: f64) -> C64 {
    let mut rng = trial_rng(22, 0);
    let mut acc = C64::new(0.0, 0.0);
    for _ in 0..DRAWS {
        let set = draw_channels(2, 4, rho, &mut rng).unwrap();
        for m in 0..4 {
            acc += set.uplink[(m, 0)].conj() * set.uplink[(m, 1)];
        }
    }
    acc / (4 * DRAWS) as f64
}

#[test]
fn independent_sources_are_uncorrelated() {
    let c = mean_cross(0.0);
    assert!(c.re.abs() < 0.05 && c.im.abs() < 0.05, "{c}");
}

#[test]
fn correlation_matches_sqrt_rho() {
    let c = mean_cross(0.5);
    assert!((c.re - 0.5f64.sqrt()).abs() < 0.02, "{c}");
    assert!(c.im.abs() < 0.02, "{c}");
}

#[test]
fn draws_are_reproducible() {
    let a = draw_channels(4, 8, 0.3, &mut trial_rng(5, 9)).unwrap();
    let b = draw_channels(4, 8, 0.3, &mut trial_rng(5, 9)).unwrap();
    assert_eq!(a, b);
}
