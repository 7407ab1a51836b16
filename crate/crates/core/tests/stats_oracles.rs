use dnsc_core::eval::special::f_survival;
use dnsc_core::eval::{anova_two_group, spearman_rho};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

#[test]
fn f_survival_matches_statrs() {
    for &d1 in &[1.0, 2.0, 3.0, 7.0] {
        for &d2 in &[2.0, 10.0, 58.0, 400.0] {
            let dist = FisherSnedecor::new(d1, d2).unwrap();
            for &f in &[0.01, 0.3, 1.0, 2.5, 6.0, 20.0] {
                let want = dist.sf(f);
                let got = f_survival(f, d1, d2);
                assert!((got - want).abs() < 1e-9, "F({d1},{d2}) at {f}: {got} vs {want}");
            }
        }
    }
}

// Pearson correlation of independently computed average ranks.
fn oracle_rho(x: &[f64], y: &[f64]) -> f64 {
    let ranks = |v: &[f64]| -> Vec<f64> {
        v.iter()
            .map(|a| {
                let below = v.iter().filter(|b| *b < a).count() as f64;
                let equal = v.iter().filter(|b| *b == a).count() as f64;
                below + (equal + 1.0) / 2.0
            })
            .collect()
    };
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

proptest! {
    #[test]
    fn spearman_matches_rank_pearson(pairs in prop::collection::vec((0u8..6, 0u8..6), 3..25)) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
        let want = oracle_rho(&x, &y);
        match spearman_rho(&x, &y) {
            Ok(got) => prop_assert!((got - want).abs() < 1e-12, "{got} vs {want}"),
            Err(_) => prop_assert!(!want.is_finite()),
        }
    }

    #[test]
    fn two_group_anova_is_symmetric(
        a in prop::collection::vec(1.0f64..5.0, 3..30),
        b in prop::collection::vec(1.0f64..5.0, 3..30),
    ) {
        let ab = anova_two_group(&a, &b).unwrap();
        let ba = anova_two_group(&b, &a).unwrap();
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&ab.p_value));
    }
}
