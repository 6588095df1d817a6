use brainsync::stats::{rank_sum, spearman, wilcoxon_signed_rank};
use brainsync::Error;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Average ranks by counting: rank = 1 + #smaller + (#equal - 1) / 2.
fn oracle_ranks(v: &[f64]) -> Vec<f64> {
    v.iter()
        .map(|x| {
            let less = v.iter().filter(|y| *y < x).count() as f64;
            let equal = v.iter().filter(|y| *y == x).count() as f64;
            1.0 + less + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Tails of W+ by enumerating every sign pattern.
fn enumerate_tails(diffs: &[f64]) -> (f64, f64, f64) {
    let nz: Vec<f64> = diffs.iter().copied().filter(|d| *d != 0.0).collect();
    let ranks = oracle_ranks(&nz.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let observed: f64 = nz.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let n = nz.len();
    let (mut ge, mut le) = (0u64, 0u64);
    for mask in 0u64..(1 << n) {
        let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
        if w >= observed - 1e-9 {
            ge += 1;
        }
        if w <= observed + 1e-9 {
            le += 1;
        }
    }
    let total = (1u64 << n) as f64;
    (observed, ge as f64 / total, le as f64 / total)
}

fn oracle_spearman(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (oracle_ranks(x), oracle_ranks(y));
    let n = x.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let sxy: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Integer-valued differences produce ties and zeros often.
fn random_diffs(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let d: Vec<f64> = (0..n).map(|_| rng.random_range(-6i32..=6) as f64 * 0.5).collect();
        if d.iter().any(|v| *v != 0.0) {
            return d;
        }
    }
}

#[test]
fn exact_p_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..100 {
        let n = 1 + case % 10;
        let diffs = random_diffs(&mut rng, n);
        let t = wilcoxon_signed_rank(&diffs).unwrap();
        let (w, ge, le) = enumerate_tails(&diffs);
        assert!(t.exact);
        assert_eq!(t.w_plus, w, "{diffs:?}");
        assert_eq!(t.p_greater, ge, "{diffs:?}");
        assert_eq!(t.p_less, le, "{diffs:?}");
        assert_eq!(t.p_one_sided, ge.min(le));
        assert_eq!(t.p_two_sided, (2.0 * ge.min(le)).min(1.0));
    }
}

#[test]
fn exact_and_normal_agree_in_the_overlap_regime() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..200 {
        let n = rng.random_range(10..=12);
        let diffs: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.5)).collect();
        let t = wilcoxon_signed_rank(&diffs).unwrap();
        assert!(t.exact);
        assert!((t.p_one_sided - t.p_normal_one_sided).abs() <= 0.02, "{diffs:?}: {t:?}");
    }
}

#[test]
fn spearman_matches_rank_then_pearson() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..200 {
        let mut x: Vec<f64> = (1..=8).map(f64::from).collect();
        let mut y = x.clone();
        x.shuffle(&mut rng);
        y.shuffle(&mut rng);
        let t = spearman(&x, &y).unwrap();
        assert!((t.rs - oracle_spearman(&x, &y)).abs() < 1e-12);
        assert!((0.0..=1.0).contains(&t.p_two_sided));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..200 {
        let x: Vec<f64> = (0..12).map(|_| rng.random_range(1..=5) as f64).collect();
        let y: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
        match spearman(&x, &y) {
            Ok(t) => assert!((t.rs - oracle_spearman(&x, &y)).abs() < 1e-12),
            Err(e) => assert!(matches!(e, Error::DegenerateInput(_))),
        }
    }
}

#[test]
fn monotone_data_gives_unit_correlation() {
    let x: Vec<f64> = (0..20).map(|i| i as f64 * 0.3).collect();
    let up: Vec<f64> = x.iter().map(|v| v.exp()).collect();
    let down: Vec<f64> = x.iter().map(|v| -v * v * v).collect();
    assert_eq!(spearman(&x, &up).unwrap().rs, 1.0);
    assert_eq!(spearman(&x, &down).unwrap().rs, -1.0);
    assert_eq!(spearman(&x, &up).unwrap().p_two_sided, 0.0);
}

#[test]
fn rank_sum_exact_matches_enumeration() {
    // Enumerate every split of the pooled sample into groups of the same sizes.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n1 = rng.random_range(2..=5);
        let n2 = rng.random_range(2..=5);
        let x: Vec<f64> = (0..n1).map(|_| rng.random_range(0..6) as f64).collect();
        let y: Vec<f64> = (0..n2).map(|_| rng.random_range(0..6) as f64).collect();
        let Ok(t) = rank_sum(&x, &y) else { continue };
        let pooled: Vec<f64> = x.iter().chain(&y).copied().collect();
        let ranks = oracle_ranks(&pooled);
        let observed: f64 = ranks[..n1].iter().sum();
        let n = n1 + n2;
        let (mut ge, mut le, mut total) = (0u64, 0u64, 0u64);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != n1 {
                continue;
            }
            total += 1;
            let r: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            if r >= observed - 1e-9 {
                ge += 1;
            }
            if r <= observed + 1e-9 {
                le += 1;
            }
        }
        assert_eq!(t.p_greater, ge as f64 / total as f64);
        assert_eq!(t.p_less, le as f64 / total as f64);
    }
}

proptest! {
    #[test]
    fn signed_rank_identity_and_bounds(diffs in prop::collection::vec(-5i32..=5, 1..30)) {
        let d: Vec<f64> = diffs.iter().map(|&v| v as f64).collect();
        match wilcoxon_signed_rank(&d) {
            Ok(t) => {
                let n = t.n as f64;
                prop_assert_eq!(t.w_plus + t.w_minus, n * (n + 1.0) / 2.0);
                prop_assert_eq!(t.n + t.n_zero, d.len());
                for p in [t.p_greater, t.p_less, t.p_one_sided, t.p_two_sided, t.p_normal_one_sided] {
                    prop_assert!((0.0..=1.0).contains(&p));
                }
                if t.exact {
                    prop_assert_eq!(t.p_two_sided, (2.0 * t.p_greater.min(t.p_less)).min(1.0));
                }
            }
            Err(e) => {
                prop_assert!(d.iter().all(|v| *v == 0.0));
                prop_assert!(matches!(e, Error::DegenerateInput(_)));
            }
        }
    }

    #[test]
    fn spearman_is_symmetric_and_rank_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..25),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        if let Ok(t) = spearman(&x, &y) {
            prop_assert_eq!(spearman(&y, &x).unwrap().rs, t.rs);
            let fx: Vec<f64> = x.iter().map(|v| v.powi(3) + 2.0 * v).collect();
            let gy: Vec<f64> = y.iter().map(|v| (v / 50.0).exp()).collect();
            prop_assert_eq!(spearman(&fx, &y).unwrap().rs, t.rs);
            prop_assert_eq!(spearman(&x, &gy).unwrap().rs, t.rs);
            prop_assert!((0.0..=1.0).contains(&t.p_two_sided));
        }
    }
}
