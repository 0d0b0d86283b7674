//! Knapsack LPs, rounding and the exact oracles on seeded random instances.

mod common;

use common::{expectimax_cancel, expectimax_mab, expectimax_nocancel};
use proptest::prelude::*;
use stocpack::harness::{gen_random_mab, gen_random_stock};
use stocpack::knapsack::{split_early_late, FullPipeline, NoCancelPipeline, PolyNoCancelPipeline, SmallPipeline};
use stocpack::model::{ArmShape, MabInstance, StockInstance};
use stocpack::oracle::{opt_cancel, opt_mab, opt_mab_nonpreempting, opt_nocancel};
use stocpack::rng::seeded;

fn with_budget(inst: &StockInstance, budget: usize) -> StockInstance {
    StockInstance::new(budget, inst.items.clone())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn oracles_match_expectimax(seed in 0u64..10_000, n in 1usize..=3, budget in 1usize..=6, support in 1usize..=3) {
        let inst = gen_random_stock(n, budget, support, seed).unwrap();
        let nc = opt_nocancel(&inst).unwrap().value;
        let c = opt_cancel(&inst).unwrap().value;
        prop_assert!((nc - expectimax_nocancel(&inst)).abs() < 1e-9);
        prop_assert!((c - expectimax_cancel(&inst)).abs() < 1e-9);
        prop_assert!(c >= nc - 1e-12);
    }

    #[test]
    fn mab_oracles_match_expectimax(seed in 0u64..10_000, arms in 1usize..=2, states in 1usize..=4, budget in 1usize..=5) {
        let inst = gen_random_mab(arms, states, budget, seed, ArmShape::Tree).unwrap();
        let opt = opt_mab(&inst).unwrap().value;
        prop_assert!((opt - expectimax_mab(&inst)).abs() < 1e-9);
        let serial = opt_mab_nonpreempting(&inst).unwrap().value;
        prop_assert!(serial <= opt + 1e-12);
        if arms == 1 {
            prop_assert!((serial - opt).abs() < 1e-12);
        }
        let more = MabInstance { budget: budget + 1, ..inst.clone() };
        prop_assert!(opt_mab(&more).unwrap().value >= opt - 1e-12);
    }

    #[test]
    fn oracle_values_grow_with_budget(seed in 0u64..10_000, n in 1usize..=4, budget in 1usize..=7) {
        let inst = gen_random_stock(n, budget, 2, seed).unwrap();
        let bigger = with_budget(&inst, budget + 1);
        prop_assert!(opt_nocancel(&bigger).unwrap().value >= opt_nocancel(&inst).unwrap().value - 1e-12);
        prop_assert!(opt_cancel(&bigger).unwrap().value >= opt_cancel(&inst).unwrap().value - 1e-12);
    }

    #[test]
    fn lps_dominate_oracles(seed in 0u64..10_000, n in 1usize..=4, budget in 1usize..=8, support in 1usize..=3) {
        let inst = gen_random_stock(n, budget, support, seed).unwrap();
        let nc = NoCancelPipeline::new(&inst).unwrap();
        prop_assert!(nc.lp_opt() >= opt_nocancel(&inst).unwrap().value - 1e-6);
        let (early, late) = split_early_late(&inst);
        let small = SmallPipeline::new(&early, false).unwrap();
        prop_assert!(small.lp_opt() >= opt_cancel(&early).unwrap().value - 1e-6);
        prop_assert!(NoCancelPipeline::new(&late).unwrap().lp_opt() >= opt_nocancel(&late).unwrap().value - 1e-6);
    }

    #[test]
    fn split_halves_cover_the_optimum(seed in 0u64..10_000, budget in 2usize..=7) {
        let inst = gen_random_stock(3, budget, 3, seed).unwrap();
        let (early, late) = split_early_late(&inst);
        let whole = opt_cancel(&inst).unwrap().value;
        let parts = opt_cancel(&early).unwrap().value + opt_cancel(&late).unwrap().value;
        prop_assert!(parts >= whole - 1e-9, "{parts} < {whole}");
    }

    #[test]
    fn cancelling_never_helps_late_rewards(seed in 0u64..10_000, n in 1usize..=3, budget in 2usize..=8) {
        let late = split_early_late(&gen_random_stock(n, budget, 3, seed).unwrap()).1;
        let a = opt_cancel(&late).unwrap().value;
        let b = opt_nocancel(&late).unwrap().value;
        prop_assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }

    #[test]
    fn stopping_law_is_exact(seed in 0u64..10_000, n in 1usize..=4, budget in 2usize..=12, quantized in any::<bool>()) {
        let early = split_early_late(&gen_random_stock(n, budget, 3, seed).unwrap()).0;
        let p = SmallPipeline::new(&early, quantized).unwrap();
        prop_assert!(p.stopping_law_error() <= 1e-9);
    }

    #[test]
    fn credited_work_fits_the_budget(seed in 0u64..10_000, n in 1usize..=5, budget in 1usize..=10) {
        let inst = gen_random_stock(n, budget, 3, seed).unwrap();
        let nc = NoCancelPipeline::new(&inst).unwrap();
        let poly = PolyNoCancelPipeline::new(&inst).unwrap();
        let full = FullPipeline::new(&inst, false).unwrap();
        let mut rng = seeded(seed);
        for _ in 0..200 {
            for r in [nc.run(&mut rng), poly.run(&mut rng), full.run(&mut rng)] {
                prop_assert!(r.credited_units() <= budget);
                prop_assert!(r.reward >= 0.0);
            }
        }
    }
}

/// The coarse LP keeps a constant fraction of the fine LP on the sweep used for acceptance.
#[test]
fn coarse_lp_keeps_half_of_fine_lp() {
    let mut worst = f64::INFINITY;
    for seed in 0..50 {
        let inst = gen_random_stock(1 + (seed as usize % 5), 2 + (seed as usize % 9), 3, seed).unwrap();
        let fine = NoCancelPipeline::new(&inst).unwrap().lp_opt();
        let coarse = PolyNoCancelPipeline::new(&inst).unwrap().lp_opt();
        if fine > 1e-9 {
            worst = worst.min(coarse / fine);
        }
    }
    assert!(worst >= 0.5 - 1e-9, "worst coarse/fine ratio {worst}");
}
