use chrono::{Days, NaiveDate};
use proptest::prelude::*;

use twostage::data_model::{
    CongestionClass, CongestionLabel, EdgeId, EtaLabel, SuperSegmentId, TimeContext, NUM_CLASSES, SLOTS_PER_DAY,
};
use twostage::encoding::{
    fit_cc_encoding, fit_eta_encoding, smoothed_te, CcObservation, Conditioning, EtaObservation,
};
use twostage::gbdt::{
    deserialize, masked_loss, serialize, train, train_logged, FeatureMatrix, GbdtParams, Objective, Targets, MISSING,
};
use twostage::metrics::{core_metric, cyclic_distance, extended_metric};

fn start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2023, 2, 6).expect("valid date")
}

prop_compose! {
    fn cc_obs()(day in 0u64..6, slot in 0u16..4, edge in 0u64..2, class in proptest::option::weighted(0.8, 0usize..3))
        -> CcObservation {
        let date = start() + Days::new(day);
        CcObservation {
            date,
            context: TimeContext::from_date(date, slot).unwrap(),
            label: CongestionLabel { edge: EdgeId(edge), class: class.and_then(CongestionClass::from_index) },
        }
    }
}

prop_compose! {
    fn eta_obs()(day in 0u64..6, slot in 0u16..96, ss in 0u64..2, eta in 10.0f64..2000.0) -> EtaObservation {
        let date = start() + Days::new(day);
        EtaObservation {
            date,
            context: TimeContext::from_date(date, slot).unwrap(),
            label: EtaLabel { supersegment: SuperSegmentId(ss), eta },
        }
    }
}

fn regression_data(rows: usize, seed: u64) -> (FeatureMatrix, Vec<f64>) {
    let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1);
    let mut next = || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut x = Vec::with_capacity(rows * 3);
    let mut y = Vec::with_capacity(rows);
    for _ in 0..rows {
        let r = [next(), next(), next()];
        y.push(4.0 * r[0] - 2.0 * r[1] * r[2] + 0.3 * next());
        x.extend(r.map(|v| if v < 0.05 { MISSING } else { v }));
    }
    (FeatureMatrix::new(vec!["a".into(), "b".into(), "c".into()], x).unwrap(), y)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn encoding_lies_between_key_fraction_and_prior(
        obs in proptest::collection::vec(cc_obs(), 1..40),
        w in 0.5f64..40.0,
        probe in 0usize..40,
    ) {
        prop_assume!(obs.iter().any(|o| o.label.class.is_some()));
        let table = fit_cc_encoding(&obs, w).unwrap();
        let at = obs[probe % obs.len()];
        let prior = table.global_means(None);
        for cond in Conditioning::ALL {
            let key = cond.key(&at.context);
            let te = table.lookup(at.label.edge, key, None);
            let counts = table.key_counts(at.label.edge, key, None);
            let n: u64 = counts.iter().sum();
            prop_assert!((te.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..NUM_CLASSES {
                let local = if n == 0 { prior[k] } else { counts[k] as f64 / n as f64 };
                let (lo, hi) = (local.min(prior[k]), local.max(prior[k]));
                prop_assert!(te[k] >= lo - 1e-12 && te[k] <= hi + 1e-12);
            }
        }
    }

    #[test]
    fn eta_leave_one_day_out_equals_refit(
        obs in proptest::collection::vec(eta_obs(), 2..40),
        day in 0u64..6,
        probe in 0usize..40,
    ) {
        let d = start() + Days::new(day);
        let rest: Vec<EtaObservation> = obs.iter().copied().filter(|o| o.date != d).collect();
        prop_assume!(!rest.is_empty());
        let full = fit_eta_encoding(&obs).unwrap();
        let refit = fit_eta_encoding(&rest).unwrap();
        let at = obs[probe % obs.len()];
        for cond in Conditioning::ALL {
            let key = cond.key(&at.context);
            prop_assert_eq!(
                full.lookup(at.label.supersegment, key, Some(d)).to_bits(),
                refit.lookup(at.label.supersegment, key, None).to_bits()
            );
            prop_assert_eq!(
                full.smoothed_lookup(at.label.supersegment, cond, &at.context, Some(d)).to_bits(),
                refit.smoothed_lookup(at.label.supersegment, cond, &at.context, None).to_bits()
            );
        }
    }

    #[test]
    fn smoothing_is_linear_and_keeps_the_mean(
        x in proptest::collection::vec(-1e3f64..1e3, SLOTS_PER_DAY),
        y in proptest::collection::vec(-1e3f64..1e3, SLOTS_PER_DAY),
        a in -3.0f64..3.0,
    ) {
        let mix: Vec<f64> = x.iter().zip(&y).map(|(x, y)| a * x + y).collect();
        let (sx, sy, sm) = (smoothed_te(&x).unwrap(), smoothed_te(&y).unwrap(), smoothed_te(&mix).unwrap());
        for t in 0..SLOTS_PER_DAY {
            prop_assert!((sm[t] - (a * sx[t] + sy[t])).abs() < 1e-9);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!((mean(&sx) - mean(&x)).abs() < 1e-10);
    }

    #[test]
    fn ignored_rows_do_not_move_the_loss(
        probs in proptest::collection::vec(0.01f64..1.0, 30),
        noise in proptest::collection::vec(0.0f64..100.0, 30),
        labels in proptest::collection::vec(proptest::option::of(0usize..3), 10),
    ) {
        prop_assume!(labels.iter().any(Option::is_some));
        let w = [0.7, 1.3, 2.1];
        let mut perturbed = probs.clone();
        for (i, l) in labels.iter().enumerate() {
            if l.is_none() {
                perturbed[i * 3..i * 3 + 3].copy_from_slice(&noise[i * 3..i * 3 + 3]);
            }
        }
        prop_assert_eq!(
            masked_loss(&probs, &labels, &w, 1e-9).unwrap().to_bits(),
            masked_loss(&perturbed, &labels, &w, 1e-9).unwrap().to_bits()
        );
    }

    #[test]
    fn core_metric_ignores_row_order(
        probs in proptest::collection::vec(0.01f64..1.0, 24),
        labels in proptest::collection::vec(0usize..3, 8),
        shift in 1usize..8,
    ) {
        let labels: Vec<Option<usize>> = labels.into_iter().map(Some).collect();
        let w = [1.0, 2.0, 0.5];
        let mut rp = probs.clone();
        let mut rl = labels.clone();
        rp.rotate_left(3 * shift);
        rl.rotate_left(shift);
        let a = core_metric(&probs, &labels, &w, 1e-9).unwrap();
        let b = core_metric(&rp, &rl, &w, 1e-9).unwrap();
        prop_assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn mae_is_symmetric_and_shift_invariant(
        p in proptest::collection::vec(-1e3f64..1e3, 1..30),
        shift in -50.0f64..50.0,
    ) {
        let t: Vec<f64> = p.iter().rev().copied().collect();
        let a = extended_metric(&p, &t).unwrap();
        prop_assert_eq!(a, extended_metric(&t, &p).unwrap());
        let ps: Vec<f64> = p.iter().map(|v| v + shift).collect();
        let ts: Vec<f64> = t.iter().map(|v| v + shift).collect();
        prop_assert!((extended_metric(&ps, &ts).unwrap() - a).abs() < 1e-9);
    }

    #[test]
    fn cyclic_distance_is_a_bounded_symmetric_metric(a in -500i64..500, b in -500i64..500, period in 1i64..200) {
        let d = cyclic_distance(a, b, period);
        prop_assert_eq!(d, cyclic_distance(b, a, period));
        prop_assert!(d >= 0 && 2 * d <= period);
        prop_assert_eq!(cyclic_distance(a + period, b, period), d);
        prop_assert_eq!(d == 0, (a - b).rem_euclid(period) == 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn squared_error_training_loss_never_increases(seed in 0u64..1000, depth in 1usize..6, lr in 0.05f64..1.0) {
        let (x, y) = regression_data(300, seed);
        let params = GbdtParams { max_depth: depth, learning_rate: lr, num_rounds: 40, min_samples_leaf: 5, ..GbdtParams::default() };
        let (_, log) = train_logged(&x, &Targets::Real(y), &Objective::squared_error(), &params, None).unwrap();
        for w in log.train_loss.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
    }

    #[test]
    fn fixed_seed_gives_identical_bytes(seed in 0u64..1000) {
        let (x, y) = regression_data(200, seed);
        let params = GbdtParams { num_rounds: 25, seed, ..GbdtParams::preset_a() };
        let a = train(&x, &Targets::Real(y.clone()), &Objective::absolute_error(), &params, None).unwrap();
        let b = train(&x, &Targets::Real(y), &Objective::absolute_error(), &params, None).unwrap();
        let bytes = serialize(&a);
        prop_assert_eq!(&bytes, &serialize(&b));
        prop_assert_eq!(serialize(&deserialize(&bytes).unwrap()), bytes);
    }

    #[test]
    fn every_row_with_missing_values_gets_a_finite_prediction(
        seed in 0u64..1000,
        mask in proptest::collection::vec(any::<bool>(), 3),
    ) {
        let (x, y) = regression_data(200, seed);
        let model = train(&x, &Targets::Real(y), &Objective::squared_error(),
            &GbdtParams { num_rounds: 20, ..GbdtParams::preset_b() }, None).unwrap();
        let row: Vec<f64> = mask.iter().enumerate().map(|(j, m)| if *m { MISSING } else { 0.3 * j as f64 }).collect();
        let p = model.predict(&FeatureMatrix::new(x.column_names().to_vec(), row).unwrap()).unwrap();
        prop_assert!(p[0].is_finite());
    }

    #[test]
    fn softmax_rows_are_distributions(seed in 0u64..1000) {
        let (x, y) = regression_data(240, seed);
        let classes: Vec<Option<usize>> = y.iter().map(|v| Some(((v + 2.0).max(0.0) as usize).min(2))).collect();
        prop_assume!((0..3).all(|c| classes.contains(&Some(c))));
        let objective = Objective::masked_softmax(vec![1.0, 1.5, 0.8], 1e-9).unwrap();
        let model = train(&x, &Targets::Classes(classes), &objective,
            &GbdtParams { num_rounds: 15, ..GbdtParams::preset_b() }, None).unwrap();
        for row in model.predict(&x).unwrap().chunks(3) {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            prop_assert!(row.iter().all(|p| *p > 0.0));
        }
    }

    #[test]
    fn ignored_rows_leave_the_model_unchanged(seed in 0u64..1000, junk in -1e3f64..1e3) {
        let (x, y) = regression_data(200, seed);
        let classes: Vec<Option<usize>> = y.iter().map(|v| Some(((v + 2.0).max(0.0) as usize).min(2))).collect();
        prop_assume!((0..3).all(|c| classes.contains(&Some(c))));
        let mut padded = x.clone();
        let mut padded_classes = classes.clone();
        for i in 0..50 {
            padded.push_row(&[junk + i as f64, MISSING, -junk]).unwrap();
            padded_classes.push(None);
        }
        let objective = Objective::masked_softmax(vec![1.0, 1.5, 0.8], 1e-9).unwrap();
        let params = GbdtParams { num_rounds: 10, ..GbdtParams::preset_b() };
        let a = train(&x, &Targets::Classes(classes), &objective, &params, None).unwrap();
        let b = train(&padded, &Targets::Classes(padded_classes), &objective, &params, None).unwrap();
        prop_assert_eq!(serialize(&a), serialize(&b));
    }
}

#[test]
fn preset_values() {
    let a = GbdtParams::preset_a();
    assert_eq!(
        (a.max_depth, a.learning_rate, a.subsample, a.colsample_bytree, a.colsample_bylevel),
        (5, 0.01, 0.5, 0.9, 0.9)
    );
    assert_eq!((a.num_rounds, a.early_stopping_rounds, a.min_samples_leaf, a.l2_reg, a.histogram_bins), (10_000, 1_000, 20, 1.0, 256));
    let b = GbdtParams::preset_b();
    assert_eq!((b.max_depth, b.learning_rate, b.subsample, b.colsample_bytree), (5, 0.1, 1.0, 1.0));
    assert_eq!(twostage::encoding::DEFAULT_PSEUDOCOUNT, 20.0);
}
