mod common;

use common::oracles::mann_whitney;
use mlcart::metrics::{
    accuracy, aggregate_roc, auc, brier_score, confusion_matrix, error_rate, roc_curve, write_roc_csv, RocAxes,
    ROC_GRID_POINTS,
};
use proptest::prelude::*;

fn instance() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..150).prop_flat_map(|n| {
        (
            proptest::collection::vec(prop_oneof![0.0f64..1.0, (0u8..5).prop_map(|k| k as f64 / 4.0)], n),
            proptest::collection::vec(0u8..2, n),
        )
            .prop_map(|(s, mut y)| {
                y[0] = 0;
                y[1] = 1;
                (s, y)
            })
    })
}

proptest! {
    #[test]
    fn auc_is_the_mann_whitney_statistic((s, y) in instance()) {
        let a = auc(&roc_curve(&s, &y).unwrap());
        prop_assert!((a - mann_whitney(&s, &y)).abs() <= 1e-12);
    }

    #[test]
    fn confusion_counts_add_up((s, y) in instance(), t in 0.0f64..1.0) {
        let cm = confusion_matrix(&y, &s, t).unwrap();
        prop_assert_eq!(cm.n() as usize, y.len());
        let predicted_pos = s.iter().filter(|&&p| p >= t).count() as u64;
        prop_assert_eq!(cm.tp + cm.fp, predicted_pos);
        prop_assert_eq!(error_rate(&cm) + accuracy(&cm), 1.0);
    }

    #[test]
    fn brier_is_mean_squared_error((s, y) in instance()) {
        let b = brier_score(&s, &y).unwrap();
        let want = s.iter().zip(&y).map(|(p, &t)| (p - t as f64).powi(2)).sum::<f64>() / s.len() as f64;
        prop_assert!((b - want).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn roc_curves_are_monotone_staircases((s, y) in instance()) {
        let c = roc_curve(&s, &y).unwrap();
        let (first, last) = (c.points[0], *c.points.last().unwrap());
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in c.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
    }

    #[test]
    fn averaged_roc_stays_between_its_inputs(a in instance(), b in instance()) {
        let (ca, cb) = (roc_curve(&a.0, &a.1).unwrap(), roc_curve(&b.0, &b.1).unwrap());
        let avg = aggregate_roc(&[ca.clone(), cb.clone()]).unwrap();
        prop_assert!(avg.points.len() <= ROC_GRID_POINTS + 2);
        for w in avg.points.windows(2) {
            prop_assert!(w[1].fpr >= w[0].fpr && w[1].tpr >= w[0].tpr);
        }
        let lo = auc(&ca).min(auc(&cb));
        let hi = auc(&ca).max(auc(&cb));
        let m = auc(&avg);
        prop_assert!(m >= lo - 0.02 && m <= hi + 0.02, "{} not near [{}, {}]", m, lo, hi);
    }
}

#[test]
fn threshold_is_inclusive() {
    let cm = confusion_matrix(&[1, 0], &[0.5, 0.49], 0.5).unwrap();
    assert_eq!((cm.tp, cm.tn), (1, 1));
}

#[test]
fn single_class_has_no_roc() {
    assert!(roc_curve(&[0.1, 0.2], &[1, 1]).is_err());
}

#[test]
fn specificity_axes_mirror_fpr() {
    let c = roc_curve(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_roc_csv(&c, RocAxes::FprTpr, &mut a).unwrap();
    write_roc_csv(&c, RocAxes::SpecificitySensitivity, &mut b).unwrap();
    let (a, b) = (String::from_utf8(a).unwrap(), String::from_utf8(b).unwrap());
    for (la, lb) in a.lines().skip(1).zip(b.lines().skip(1)) {
        let fa: Vec<f64> = la.split(',').map(|v| v.parse().unwrap()).collect();
        let fb: Vec<f64> = lb.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((fb[0] - (1.0 - fa[0])).abs() < 1e-15);
        assert_eq!(fb[1], fa[1]);
    }
}
