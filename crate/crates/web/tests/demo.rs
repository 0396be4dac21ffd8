use gfe_core::optim::LrSchedule;
use gfe_web::{demo, lr_curve, topology};

#[test]
fn lr_curve_steps_down() {
    let c = lr_curve(&LrSchedule::default(), 21_000, 4).unwrap();
    assert_eq!(c.steps, vec![0, 7000, 14000, 21000]);
    let expected = [0.01, 0.009, 0.0081, 0.00729];
    for (got, want) in c.lr.iter().zip(expected) {
        assert!((got - want).abs() < 1e-15, "{got} vs {want}");
    }
    let bad = LrSchedule { decay_ratio: 1.5, ..LrSchedule::default() };
    assert!(lr_curve(&bad, 10, 3).is_err());
}

#[test]
fn topology_reports_counts_and_regions() {
    let t = topology(2).unwrap();
    let counts: Vec<usize> = t.presets.iter().map(|p| p.param_count).collect();
    assert_eq!(counts, vec![532, 31132]);
    assert_eq!(t.presets[0].edges, vec![300, 100, 20]);
    assert_eq!(t.regions.len(), 10);
    assert_eq!(t.region_of_point[48], 5);
    assert_eq!(t.region_of_point.len(), 100);
    assert!(topology(12).is_err());
    let json = serde_json::to_value(&t).unwrap();
    assert_eq!(json["presets"][1]["preset"], "fc");
}

#[test]
fn demo_trains_both_presets_on_one_split() {
    let d = demo(1, 15, 40, "mouth", 1.0).unwrap();
    assert_eq!(d.region, "mouth");
    assert_eq!((d.train_size, d.test_size), (56, 24));
    assert_eq!(d.runs.len(), 2);
    for r in &d.runs {
        assert_eq!(r.history.len(), 15);
        assert!((0.0..=1.0).contains(&r.test_accuracy));
    }
    assert!(demo(1, 5, 40, "elbow", 1.0).is_err());
}
