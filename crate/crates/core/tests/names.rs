use lkit::pipeline::ObjectSpec;
use lkit::{calculate_features, feature_names, Control, FeatureSet};

#[test]
fn computed_names_match_declared_names() {
    let built = ObjectSpec::problem("gallagher101", 2, 400, 3)
        .with_blocks(vec![4, 3])
        .build()
        .unwrap();
    let control = Control::default();
    let mut total = 0;
    for (set, res) in calculate_features(&built.object, &FeatureSet::ALL, &control, 7) {
        let fv = res.unwrap_or_else(|e| panic!("{}: {}", set, e));
        let got: Vec<&str> = fv.names().collect();
        let want = feature_names(set, &control).unwrap();
        assert_eq!(got, want, "{}", set);
        total += got.len();
    }
    assert_eq!(total, 343);
}

#[test]
fn names_follow_control() {
    let c = Control::from_pairs(["gcm.approaches=min", "disp.quantiles=0.1"]).unwrap();
    assert_eq!(feature_names(FeatureSet::Gcm, &c).unwrap().len(), 25);
    assert_eq!(feature_names(FeatureSet::Disp, &c).unwrap().len(), 6);
}
