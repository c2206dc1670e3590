use std::collections::BTreeSet;

use gprtopo::cubical::{betti_oracle, build_sublevel_complex};
use gprtopo::persistence::{betti_curve, compute_persistence, compute_persistence_with, Reduction};
use gprtopo::GrayImage;
use proptest::prelude::*;

fn arb_image(max_side: usize, levels: u32) -> impl Strategy<Value = GrayImage> {
    (1..=max_side, 1..=max_side).prop_flat_map(move |(w, h)| {
        proptest::collection::vec(0..levels, w * h).prop_map(move |v| {
            let px = v.into_iter().map(|k| f64::from(k) / f64::from(levels - 1)).collect();
            GrayImage::new(w, h, px).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn betti_curve_matches_oracle(img in arb_image(16, 5)) {
        let c = build_sublevel_complex(&img);
        let d = compute_persistence(&c).unwrap();
        let levels: BTreeSet<u64> = img.pixels().iter().map(|v| v.to_bits()).collect();
        for eps in levels.into_iter().map(f64::from_bits) {
            let (b0, b1) = betti_oracle(&c, eps);
            prop_assert_eq!(betti_curve(&d, 0, eps), b0);
            prop_assert_eq!(betti_curve(&d, 1, eps), b1);
        }
    }

    #[test]
    fn reductions_agree(img in arb_image(14, 4)) {
        let c = build_sublevel_complex(&img);
        prop_assert_eq!(
            compute_persistence_with(&c, Reduction::Standard).unwrap(),
            compute_persistence_with(&c, Reduction::Twist).unwrap()
        );
    }

    #[test]
    fn every_cell_paired_once(img in arb_image(12, 4)) {
        let c = build_sublevel_complex(&img);
        let d = compute_persistence(&c).unwrap();
        let mut seen = BTreeSet::new();
        for p in &d.pairs {
            prop_assert!(seen.insert(p.birth_cell));
            if let Some(k) = p.death_cell {
                prop_assert!(seen.insert(k));
            }
        }
        prop_assert_eq!(seen.len(), c.len());
        // a rectangle of pixels is contractible: one essential class in total
        prop_assert_eq!(d.pairs.iter().filter(|p| p.is_essential()).count(), 1);
    }
}

#[test]
fn one_by_two_image() {
    let img = GrayImage::from_rows(&[&[0.0, 1.0]]).unwrap();
    let d = compute_persistence(&build_sublevel_complex(&img)).unwrap();
    let essential: Vec<_> = d.pairs.iter().filter(|p| p.is_essential()).collect();
    assert_eq!(essential.len(), 1);
    assert_eq!(essential[0].birth, 0.0);
    assert_eq!(d.pairs_of_dim(1).count(), 0);
}

#[test]
fn constant_image_has_no_loops() {
    let img = GrayImage::filled(6, 4, 0.3);
    let d = compute_persistence(&build_sublevel_complex(&img)).unwrap();
    assert!(d.pairs_of_dim(1).all(|p| p.lifetime() == 0.0));
    assert!(d.without_zero_persistence().pairs_of_dim(1).next().is_none());
}

#[test]
fn ring_betti_curve_is_half_open() {
    let img = GrayImage::from_rows(&[&[0.1, 0.1, 0.1], &[0.1, 1.0, 0.1], &[0.1, 0.1, 0.1]]).unwrap();
    let d = compute_persistence(&build_sublevel_complex(&img)).unwrap();
    assert_eq!(betti_curve(&d, 1, 0.05), 0);
    assert_eq!(betti_curve(&d, 1, 0.5), 1);
    assert_eq!(betti_curve(&d, 1, 1.0), 0);
}

#[test]
fn diagram_csv_is_deterministic() {
    let px: Vec<f64> = (0..20 * 15).map(|i| f64::from((i * 37 % 11) as u32) / 10.0).collect();
    let img = GrayImage::new(20, 15, px).unwrap();
    let a = compute_persistence(&build_sublevel_complex(&img)).unwrap();
    let b = compute_persistence(&build_sublevel_complex(&img)).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    assert_eq!(a.cycles_csv(), b.cycles_csv());
}
