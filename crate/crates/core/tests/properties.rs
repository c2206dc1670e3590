use std::collections::BTreeSet;

use gprtopo::cubical::build_sublevel_complex;
use gprtopo::metrics::{average_precision, coco_thresholds, map_range, Detection, GroundTruth};
use gprtopo::persistence::compute_persistence;
use gprtopo::shape_map::{fuse, render_shape_map, rendered_generators, topo_pipeline, RenderMode, TopoConfig};
use gprtopo::synth::GroundTruthBox;
use gprtopo::GrayImage;
use proptest::prelude::*;

fn arb_image() -> impl Strategy<Value = GrayImage> {
    (2usize..14, 2usize..14).prop_flat_map(|(w, h)| {
        proptest::collection::vec(1u32..16, w * h).prop_map(move |v| {
            GrayImage::new(w, h, v.into_iter().map(|k| f64::from(k) / 16.0).collect()).unwrap()
        })
    })
}

fn gt(cx: f64, cy: f64) -> GroundTruthBox {
    GroundTruthBox {
        class_id: 0,
        cx,
        cy,
        w: 0.1,
        h: 0.1,
    }
}

/// Ground truth on a 4x4 lattice spread over three images, and one noisy
/// prediction per box plus a few strays.
fn arb_eval() -> impl Strategy<Value = (GroundTruth, Vec<Detection>)> {
    proptest::collection::vec((0usize..3, 0usize..16, -0.05f64..0.05, -0.05f64..0.05, 0.0f64..1.0, any::<bool>()), 1..20)
        .prop_map(|draws| {
            let mut gts = GroundTruth::new();
            let mut preds = Vec::new();
            let mut used = BTreeSet::new();
            for (img, cell, dx, dy, conf, stray) in draws {
                let (cx, cy) = (0.125 + 0.25 * (cell % 4) as f64, 0.125 + 0.25 * (cell / 4) as f64);
                let id = format!("img{img}");
                if !stray && used.insert((img, cell)) {
                    gts.entry(id.clone()).or_default().push(gt(cx, cy));
                }
                preds.push(Detection {
                    image_id: id,
                    class_id: 0,
                    cx: cx + dx,
                    cy: cy + dy,
                    w: 0.1,
                    h: 0.1,
                    confidence: conf,
                });
            }
            (gts, preds)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ap_non_increasing_in_threshold((gts, preds) in arb_eval()) {
        let aps: Vec<f64> = coco_thresholds().iter().map(|&t| average_precision(&preds, &gts, t)).collect();
        for w in aps.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12, "{aps:?}");
        }
        let r = map_range(&preds, &gts);
        prop_assert!(r.map50_95 <= r.map50 + 1e-12);
    }

    #[test]
    fn ap_depends_only_on_ranking((gts, preds) in arb_eval()) {
        let squashed: Vec<Detection> = preds
            .iter()
            .map(|d| Detection { confidence: (d.confidence * 3.0).exp() / 25.0, ..d.clone() })
            .collect();
        for t in coco_thresholds() {
            prop_assert_eq!(average_precision(&preds, &gts, t), average_precision(&squashed, &gts, t));
        }
    }

    #[test]
    fn raising_min_lifetime_shrinks_the_map(img in arb_image(), lo in 0.0f64..0.5, extra in 0.0f64..0.5) {
        let d = compute_persistence(&build_sublevel_complex(&img)).unwrap();
        let on = |m: f64| -> BTreeSet<usize> {
            let map = render_shape_map(&d, img.dims(), RenderMode::Boundary, m).unwrap();
            map.values.iter().enumerate().filter(|(_, v)| **v > 0.0).map(|(i, _)| i).collect()
        };
        prop_assert!(on(lo + extra).is_subset(&on(lo)));
    }

    #[test]
    fn rendered_pixels_ignore_intensity_scale(img in arb_image(), k in 0.1f64..1.0) {
        let scaled = GrayImage::new(img.width(), img.height(), img.pixels().iter().map(|v| v * k).collect()).unwrap();
        let pixels = |im: &GrayImage| -> Vec<(Vec<usize>, u64)> {
            let d = compute_persistence(&build_sublevel_complex(im)).unwrap();
            let mut g: Vec<_> = rendered_generators(&d, im.dims(), RenderMode::Filled, 0.0)
                .unwrap()
                .into_iter()
                .map(|g| (g.pixels, (g.intensity * 1e6).round() as u64))
                .collect();
            g.sort();
            g
        };
        prop_assert_eq!(pixels(&img), pixels(&scaled));
    }

    #[test]
    fn blend_is_affine_in_alpha(img in arb_image(), alpha in 0.0f64..=1.0) {
        let d = compute_persistence(&build_sublevel_complex(&img)).unwrap();
        let topo = render_shape_map(&d, img.dims(), RenderMode::Boundary, 0.0).unwrap();
        let b0 = fuse(&img, &topo, 0.0).unwrap().blend;
        let b1 = fuse(&img, &topo, 1.0).unwrap().blend;
        let ba = fuse(&img, &topo, alpha).unwrap().blend;
        for i in 0..ba.len() {
            prop_assert!((ba[i] - (alpha * b1[i] + (1.0 - alpha) * b0[i])).abs() <= 1e-12);
        }
    }
}

#[test]
fn loose_boxes_score_three_tenths() {
    // prediction shifted so IoU with its ground truth is about 0.63
    let mut gts = GroundTruth::new();
    gts.insert("a".into(), vec![GroundTruthBox { class_id: 0, cx: 0.5, cy: 0.5, w: 0.4, h: 0.4 }]);
    // overlap width 0.31 of 0.4: IoU = 0.31 / (0.8 - 0.31)
    let pred = Detection {
        image_id: "a".into(),
        class_id: 0,
        cx: 0.59,
        cy: 0.5,
        w: 0.4,
        h: 0.4,
        confidence: 0.9,
    };
    let r = map_range(&[pred], &gts);
    assert_eq!(r.map50, 1.0);
    let zero_from = r.per_threshold.iter().position(|(_, ap)| *ap == 0.0).unwrap();
    assert!((r.per_threshold[zero_from].0 - 0.65).abs() < 1e-12);
    assert!((r.map50_95 - 0.3).abs() < 1e-12, "{}", r.map50_95);
}

#[test]
fn ring_topo_pipeline_paints_border() {
    let img = GrayImage::from_rows(&[&[0.1, 0.1, 0.1], &[0.1, 1.0, 0.1], &[0.1, 0.1, 0.1]]).unwrap();
    let out = topo_pipeline(&img, &TopoConfig::default()).unwrap();
    let expect: Vec<f64> = (0..9).map(|i| if i == 4 { 0.0 } else { 1.0 }).collect();
    assert_eq!(out.shape_map.values, expect);
    let again = topo_pipeline(&img, &TopoConfig::default()).unwrap();
    assert_eq!(out.fused.to_png_rgb().unwrap(), again.fused.to_png_rgb().unwrap());
}
