use std::collections::BTreeMap;

use atlas_core::atlas::map::{median, topic_name, AXIS_NAMES};
use atlas_core::atlas::{
    axis_profile, build_ccp_map, build_lda_map, default_anchors, element_overlay, export_map, import_map, place_labels, AxisAnchor, MapPoint,
    MapType, OverlayMode, PlacedLabel,
};
use atlas_core::embed::{Embedding2D, TsneConfig};
use atlas_core::topics::{fit_lda, LdaConfig};
use atlas_testkit::fixtures::{planted_corpus, query_fixture, rng};
use proptest::prelude::*;
use rand::Rng;

fn points() -> impl Strategy<Value = Vec<MapPoint>> {
    prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64, prop::option::of(0u8..4)), 1..40).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (x, y, g))| MapPoint { id: format!("p{i}"), x, y, group: g.map(|g| format!("g{g}")) })
            .collect()
    })
}

proptest! {
    #[test]
    fn placement_ignores_member_order(pts in points(), seed in any::<u64>()) {
        let mut shuffled = pts.clone();
        let mut r = rng(seed);
        for i in (1..shuffled.len()).rev() {
            shuffled.swap(i, r.gen_range(0..=i));
        }
        prop_assert_eq!(place_labels(&pts), place_labels(&shuffled));
    }

    #[test]
    fn label_counts_sum_to_grouped_points(pts in points()) {
        let total: usize = place_labels(&pts).iter().map(|l| l.count).sum();
        prop_assert_eq!(total, pts.iter().filter(|p| p.group.is_some()).count());
    }

    #[test]
    fn median_ignores_a_larger_maximum(mut xs in prop::collection::vec(-50.0..50.0f64, 3..20), bump in 0.0..1e6f64) {
        let before = median(&xs).unwrap();
        let (imax, _) = xs.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap();
        xs[imax] += bump;
        prop_assert_eq!(median(&xs).unwrap(), before);
    }

    #[test]
    fn axis_distances_match_recomputation(labels in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 1..10)) {
        let anchors: Vec<AxisAnchor> = AXIS_NAMES.iter().enumerate()
            .map(|(i, n)| AxisAnchor { name: n.to_string(), x: [0.0, 7.0, -3.0, 5.0][i], y: [1.0, -2.0, 8.0, 5.0][i] })
            .collect();
        let placed: Vec<PlacedLabel> = labels.iter().enumerate().map(|(i, &(x, y))| PlacedLabel { text: format!("l{i}"), x, y, count: 1 }).collect();
        let prof = axis_profile(&placed, &anchors).unwrap();
        for (l, row) in placed.iter().zip(&prof.labels) {
            let d: Vec<f64> = anchors.iter().map(|a| ((l.x - a.x).powi(2) + (l.y - a.y).powi(2)).sqrt()).collect();
            for (a, b) in d.iter().zip(&row.distances) {
                prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
                prop_assert!(*b >= 0.0);
            }
            let best = d.iter().cloned().fold(f64::INFINITY, f64::min);
            let nearest = anchors.iter().zip(&row.distances).filter(|(_, &x)| x == row.distances.iter().cloned().fold(f64::INFINITY, f64::min)).map(|(a, _)| a.name.clone()).min().unwrap();
            prop_assert!((row.distances[anchors.iter().position(|a| a.name == row.nearest).unwrap()] - best).abs() < 1e-12);
            prop_assert_eq!(&row.nearest, &nearest);
        }
    }
}

#[test]
fn equidistant_label_is_boundary_with_lowest_name() {
    let anchors = vec![
        AxisAnchor { name: "Microstructural".into(), x: 0.0, y: 0.0 },
        AxisAnchor { name: "Mechanical".into(), x: 2.0, y: 0.0 },
        AxisAnchor { name: "Optical".into(), x: 1.0, y: 10.0 },
        AxisAnchor { name: "Thermodynamic".into(), x: 1.0, y: -10.0 },
    ];
    let l = [PlacedLabel { text: "Fracture".into(), x: 1.0, y: 0.0, count: 3 }];
    let p = axis_profile(&l, &anchors).unwrap();
    assert_eq!(p.labels[0].nearest, "Mechanical");
    assert!(p.labels[0].boundary);
}

fn embedding(n: usize, seed: u64) -> Embedding2D<f64> {
    let mut r = rng(seed);
    Embedding2D { coords: (0..n).map(|_| [r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)]).collect(), kl_trace: vec![], config: TsneConfig::default() }
}

#[test]
fn lda_map_groups_by_argmax_topic() {
    let (docs, _) = planted_corpus(3, 30, 10, 5, 1);
    let model = fit_lda::<f64>(&docs, &LdaConfig::new(3, 20, 1)).unwrap();
    let ids: Vec<String> = (0..30).map(|i| format!("d{i}")).collect();
    let names: BTreeMap<usize, String> = [(0, "glass".to_string())].into_iter().collect();
    let map = build_lda_map(&embedding(30, 2), &model, &ids, &names).unwrap();
    map.validate().unwrap();
    assert_eq!(map.map_type, MapType::Lda);
    for (i, p) in map.points.iter().enumerate() {
        assert_eq!(p.group.as_deref(), Some(topic_name(&names, model.assign_topic(i)).as_str()));
    }
    let hist = model.topic_histogram();
    for l in &map.labels {
        let t = if l.text == "glass" { 0 } else { l.text.parse().unwrap() };
        assert_eq!(l.count, hist[t]);
    }
    assert!(build_lda_map(&embedding(29, 2), &model, &ids[..29], &names).is_err());

    // Provenance follows the model.
    let other = fit_lda::<f64>(&docs, &LdaConfig::new(3, 20, 9)).unwrap();
    let map2 = build_lda_map(&embedding(30, 2), &other, &ids, &names).unwrap();
    assert_ne!(map.provenance["model"], map2.provenance["model"]);
    assert_eq!(map.provenance["embedding"], map2.provenance["embedding"]);
}

#[test]
fn ccp_map_keeps_unlabeled_points() {
    let ids: Vec<String> = (0..6).map(|i| format!("c{i}")).collect();
    let none = vec![None; 6];
    let m = build_ccp_map(&embedding(6, 1), &ids, &none).unwrap();
    assert_eq!(m.points.len(), 6);
    assert!(m.labels.is_empty());
    let two: Vec<Option<String>> = ["SEM", "XRD", "SEM", "", "XRD", ""].iter().map(|s| (!s.is_empty()).then(|| s.to_string())).collect();
    let m = build_ccp_map(&embedding(6, 1), &ids, &two).unwrap();
    assert_eq!(m.labels.len(), 2);
    assert_eq!(m.labels.iter().map(|l| l.count).sum::<usize>(), 4);
    assert_eq!(m, build_ccp_map(&embedding(6, 1), &ids, &two).unwrap());
    assert!(build_ccp_map(&embedding(6, 1), &ids, &two[..5]).is_err());
}

#[test]
fn overlays_match_row_scans() {
    let f = query_fixture(50, 11);
    let ids: Vec<String> = f.corpus.documents().iter().map(|d| d.doc_id.clone()).collect();
    let lda = atlas_core::atlas::MapDocument {
        map_type: MapType::Lda,
        points: ids.iter().map(|id| MapPoint { id: id.clone(), x: 0.0, y: 0.0, group: None }).collect(),
        labels: vec![],
        provenance: BTreeMap::new(),
    };
    let facts = f.facts();
    let both = element_overlay(&lda, &f.markers, &f.corpus, &["F", "Cl"], OverlayMode::All).unwrap();
    let scan: Vec<String> = facts.iter().filter(|d| d.elements.contains("F") && d.elements.contains("Cl")).map(|d| d.doc_id.clone()).collect();
    assert_eq!(both, scan);
    assert!(element_overlay(&lda, &f.markers, &f.corpus, &[] as &[&str], OverlayMode::Any).unwrap().is_empty());
    assert!(element_overlay(&lda, &f.markers, &f.corpus, &["Qq"], OverlayMode::Any).is_err());

    // Any-mode distributes over union.
    let sym = ["F", "Cl", "Si", "Er"];
    for a in sym {
        for b in sym {
            let joint = element_overlay(&lda, &f.markers, &f.corpus, &[a, b], OverlayMode::Any).unwrap();
            let ea = element_overlay(&lda, &f.markers, &f.corpus, &[a], OverlayMode::Any).unwrap();
            let eb = element_overlay(&lda, &f.markers, &f.corpus, &[b], OverlayMode::Any).unwrap();
            let union: Vec<String> = ids.iter().filter(|id| ea.contains(id) || eb.contains(id)).cloned().collect();
            assert_eq!(joint, union);
        }
    }

    // Caption points inherit their document's markers.
    let caps: Vec<(String, String)> = f.corpus.captions().map(|(d, c)| (c.caption_id.clone(), ids[d].clone())).collect();
    let ccp = atlas_core::atlas::MapDocument {
        map_type: MapType::Ccp,
        points: caps.iter().map(|(c, _)| MapPoint { id: c.clone(), x: 0.0, y: 0.0, group: None }).collect(),
        labels: vec![],
        provenance: BTreeMap::new(),
    };
    let got = element_overlay(&ccp, &f.markers, &f.corpus, &["F", "Cl"], OverlayMode::All).unwrap();
    let expected: Vec<String> = caps.iter().filter(|(_, d)| scan.contains(d)).map(|(c, _)| c.clone()).collect();
    assert_eq!(got, expected);
}

#[test]
fn export_import_round_trip() {
    let ids: Vec<String> = (0..5).map(|i| format!("c{i}")).collect();
    let labels = vec![Some("SEM".to_string()), None, Some("SEM".into()), Some("TEM".into()), None];
    let m = build_ccp_map(&embedding(5, 4), &ids, &labels).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ccp.json");
    export_map(&m, &path).unwrap();
    let back = import_map(&path).unwrap();
    assert_eq!(back, m);
    assert_eq!(back.points.len(), 5);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(json["map_type"], "ccp");
    assert!(json["points"][1]["group"].is_null());
    assert_eq!(json["labels"][0]["count"], 2);
    assert!(import_map(dir.path().join("missing.json")).is_err());
}

#[test]
fn default_anchor_corners() {
    let pts = vec![
        MapPoint { id: "a".into(), x: -1.0, y: 2.0, group: None },
        MapPoint { id: "b".into(), x: 3.0, y: -4.0, group: None },
    ];
    let a = default_anchors(&pts).unwrap();
    assert_eq!((a[0].name.as_str(), a[0].x, a[0].y), ("Optical", -1.0, 2.0));
    assert_eq!((a[3].name.as_str(), a[3].x, a[3].y), ("Thermodynamic", 3.0, -4.0));
}
