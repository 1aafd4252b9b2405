//! Map documents: points, placed labels, axis profiles and element overlays.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AtlasError, Result};
use crate::chemparse::{DocumentElementMatrix, Element, EXTENDED_ELEMENTS};
use crate::corpus::Corpus;
use crate::embed::Embedding2D;
use crate::scalar::Scalar;
use crate::topics::TopicModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapType {
    Lda,
    Ccp,
}

impl std::str::FromStr for MapType {
    type Err = AtlasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lda" => Ok(MapType::Lda),
            "ccp" => Ok(MapType::Ccp),
            other => Err(AtlasError::Invalid(format!("unknown map type {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapPoint {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub group: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacedLabel {
    pub text: String,
    pub x: f64,
    pub y: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub map_type: MapType,
    pub points: Vec<MapPoint>,
    pub labels: Vec<PlacedLabel>,
    pub provenance: BTreeMap<String, String>,
}

impl MapDocument {
    /// Checks unique ids, finite coordinates and label counts against groups.
    pub fn validate(&self) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        for p in &self.points {
            if !seen.insert(p.id.as_str()) {
                return Err(AtlasError::Invalid(format!("duplicate point id {:?}", p.id)));
            }
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(AtlasError::Invalid(format!("point {:?} has non-finite coordinates", p.id)));
            }
        }
        let mut sizes: BTreeMap<&str, usize> = BTreeMap::new();
        for g in self.points.iter().filter_map(|p| p.group.as_deref()) {
            *sizes.entry(g).or_default() += 1;
        }
        for l in &self.labels {
            if sizes.get(l.text.as_str()).copied() != Some(l.count) {
                return Err(AtlasError::Invalid(format!("label {:?} count {} does not match its group", l.text, l.count)));
            }
        }
        Ok(())
    }
}

/// Median; the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

/// One label per group at the median member position, ordered by group text.
/// Ungrouped points are skipped.
pub fn place_labels(points: &[MapPoint]) -> Vec<PlacedLabel> {
    let mut groups: BTreeMap<&str, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in points {
        if let Some(g) = &p.group {
            let e = groups.entry(g.as_str()).or_default();
            e.0.push(p.x);
            e.1.push(p.y);
        }
    }
    groups
        .into_iter()
        .map(|(text, (xs, ys))| PlacedLabel {
            text: text.to_string(),
            x: median(&xs).expect("group has members"),
            y: median(&ys).expect("group has members"),
            count: xs.len(),
        })
        .collect()
}

pub const AXIS_NAMES: [&str; 4] = ["Mechanical", "Microstructural", "Optical", "Thermodynamic"];

/// Relative gap between the two nearest axes under which a label is a boundary case.
pub const BOUNDARY_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisAnchor {
    pub name: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelAxes {
    pub label: String,
    /// Distance to each anchor, in anchor order.
    pub distances: Vec<f64>,
    pub nearest: String,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisProfile {
    pub anchors: Vec<AxisAnchor>,
    pub labels: Vec<LabelAxes>,
}

/// Anchors at the corners of the points' bounding box: Optical top left,
/// Mechanical top right, Microstructural bottom left, Thermodynamic bottom right.
pub fn default_anchors(points: &[MapPoint]) -> Result<Vec<AxisAnchor>> {
    if points.is_empty() {
        return Err(AtlasError::Invalid("no points to place anchors around".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in points {
        x0 = x0.min(p.x);
        x1 = x1.max(p.x);
        y0 = y0.min(p.y);
        y1 = y1.max(p.y);
    }
    let a = |name: &str, x, y| AxisAnchor { name: name.to_string(), x, y };
    Ok(vec![a("Optical", x0, y1), a("Mechanical", x1, y1), a("Microstructural", x0, y0), a("Thermodynamic", x1, y0)])
}

/// Euclidean distance from each placed label to each anchor. The nearest axis
/// is the argmin; exact ties go to the lexicographically lowest name.
pub fn axis_profile(labels: &[PlacedLabel], anchors: &[AxisAnchor]) -> Result<AxisProfile> {
    if anchors.len() != 4 {
        return Err(AtlasError::Invalid(format!("expected 4 anchors, got {}", anchors.len())));
    }
    for (i, a) in anchors.iter().enumerate() {
        if !a.x.is_finite() || !a.y.is_finite() {
            return Err(AtlasError::Invalid(format!("anchor {:?} is not finite", a.name)));
        }
        for b in &anchors[..i] {
            if a.x == b.x && a.y == b.y {
                return Err(AtlasError::Invalid(format!("anchors {:?} and {:?} coincide", b.name, a.name)));
            }
            if a.name == b.name {
                return Err(AtlasError::Invalid(format!("anchor name {:?} repeated", a.name)));
            }
        }
    }
    let rows = labels
        .iter()
        .map(|l| {
            let distances: Vec<f64> = anchors.iter().map(|a| (l.x - a.x).hypot(l.y - a.y)).collect();
            let mut order: Vec<usize> = (0..anchors.len()).collect();
            order.sort_by(|&i, &j| distances[i].total_cmp(&distances[j]).then_with(|| anchors[i].name.cmp(&anchors[j].name)));
            let (d1, d2) = (distances[order[0]], distances[order[1]]);
            LabelAxes {
                label: l.text.clone(),
                nearest: anchors[order[0]].name.clone(),
                boundary: d2 - d1 <= BOUNDARY_TOLERANCE * d2,
                distances,
            }
        })
        .collect();
    Ok(AxisProfile { anchors: anchors.to_vec(), labels: rows })
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn embedding_hash<F: Scalar>(embedding: &Embedding2D<F>) -> String {
    sha256_hex(&serde_json::to_vec(embedding).expect("embedding serializes"))
}

fn to_points<F: Scalar>(embedding: &Embedding2D<F>, ids: &[String], groups: Vec<Option<String>>) -> Result<Vec<MapPoint>> {
    let points: Vec<MapPoint> = ids
        .iter()
        .zip(&embedding.coords)
        .zip(groups)
        .map(|((id, c), group)| MapPoint { id: id.clone(), x: c[0].as_f64(), y: c[1].as_f64(), group })
        .collect();
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(AtlasError::Invalid("embedding has non-finite coordinates".into()));
    }
    Ok(points)
}

/// Display name of a topic: the configured name, else its id.
pub fn topic_name(names: &BTreeMap<usize, String>, topic: usize) -> String {
    names.get(&topic).cloned().unwrap_or_else(|| topic.to_string())
}

/// Abstract map colored by each document's argmax topic.
pub fn build_lda_map<F: Scalar>(
    embedding: &Embedding2D<F>,
    model: &TopicModel<F>,
    doc_ids: &[String],
    topic_names: &BTreeMap<usize, String>,
) -> Result<MapDocument> {
    let n = embedding.len();
    if n != doc_ids.len() || n != model.num_docs() {
        return Err(AtlasError::Alignment(format!("{n} embedded points, {} documents, {} modeled documents", doc_ids.len(), model.num_docs())));
    }
    let groups = model.assignments().iter().map(|&t| Some(topic_name(topic_names, t))).collect();
    let points = to_points(embedding, doc_ids, groups)?;
    let labels = place_labels(&points);
    let mut provenance = BTreeMap::new();
    provenance.insert("model".to_string(), sha256_hex(&serde_json::to_vec(model).expect("model serializes")));
    provenance.insert("embedding".to_string(), embedding_hash(embedding));
    provenance.insert("topic_names".to_string(), sha256_hex(&serde_json::to_vec(topic_names).expect("names serialize")));
    Ok(MapDocument { map_type: MapType::Lda, points, labels, provenance })
}

/// Caption map colored by rule labels; unlabeled captions stay as ungrouped points.
pub fn build_ccp_map<F: Scalar>(embedding: &Embedding2D<F>, caption_ids: &[String], labels: &[Option<String>]) -> Result<MapDocument> {
    let n = embedding.len();
    if n != caption_ids.len() || n != labels.len() {
        return Err(AtlasError::Alignment(format!("{n} embedded points, {} captions, {} labels", caption_ids.len(), labels.len())));
    }
    let points = to_points(embedding, caption_ids, labels.to_vec())?;
    let placed = place_labels(&points);
    let mut provenance = BTreeMap::new();
    provenance.insert("embedding".to_string(), embedding_hash(embedding));
    provenance.insert("labels".to_string(), sha256_hex(&serde_json::to_vec(labels).expect("labels serialize")));
    Ok(MapDocument { map_type: MapType::Ccp, points, labels: placed, provenance })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OverlayMode {
    Any,
    #[default]
    All,
}

impl std::str::FromStr for OverlayMode {
    type Err = AtlasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "any" => Ok(OverlayMode::Any),
            "all" => Ok(OverlayMode::All),
            other => Err(AtlasError::Invalid(format!("unknown overlay mode {other:?}"))),
        }
    }
}

/// Resolves element symbols against the marker matrix's element table.
pub fn resolve_elements<S: AsRef<str>>(symbols: &[S], markers: &DocumentElementMatrix) -> Result<Vec<Element>> {
    let extended = markers.element_count() == EXTENDED_ELEMENTS;
    symbols
        .iter()
        .map(|s| Element::from_symbol(s.as_ref(), extended).ok_or_else(|| AtlasError::UnknownElement(s.as_ref().to_string())))
        .collect()
}

/// Ids of map points whose document carries the elements. CCP points use
/// the markers of the document owning the caption. An empty element set
/// selects nothing under `Any` and everything under `All`.
pub fn element_overlay<S: AsRef<str>>(
    map: &MapDocument,
    markers: &DocumentElementMatrix,
    corpus: &Corpus,
    elements: &[S],
    mode: OverlayMode,
) -> Result<Vec<String>> {
    let elements = resolve_elements(elements, markers)?;
    let row_of: HashMap<&str, usize> = markers.doc_ids().iter().enumerate().map(|(i, d)| (d.as_str(), i)).collect();
    let owner: HashMap<&str, &str> = match map.map_type {
        MapType::Lda => HashMap::new(),
        MapType::Ccp => corpus.captions().map(|(d, c)| (c.caption_id.as_str(), corpus.documents()[d].doc_id.as_str())).collect(),
    };
    let mut out = Vec::new();
    for p in &map.points {
        let doc = match map.map_type {
            MapType::Lda => p.id.as_str(),
            MapType::Ccp => owner.get(p.id.as_str()).copied().ok_or_else(|| AtlasError::Alignment(format!("caption {:?} is not in the corpus", p.id)))?,
        };
        let row = *row_of.get(doc).ok_or_else(|| AtlasError::Alignment(format!("document {doc:?} has no marker row")))?;
        let hit = match mode {
            OverlayMode::Any => elements.iter().any(|&e| markers.get(row, e)),
            OverlayMode::All => elements.iter().all(|&e| markers.get(row, e)),
        };
        if hit {
            out.push(p.id.clone());
        }
    }
    Ok(out)
}

pub fn export_map(map: &MapDocument, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(map).expect("map serializes");
    std::fs::write(path, text).map_err(|e| AtlasError::io(path, e))
}

pub fn import_map(path: impl AsRef<Path>) -> Result<MapDocument> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| AtlasError::io(path, e))?;
    let map: MapDocument = serde_json::from_str(&text).map_err(|e| AtlasError::Invalid(format!("{}: {e}", path.display())))?;
    map.validate()?;
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(id: &str, x: f64, y: f64, g: Option<&str>) -> MapPoint {
        MapPoint { id: id.into(), x, y, group: g.map(str::to_string) }
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[1.0, 2.0, 100.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn single_member_label() {
        let l = place_labels(&[pt("a", 3.0, 4.0, Some("g")), pt("b", 9.0, 9.0, None)]);
        assert_eq!(l, vec![PlacedLabel { text: "g".into(), x: 3.0, y: 4.0, count: 1 }]);
    }

    #[test]
    fn anchor_distance_and_ties() {
        let anchors = vec![
            AxisAnchor { name: "Optical".into(), x: 0.0, y: 1.0 },
            AxisAnchor { name: "Mechanical".into(), x: 1.0, y: 1.0 },
            AxisAnchor { name: "Microstructural".into(), x: 0.0, y: 0.0 },
            AxisAnchor { name: "Thermodynamic".into(), x: 1.0, y: 0.0 },
        ];
        let labels = vec![
            PlacedLabel { text: "At".into(), x: 1.0, y: 0.0, count: 1 },
            PlacedLabel { text: "Fracture".into(), x: 0.5, y: 1.0, count: 2 },
        ];
        let p = axis_profile(&labels, &anchors).unwrap();
        assert_eq!(p.labels[0].distances[3], 0.0);
        assert_eq!(p.labels[0].nearest, "Thermodynamic");
        assert!(!p.labels[0].boundary);
        assert_eq!(p.labels[1].nearest, "Mechanical");
        assert!(p.labels[1].boundary);
        let mut bad = anchors.clone();
        bad[1].x = 0.0;
        assert!(axis_profile(&labels, &bad).is_err());
    }
}
