//! Line-oriented box files.
//!
//! One record per line, comma separated:
//!
//! ```text
//! image_id,class_id,x_min,y_min,x_max,y_max[,score]
//! ```
//!
//! Blank lines and lines starting with `#` are skipped. Ground-truth files
//! omit the score; detection files must carry it.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::{BoundingBox, ImageSample, MetricsError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxRecord {
    pub image_id: u64,
    pub bbox: BoundingBox,
}

pub fn parse_boxes(text: &str) -> Result<Vec<BoxRecord>, MetricsError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| MetricsError::Parse { line: i + 1, msg };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 6 && fields.len() != 7 {
            return Err(err(format!("expected 6 or 7 fields, found {}", fields.len())));
        }
        let image_id: u64 = fields[0]
            .parse()
            .map_err(|_| err(format!("bad image_id {:?}", fields[0])))?;
        let class_id: u32 = fields[1]
            .parse()
            .map_err(|_| err(format!("bad class_id {:?}", fields[1])))?;
        let mut nums = [0.0f64; 4];
        for (k, slot) in nums.iter_mut().enumerate() {
            *slot = fields[2 + k]
                .parse()
                .map_err(|_| err(format!("bad coordinate {:?}", fields[2 + k])))?;
        }
        let mut bbox = BoundingBox::new(nums[0], nums[1], nums[2], nums[3])
            .map_err(|e| err(e.to_string()))?
            .with_class(class_id);
        if let Some(sc) = fields.get(6) {
            let score: f64 = sc.parse().map_err(|_| err(format!("bad score {sc:?}")))?;
            bbox = bbox.with_score(score).map_err(|e| err(e.to_string()))?;
        }
        out.push(BoxRecord { image_id, bbox });
    }
    Ok(out)
}

pub fn format_boxes(records: &[BoxRecord]) -> String {
    let mut s = String::from("# image_id,class_id,x_min,y_min,x_max,y_max[,score]\n");
    for r in records {
        let b = &r.bbox;
        let _ = write!(s, "{},{},{},{},{},{}", r.image_id, b.class_id, b.x_min, b.y_min, b.x_max, b.y_max);
        if let Some(sc) = b.score {
            let _ = write!(s, ",{sc}");
        }
        s.push('\n');
    }
    s
}

/// Groups records by image, restricted to `class_id` when given. Every
/// image id present in either list yields one sample, in ascending id order.
pub fn assemble(gts: &[BoxRecord], dts: &[BoxRecord], class_id: Option<u32>) -> Vec<ImageSample> {
    let mut by_image: BTreeMap<u64, ImageSample> = BTreeMap::new();
    let keep = |r: &&BoxRecord| class_id.is_none_or(|c| r.bbox.class_id == c);
    for r in gts.iter().filter(keep) {
        by_image
            .entry(r.image_id)
            .or_insert_with(|| ImageSample { image_id: r.image_id, ..Default::default() })
            .gts
            .push(r.bbox);
    }
    for r in dts.iter().filter(keep) {
        by_image
            .entry(r.image_id)
            .or_insert_with(|| ImageSample { image_id: r.image_id, ..Default::default() })
            .dts
            .push(r.bbox);
    }
    by_image.into_values().collect()
}

/// Distinct class ids across both lists, ascending.
pub fn class_ids(gts: &[BoxRecord], dts: &[BoxRecord]) -> Vec<u32> {
    let mut ids: Vec<u32> = gts.iter().chain(dts).map(|r| r.bbox.class_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}
