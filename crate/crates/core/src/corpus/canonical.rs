//! Line-delimited record format: one JSON object per line with keys
//! `id,title,directions,ner,extended_ner,genre,label,provenance`.
//!
//! `extended_ner` is omitted while absent. Entity categories travel in an
//! optional parallel array `extended_ner_categories`; readers that do not
//! know it can ignore it.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Provenance, RecipeRecord};
use crate::entities::{Category, Entity, EntitySet};
use crate::error::{Error, Result};
use crate::genre::Genre;

#[derive(Serialize, Deserialize)]
struct Line {
    id: u64,
    title: String,
    directions: Vec<String>,
    ner: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extended_ner: Option<Vec<String>>,
    genre: Option<String>,
    label: Option<u8>,
    provenance: Provenance,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    extended_ner_categories: Option<Vec<String>>,
}

impl From<&RecipeRecord> for Line {
    fn from(r: &RecipeRecord) -> Line {
        let (surfaces, categories) = match &r.extended_ner {
            Some(set) => (
                Some(set.iter().map(|e| e.surface.clone()).collect()),
                Some(set.iter().map(|e| e.category.as_str().to_owned()).collect()),
            ),
            None => (None, None),
        };
        Line {
            id: r.id,
            title: r.title.clone(),
            directions: r.directions.clone(),
            ner: r.ner.clone(),
            extended_ner: surfaces,
            genre: r.genre.map(|g| g.slug().to_owned()),
            label: r.genre.map(Genre::id),
            provenance: r.provenance,
            extended_ner_categories: categories,
        }
    }
}

impl Line {
    fn into_record(self, line_no: usize) -> Result<RecipeRecord> {
        let ctx = |msg: String| Error::Validation(format!("line {line_no}: {msg}"));
        let by_name = self
            .genre
            .as_deref()
            .map(str::parse::<Genre>)
            .transpose()
            .map_err(|e| ctx(e.to_string()))?;
        let by_label = self
            .label
            .map(Genre::from_id)
            .transpose()
            .map_err(|e| ctx(e.to_string()))?;
        let genre = match (by_name, by_label) {
            (Some(a), Some(b)) if a != b => return Err(ctx("genre and label disagree".into())),
            (a, b) => a.or(b),
        };
        let extended_ner = match self.extended_ner {
            None => None,
            Some(surfaces) => {
                let cats = self.extended_ner_categories.unwrap_or_default();
                let mut set = EntitySet::new();
                for (k, s) in surfaces.iter().enumerate() {
                    let cat = cats.get(k).and_then(|c| Category::parse(c)).unwrap_or(Category::Other);
                    if let Some(e) = Entity::new(s, cat) {
                        set.insert(e);
                    }
                }
                Some(set)
            }
        };
        let record = RecipeRecord {
            id: self.id,
            title: self.title,
            directions: self.directions,
            ner: self.ner,
            extended_ner,
            genre,
            provenance: self.provenance,
        };
        record.validate().map_err(|e| ctx(e.to_string()))?;
        Ok(record)
    }
}

pub fn read_canonical(path: &Path) -> Result<Vec<RecipeRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_canonical_from(file)
}

pub fn read_canonical_from<R: Read>(reader: R) -> Result<Vec<RecipeRecord>> {
    let mut out = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io("<records>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line = serde_json::from_str(&line).map_err(|e| Error::Format(format!("line {}: {e}", k + 1)))?;
        let record = parsed.into_record(k + 1)?;
        if !seen.insert(record.id) {
            return Err(Error::Validation(format!(
                "line {}: duplicate record id {}",
                k + 1,
                record.id
            )));
        }
        out.push(record);
    }
    Ok(out)
}

pub fn write_canonical(path: &Path, records: &[RecipeRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_canonical_to(&mut w, records)?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_canonical_to<W: Write>(mut w: W, records: &[RecipeRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, &Line::from(r))?;
        w.write_all(b"\n").map_err(|e| Error::io("<records>", e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entities::extract_pattern;

    #[test]
    fn key_order_and_absent_extended() {
        let r = RecipeRecord {
            id: 3,
            title: "Lime Sherbet".into(),
            directions: vec!["Freeze.".into()],
            ner: vec!["milk".into()],
            extended_ner: None,
            genre: Some(Genre::Drinks),
            provenance: Provenance::Human,
        };
        let mut buf = Vec::new();
        write_canonical_to(&mut buf, std::slice::from_ref(&r)).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "{\"id\":3,\"title\":\"Lime Sherbet\",\"directions\":[\"Freeze.\"],\"ner\":[\"milk\"],\"genre\":\"drinks\",\"label\":2,\"provenance\":\"human\"}\n"
        );
        assert_eq!(read_canonical_from(text.as_bytes()).unwrap(), vec![r]);
    }

    #[test]
    fn categories_survive() {
        let mut r = RecipeRecord {
            id: 0,
            title: "x".into(),
            directions: vec!["Bake 40 minutes.".into()],
            ner: vec![],
            extended_ner: None,
            genre: None,
            provenance: Provenance::Unlabeled,
        };
        r.extended_ner = Some(extract_pattern("Bake 40 minutes. Spray pan with Pam."));
        let mut buf = Vec::new();
        write_canonical_to(&mut buf, std::slice::from_ref(&r)).unwrap();
        let back = read_canonical_from(buf.as_slice()).unwrap();
        assert_eq!(back, vec![r]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let line = "{\"id\":1,\"title\":\"a\",\"directions\":[\"x\"],\"ner\":[],\"genre\":null,\"label\":null,\"provenance\":\"unlabeled\"}\n";
        let text = format!("{line}{line}");
        assert!(read_canonical_from(text.as_bytes()).is_err());
    }
}
