use std::collections::BTreeMap;
use std::path::Path;

use super::read_file;
use crate::error::{Error, Result};

/// Captions each image is expected to have; other counts are reported but
/// accepted.
pub const EXPECTED_CAPTIONS_PER_IMAGE: usize = 5;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CaptionCorpus {
    /// Captions per image id, in file order.
    pub by_image: BTreeMap<String, Vec<String>>,
    /// Images whose caption count differs from the expected five.
    pub irregular: Vec<(String, usize)>,
}

impl CaptionCorpus {
    pub fn len(&self) -> usize {
        self.by_image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_image.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[String]> {
        self.by_image.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.by_image.keys().map(String::as_str)
    }
}

/// Parses `image_id<TAB>caption` lines. Blank lines and lines starting with
/// `#` are skipped; CRLF endings are accepted.
pub fn parse_captions(text: &str) -> Result<CaptionCorpus> {
    let mut by_image: BTreeMap<String, Vec<String>> = BTreeMap::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, caption) = line.split_once('\t').ok_or(Error::MalformedCaptionLine { line: idx + 1 })?;
        let id = id.trim();
        if id.is_empty() {
            return Err(Error::MalformedCaptionLine { line: idx + 1 });
        }
        by_image.entry(id.to_owned()).or_default().push(caption.trim().to_owned());
    }
    let irregular: Vec<(String, usize)> = by_image
        .iter()
        .filter(|(_, c)| c.len() != EXPECTED_CAPTIONS_PER_IMAGE)
        .map(|(id, c)| (id.clone(), c.len()))
        .collect();
    for (id, n) in &irregular {
        log::warn!("image {id} has {n} captions, expected {EXPECTED_CAPTIONS_PER_IMAGE}");
    }
    Ok(CaptionCorpus { by_image, irregular })
}

pub fn load_captions(path: impl AsRef<Path>) -> Result<CaptionCorpus> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    let text = String::from_utf8(bytes).map_err(|e| Error::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    parse_captions(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_empty_map() {
        assert!(parse_captions("").unwrap().is_empty());
        assert!(parse_captions("# only a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn two_images_five_captions_each() {
        let mut text = String::new();
        for id in ["b", "a"] {
            for k in 0..5 {
                text.push_str(&format!("{id}\tcaption {k} of {id}\n"));
            }
        }
        let c = parse_captions(&text).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.get("a").unwrap().len(), 5);
        assert_eq!(c.get("b").unwrap()[3], "caption 3 of b");
        assert!(c.irregular.is_empty());
    }

    #[test]
    fn crlf_matches_lf() {
        let lf = "x\tনদীতে নৌকা।\nx\tদুটি নৌকা\n";
        let crlf = lf.replace('\n', "\r\n");
        assert_eq!(parse_captions(lf).unwrap(), parse_captions(&crlf).unwrap());
    }

    #[test]
    fn irregular_counts_are_reported_not_fatal() {
        let c = parse_captions("x\tone\nx\ttwo\n").unwrap();
        assert_eq!(c.irregular, vec![("x".to_string(), 2)]);
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let err = parse_captions("# header\nx\tok\nno tab here\n").unwrap_err();
        assert!(matches!(err, Error::MalformedCaptionLine { line: 3 }));
        assert!(matches!(parse_captions("\tcaption"), Err(Error::MalformedCaptionLine { line: 1 })));
    }

    #[test]
    fn load_from_disk() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.tsv");
        std::fs::write(&p, "a\tb c\n").unwrap();
        assert_eq!(load_captions(&p).unwrap().get("a").unwrap(), &["b c".to_string()]);
        assert!(matches!(load_captions(dir.path().join("missing.tsv")), Err(Error::Io { .. })));
    }
}
