use std::collections::HashSet;
use std::fs;
use std::path::Path;

use super::split_utf8_lines;
use crate::error::{Error, Result};

/// A surface form with its gold morpheme boundaries, as codepoint offsets
/// strictly inside the surface.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MorphEntry {
    pub surface: String,
    pub boundaries: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MorphLexicon {
    pub entries: Vec<MorphEntry>,
}

impl MorphLexicon {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Parses `surface<TAB>morph+morph+...` lines. Blank lines are ignored.
    pub fn parse_str(text: &str, source_name: &str) -> Result<Self> {
        parse_lines(text.lines(), source_name)
    }
}

pub fn load_morph_lexicon(path: impl AsRef<Path>) -> Result<MorphLexicon> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let name = path.display().to_string();
    let lines = split_utf8_lines(&bytes, &name)?;
    parse_lines(lines.into_iter(), &name)
}

fn parse_lines<'a>(lines: impl Iterator<Item = &'a str>, source_name: &str) -> Result<MorphLexicon> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (surface, morphs) = line
            .split_once('\t')
            .ok_or_else(|| Error::parse(source_name, lineno, "expected `surface<TAB>morphs`"))?;
        let surface = crate::text::normalize(surface);
        let morphs: Vec<String> = morphs.split('+').map(crate::text::normalize).collect();
        if surface.is_empty() || morphs.iter().any(String::is_empty) {
            return Err(Error::parse(source_name, lineno, "empty surface or morph"));
        }
        if morphs.concat() != surface {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("morphs `{}` do not concatenate to `{surface}`", morphs.join("+")),
            ));
        }
        if !seen.insert(surface.clone()) {
            return Err(Error::parse(
                source_name,
                lineno,
                format!("duplicate surface `{surface}`"),
            ));
        }
        let mut boundaries = Vec::with_capacity(morphs.len() - 1);
        let mut offset = 0;
        for m in &morphs[..morphs.len() - 1] {
            offset += m.chars().count();
            boundaries.push(offset);
        }
        entries.push(MorphEntry { surface, boundaries });
    }
    Ok(MorphLexicon { entries })
}
