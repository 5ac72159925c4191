//! Text format for m-maps.
//!
//! ```text
//! #mmap n=5 m=3 mode=exact
//! #labels 1 2 3 4 5
//! 1,2,3 4
//! 1,2,4 5
//! ```
//!
//! Fields are separated by tabs, shown above as spaces.
//! Rows are written in rank order; readers accept any order but every subset
//! must occur exactly once.

use crate::error::{Error, Result};
use crate::mdissim::MMap;
use crate::scalar::{Rational, Scalar, ScalarMode};
use crate::subsets::{self, binomial};

/// A map read from text, in whichever mode the header names.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyMMap {
    Exact(MMap<Rational>),
    Float(MMap<f64>),
}

impl AnyMMap {
    pub fn mode(&self) -> ScalarMode {
        match self {
            AnyMMap::Exact(_) => ScalarMode::Exact,
            AnyMMap::Float(_) => ScalarMode::Float,
        }
    }

    pub fn to_float(&self) -> MMap<f64> {
        match self {
            AnyMMap::Exact(m) => m.map_values(|v| v.to_f64()),
            AnyMMap::Float(m) => m.clone(),
        }
    }
}

fn check_label(label: &str) -> Result<()> {
    if label.is_empty() || label.contains([',', '\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "label `{label}` cannot be written to a map file"
        )));
    }
    Ok(())
}

pub fn write_mmap<S: Scalar>(map: &MMap<S>) -> Result<String> {
    for l in map.labels() {
        check_label(l)?;
    }
    let mut out = format!("#mmap n={} m={} mode={}\n#labels", map.n(), map.m(), S::MODE);
    for l in map.labels() {
        out.push('\t');
        out.push_str(l);
    }
    out.push('\n');
    for (subset, value) in map.iter() {
        let names: Vec<&str> = subset.iter().map(|&i| map.labels()[i].as_str()).collect();
        out.push_str(&names.join(","));
        out.push('\t');
        out.push_str(&value.format_literal());
        out.push('\n');
    }
    Ok(out)
}

pub fn read_mmap(text: &str) -> Result<AnyMMap> {
    let header = text.lines().next().ok_or_else(|| Error::format(1, "empty input"))?;
    let (_, _, mode) = parse_header(header)?;
    Ok(match mode {
        ScalarMode::Exact => AnyMMap::Exact(read_mmap_as(text)?),
        ScalarMode::Float => AnyMMap::Float(read_mmap_as(text)?),
    })
}

/// Reads a map whose header mode must match `S`.
pub fn read_mmap_as<S: Scalar>(text: &str) -> Result<MMap<S>> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (_, header) = lines.next().ok_or_else(|| Error::format(1, "empty input"))?;
    let (n, m, mode) = parse_header(header)?;
    if mode != S::MODE {
        return Err(Error::format(1, format!("expected mode={}, found mode={mode}", S::MODE)));
    }
    let (_, label_line) = lines
        .next()
        .ok_or_else(|| Error::format(2, "missing #labels line"))?;
    let mut fields = label_line.split('\t');
    if fields.next() != Some("#labels") {
        return Err(Error::format(2, "expected #labels line"));
    }
    let labels: Vec<String> = fields.map(str::to_string).collect();
    if labels.len() != n {
        return Err(Error::format(
            2,
            format!("header says n={n} but {} labels are listed", labels.len()),
        ));
    }
    if labels.iter().any(|l| l.is_empty()) {
        return Err(Error::format(2, "empty label"));
    }
    if !labels.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::format(2, "labels must be distinct and sorted"));
    }
    if m < 2 || m > n {
        return Err(Error::MOutOfRange { m, n });
    }
    let expected = binomial(n, m);
    let mut values: Vec<Option<S>> = vec![None; expected];
    let mut found = 0;
    for (line_no, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let (subset_text, value_text) = line
            .split_once('\t')
            .ok_or_else(|| Error::format(line_no, "expected `subset<TAB>value`"))?;
        let mut idx = Vec::with_capacity(m);
        for name in subset_text.split(',') {
            let i = labels
                .binary_search_by(|l| l.as_str().cmp(name))
                .map_err(|_| Error::format(line_no, format!("unknown label `{name}`")))?;
            idx.push(i);
        }
        if idx.len() != m {
            return Err(Error::format(
                line_no,
                format!("subset has {} labels, expected {m}", idx.len()),
            ));
        }
        idx.sort_unstable();
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::format(line_no, "repeated label in subset"));
        }
        let value = S::parse_literal(value_text)
            .ok_or_else(|| Error::format(line_no, format!("`{value_text}` is not a number")))?;
        let slot = &mut values[subsets::rank(&idx)];
        if slot.is_some() {
            return Err(Error::format(line_no, format!("duplicate subset `{subset_text}`")));
        }
        *slot = Some(value);
        found += 1;
    }
    if found != expected {
        return Err(Error::format(
            text.lines().count(),
            format!("expected {expected} subsets, found {found}"),
        ));
    }
    MMap::new(labels, m, values.into_iter().map(Option::unwrap).collect())
}

fn parse_header(line: &str) -> Result<(usize, usize, ScalarMode)> {
    let mut parts = line.split_whitespace();
    if parts.next() != Some("#mmap") {
        return Err(Error::format(1, "expected `#mmap n=<n> m=<m> mode=<exact|float>`"));
    }
    let (mut n, mut m, mut mode) = (None, None, None);
    for part in parts {
        let (key, value) = part
            .split_once('=')
            .ok_or_else(|| Error::format(1, format!("malformed header field `{part}`")))?;
        let bad = || Error::format(1, format!("bad value in `{part}`"));
        match key {
            "n" => n = Some(value.parse::<usize>().map_err(|_| bad())?),
            "m" => m = Some(value.parse::<usize>().map_err(|_| bad())?),
            "mode" => mode = Some(ScalarMode::parse(value).ok_or_else(bad)?),
            _ => return Err(Error::format(1, format!("unknown header field `{key}`"))),
        }
    }
    match (n, m, mode) {
        (Some(n), Some(m), Some(mode)) => Ok((n, m, mode)),
        _ => Err(Error::format(1, "header needs n, m and mode")),
    }
}
