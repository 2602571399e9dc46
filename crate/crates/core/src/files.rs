//! On-disk artifact formats.
//!
//! Four text formats cover the pipeline: word maps (the world's tokens),
//! label maps (plain PGM, one gray level per label), model snapshots (the
//! global topic-word counts), and the two CSVs (paths, sweep results). All
//! of them carry `#` comment lines up front that echo the producing
//! command's resolved configuration and seed; parsers collect those lines
//! into [`Meta`] verbatim, so a load and re-save reproduces the file byte
//! for byte.

use std::fmt::Write as _;
use std::path::Path as FsPath;
use std::str::FromStr;

use crate::eval::{LabelMap, SweepRow};
use crate::explore::{Path, Policy};
use crate::grid::{CellCoord, GridWorld};
use crate::model::ModelSnapshot;
use crate::{Error, Result};

/// Header comments of an artifact, one entry per `#` line. Writers mostly
/// fill it with `key: value` pairs via [`Meta::push`], but arbitrary lines
/// survive a round trip untouched.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Meta(Vec<String>);

impl Meta {
    pub fn new() -> Meta {
        Meta(Vec::new())
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push(format!("{key}: {value}"));
    }

    pub fn push_line(&mut self, line: impl Into<String>) {
        self.0.push(line.into());
    }

    /// Value of the first `key: value` line matching `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.0
            .iter()
            .find_map(|l| l.strip_prefix(key).and_then(|rest| rest.strip_prefix(": ")))
    }

    pub fn lines(&self) -> &[String] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

fn write_meta(out: &mut String, meta: &Meta) {
    for line in meta.lines() {
        if line.is_empty() {
            out.push_str("#\n");
        } else {
            out.push_str("# ");
            out.push_str(line);
            out.push('\n');
        }
    }
}

/// Splits input into collected comment lines and numbered content lines.
fn split_content(s: &str) -> (Meta, Vec<(usize, &str)>) {
    let mut meta = Meta::new();
    let mut rows = Vec::new();
    for (i, raw) in s.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            meta.push_line(rest.strip_prefix(' ').unwrap_or(rest));
        } else {
            rows.push((i + 1, line));
        }
    }
    (meta, rows)
}

fn parse_err(src: &str, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: src.to_string(),
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: FromStr>(src: &str, line: usize, tok: &str, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(src, line, format!("bad {what}: {tok:?}")))
}

// ---- word maps ----

pub fn word_map_to_string(world: &GridWorld, meta: &Meta) -> String {
    let mut out = String::new();
    write_meta(&mut out, meta);
    let _ = writeln!(
        out,
        "WORDMAP {} {} {}",
        world.width(),
        world.height(),
        world.vocab_size()
    );
    for idx in 0..world.num_cells() {
        let tokens = world.tokens(world.coord(idx));
        let _ = write!(out, "{}", tokens.len());
        for t in tokens {
            let _ = write!(out, " {t}");
        }
        out.push('\n');
    }
    out
}

pub fn word_map_from_str(s: &str) -> Result<(GridWorld, Meta)> {
    parse_word_map(s, "<word map>")
}

fn parse_word_map(s: &str, src: &str) -> Result<(GridWorld, Meta)> {
    let (meta, rows) = split_content(s);
    let mut it = rows.into_iter();
    let (line, header) = it
        .next()
        .ok_or_else(|| parse_err(src, 1, "empty word map"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 || fields[0] != "WORDMAP" {
        return Err(parse_err(src, line, "expected header \"WORDMAP W H V\""));
    }
    let width: usize = parse_num(src, line, fields[1], "width")?;
    let height: usize = parse_num(src, line, fields[2], "height")?;
    let vocab: usize = parse_num(src, line, fields[3], "vocab size")?;

    let mut cells = Vec::with_capacity(width * height);
    for _ in 0..width.saturating_mul(height) {
        let (line, row) = it
            .next()
            .ok_or_else(|| parse_err(src, 0, format!("expected {} cell lines", width * height)))?;
        let mut toks = row.split_whitespace();
        let n: usize = match toks.next() {
            Some(t) => parse_num(src, line, t, "token count")?,
            None => return Err(parse_err(src, line, "missing token count")),
        };
        let ids: Vec<usize> = toks
            .map(|t| parse_num(src, line, t, "token id"))
            .collect::<Result<_>>()?;
        if ids.len() != n {
            return Err(parse_err(
                src,
                line,
                format!("cell declares {n} tokens but lists {}", ids.len()),
            ));
        }
        cells.push(ids);
    }
    if let Some((line, _)) = it.next() {
        return Err(parse_err(src, line, "trailing content after cell lines"));
    }
    let world = GridWorld::new(width, height, vocab, cells)
        .map_err(|e| parse_err(src, 0, e.to_string()))?;
    Ok((world, meta))
}

pub fn write_word_map(path: &FsPath, world: &GridWorld, meta: &Meta) -> Result<()> {
    std::fs::write(path, word_map_to_string(world, meta))?;
    Ok(())
}

pub fn read_word_map(path: &FsPath) -> Result<(GridWorld, Meta)> {
    parse_word_map(&std::fs::read_to_string(path)?, &path.display().to_string())
}

// ---- label maps (plain PGM) ----

pub fn label_map_to_string(map: &LabelMap, maxval: usize, meta: &Meta) -> String {
    assert!(maxval >= 1, "PGM maxval must be at least 1");
    assert!(
        map.labels().iter().all(|&z| z <= maxval),
        "label exceeds maxval {maxval}"
    );
    let mut out = String::from("P2\n");
    write_meta(&mut out, meta);
    let _ = writeln!(out, "{} {}", map.width(), map.height());
    let _ = writeln!(out, "{maxval}");
    for y in 0..map.height() {
        for x in 0..map.width() {
            if x > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", map.label(CellCoord::new(x, y)));
        }
        out.push('\n');
    }
    out
}

pub fn label_map_from_str(s: &str) -> Result<(LabelMap, usize, Meta)> {
    parse_label_map(s, "<label map>")
}

fn parse_label_map(s: &str, src: &str) -> Result<(LabelMap, usize, Meta)> {
    let (meta, rows) = split_content(s);
    let mut tokens: Vec<(usize, &str)> = Vec::new();
    for (line, row) in rows {
        tokens.extend(row.split_whitespace().map(|t| (line, t)));
    }
    let mut it = tokens.into_iter();
    match it.next() {
        Some((_, "P2")) => {}
        Some((line, tok)) => return Err(parse_err(src, line, format!("expected P2 magic, got {tok:?}"))),
        None => return Err(parse_err(src, 1, "empty label map")),
    }
    let mut next_num = |what: &str| -> Result<(usize, usize)> {
        match it.next() {
            Some((line, tok)) => Ok((line, parse_num(src, line, tok, what)?)),
            None => Err(parse_err(src, 0, format!("missing {what}"))),
        }
    };
    let (_, width) = next_num("width")?;
    let (_, height) = next_num("height")?;
    let (maxline, maxval) = next_num("maxval")?;
    if maxval == 0 {
        return Err(parse_err(src, maxline, "maxval must be at least 1"));
    }
    let mut labels = Vec::with_capacity(width * height);
    for _ in 0..width.saturating_mul(height) {
        let (line, v) = next_num("label")?;
        if v > maxval {
            return Err(parse_err(src, line, format!("label {v} exceeds maxval {maxval}")));
        }
        labels.push(v);
    }
    if let Some((line, _)) = it.next() {
        return Err(parse_err(src, line, "trailing content after raster"));
    }
    let map = LabelMap::new(width, height, labels).map_err(|e| parse_err(src, 0, e.to_string()))?;
    Ok((map, maxval, meta))
}

pub fn write_label_map(path: &FsPath, map: &LabelMap, maxval: usize, meta: &Meta) -> Result<()> {
    std::fs::write(path, label_map_to_string(map, maxval, meta))?;
    Ok(())
}

pub fn read_label_map(path: &FsPath) -> Result<(LabelMap, usize, Meta)> {
    parse_label_map(&std::fs::read_to_string(path)?, &path.display().to_string())
}

// ---- model snapshots ----

pub fn snapshot_to_string(snap: &ModelSnapshot, meta: &Meta) -> String {
    let mut out = String::new();
    write_meta(&mut out, meta);
    out.push_str("TOPICMODEL 1\n");
    let _ = writeln!(out, "{} {}", snap.topics, snap.vocab_size);
    let _ = writeln!(
        out,
        "{} {} {}",
        snap.alpha, snap.beta, snap.neighborhood_radius
    );
    for k in 0..snap.topics {
        for v in 0..snap.vocab_size {
            if v > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{}", snap.count(k, v));
        }
        out.push('\n');
    }
    out
}

pub fn snapshot_from_str(s: &str) -> Result<(ModelSnapshot, Meta)> {
    parse_snapshot(s, "<snapshot>")
}

fn parse_snapshot(s: &str, src: &str) -> Result<(ModelSnapshot, Meta)> {
    let (meta, rows) = split_content(s);
    let mut it = rows.into_iter();
    let (line, magic) = it.next().ok_or_else(|| parse_err(src, 1, "empty snapshot"))?;
    if magic.split_whitespace().collect::<Vec<_>>() != ["TOPICMODEL", "1"] {
        return Err(parse_err(src, line, "expected header \"TOPICMODEL 1\""));
    }
    let (line, dims) = it.next().ok_or_else(|| parse_err(src, 0, "missing dimensions"))?;
    let fields: Vec<&str> = dims.split_whitespace().collect();
    if fields.len() != 2 {
        return Err(parse_err(src, line, "expected \"K V\""));
    }
    let topics: usize = parse_num(src, line, fields[0], "topic count")?;
    let vocab: usize = parse_num(src, line, fields[1], "vocab size")?;

    let (line, hy) = it.next().ok_or_else(|| parse_err(src, 0, "missing hyperparameters"))?;
    let fields: Vec<&str> = hy.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(parse_err(src, line, "expected \"alpha beta radius\""));
    }
    let alpha: f64 = parse_num(src, line, fields[0], "alpha")?;
    let beta: f64 = parse_num(src, line, fields[1], "beta")?;
    let radius: usize = parse_num(src, line, fields[2], "radius")?;

    let mut counts = Vec::with_capacity(topics * vocab);
    for k in 0..topics {
        let (line, row) = it
            .next()
            .ok_or_else(|| parse_err(src, 0, format!("missing count row for topic {k}")))?;
        let row_counts: Vec<u32> = row
            .split_whitespace()
            .map(|t| parse_num(src, line, t, "count"))
            .collect::<Result<_>>()?;
        if row_counts.len() != vocab {
            return Err(parse_err(
                src,
                line,
                format!("topic row holds {} counts, expected {vocab}", row_counts.len()),
            ));
        }
        counts.extend(row_counts);
    }
    if let Some((line, _)) = it.next() {
        return Err(parse_err(src, line, "trailing content after count rows"));
    }
    let snap = ModelSnapshot::from_counts(topics, vocab, alpha, beta, radius, counts)
        .map_err(|e| parse_err(src, 0, e.to_string()))?;
    Ok((snap, meta))
}

pub fn write_snapshot(path: &FsPath, snap: &ModelSnapshot, meta: &Meta) -> Result<()> {
    std::fs::write(path, snapshot_to_string(snap, meta))?;
    Ok(())
}

pub fn read_snapshot(path: &FsPath) -> Result<(ModelSnapshot, Meta)> {
    parse_snapshot(&std::fs::read_to_string(path)?, &path.display().to_string())
}

// ---- path CSV ----

pub fn path_to_csv(path: &Path, meta: &Meta) -> String {
    let mut out = String::new();
    write_meta(&mut out, meta);
    out.push_str("t,x,y\n");
    for (i, c) in path.steps().iter().enumerate() {
        let _ = writeln!(out, "{},{},{}", i + 1, c.x, c.y);
    }
    out
}

pub fn path_from_csv(s: &str) -> Result<(Vec<CellCoord>, Meta)> {
    parse_path_csv(s, "<path>")
}

fn parse_path_csv(s: &str, src: &str) -> Result<(Vec<CellCoord>, Meta)> {
    let (meta, rows) = split_content(s);
    let mut it = rows.into_iter();
    let (line, header) = it.next().ok_or_else(|| parse_err(src, 1, "empty path file"))?;
    if header.trim() != "t,x,y" {
        return Err(parse_err(src, line, "expected header \"t,x,y\""));
    }
    let mut steps = Vec::new();
    for (line, row) in it {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 3 {
            return Err(parse_err(src, line, "expected 3 fields"));
        }
        let t: usize = parse_num(src, line, fields[0].trim(), "timestamp")?;
        if t != steps.len() + 1 {
            return Err(parse_err(
                src,
                line,
                format!("timestamp {t} out of order, expected {}", steps.len() + 1),
            ));
        }
        let x: usize = parse_num(src, line, fields[1].trim(), "x")?;
        let y: usize = parse_num(src, line, fields[2].trim(), "y")?;
        steps.push(CellCoord::new(x, y));
    }
    Ok((steps, meta))
}

pub fn write_path_csv(path: &FsPath, p: &Path, meta: &Meta) -> Result<()> {
    std::fs::write(path, path_to_csv(p, meta))?;
    Ok(())
}

pub fn read_path_csv(path: &FsPath) -> Result<(Vec<CellCoord>, Meta)> {
    parse_path_csv(&std::fs::read_to_string(path)?, &path.display().to_string())
}

// ---- results CSV ----

pub const RESULTS_HEADER: &str =
    "world_id,policy,length,restart_seed,mi_vs_truth_bits,mi_vs_batch_bits,h_truth_bits,wall_ms";

pub fn results_to_csv(rows: &[SweepRow], meta: &Meta) -> String {
    let mut out = String::new();
    write_meta(&mut out, meta);
    out.push_str(RESULTS_HEADER);
    out.push('\n');
    for r in rows {
        assert!(
            !r.world_id.contains([',', '\n']),
            "world id {:?} cannot appear in CSV",
            r.world_id
        );
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.world_id,
            r.policy,
            r.length,
            r.restart_seed,
            r.mi_vs_truth_bits,
            r.mi_vs_batch_bits,
            r.h_truth_bits,
            r.wall_ms
        );
    }
    out
}

pub fn results_from_csv(s: &str) -> Result<(Vec<SweepRow>, Meta)> {
    parse_results_csv(s, "<results>")
}

fn parse_results_csv(s: &str, src: &str) -> Result<(Vec<SweepRow>, Meta)> {
    let (meta, raw) = split_content(s);
    let mut it = raw.into_iter();
    let (line, header) = it.next().ok_or_else(|| parse_err(src, 1, "empty results file"))?;
    if header.trim() != RESULTS_HEADER {
        return Err(parse_err(src, line, "unexpected results header"));
    }
    let mut rows = Vec::new();
    for (line, row) in it {
        let fields: Vec<&str> = row.split(',').collect();
        if fields.len() != 8 {
            return Err(parse_err(src, line, format!("expected 8 fields, got {}", fields.len())));
        }
        rows.push(SweepRow {
            world_id: fields[0].to_string(),
            policy: fields[1]
                .parse::<Policy>()
                .map_err(|e| parse_err(src, line, e.to_string()))?,
            length: parse_num(src, line, fields[2], "length")?,
            restart_seed: parse_num(src, line, fields[3], "seed")?,
            mi_vs_truth_bits: parse_num(src, line, fields[4], "mi_vs_truth_bits")?,
            mi_vs_batch_bits: parse_num(src, line, fields[5], "mi_vs_batch_bits")?,
            h_truth_bits: parse_num(src, line, fields[6], "h_truth_bits")?,
            wall_ms: parse_num(src, line, fields[7], "wall_ms")?,
        });
    }
    Ok((rows, meta))
}

pub fn write_results_csv(path: &FsPath, rows: &[SweepRow], meta: &Meta) -> Result<()> {
    std::fs::write(path, results_to_csv(rows, meta))?;
    Ok(())
}

pub fn read_results_csv(path: &FsPath) -> Result<(Vec<SweepRow>, Meta)> {
    parse_results_csv(&std::fs::read_to_string(path)?, &path.display().to_string())
}
