//! Extended-XYZ frames: atom count, a `key=value` comment line carrying the
//! lattice and column layout, then one line per atom.

use std::io::{BufRead, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{ElementState, ElementTable, Lattice, MaterialSample, Vec3};

/// One parsed frame with species kept as symbols.
#[derive(Clone, Debug, PartialEq)]
pub struct ExtXyzRecord {
    pub lattice: Lattice,
    pub symbols: Vec<String>,
    pub positions: Vec<Vec3>,
    /// Optional per-atom element logits (`logits:R:d` column).
    pub logits: Option<Array2<f64>>,
    /// Comment-line entries other than `Lattice`, `Properties` and `pbc`.
    pub info: Vec<(String, String)>,
}

impl ExtXyzRecord {
    /// Record for a sample in the assignments state. Ghost atoms are dropped
    /// unless `include_ghosts` is set.
    pub fn from_sample(sample: &MaterialSample, table: &ElementTable, include_ghosts: bool) -> Result<Self> {
        let species = sample.assignments()?;
        let mut symbols = Vec::new();
        let mut positions = Vec::new();
        for (&e, p) in species.iter().zip(&sample.positions) {
            table.check_index(e)?;
            if table.is_ghost(e) && !include_ghosts {
                continue;
            }
            symbols.push(table.name(e).to_string());
            positions.push(*p);
        }
        Ok(Self {
            lattice: sample.lattice.clone(),
            symbols,
            positions,
            logits: None,
            info: Vec::new(),
        })
    }

    /// Record carrying logits for every slot; symbols are the argmax elements.
    pub fn with_logits(sample: &MaterialSample, table: &ElementTable) -> Result<Self> {
        let logits = sample.logits()?;
        if logits.ncols() != table.len() {
            return Err(Error::LengthMismatch(logits.ncols(), table.len()));
        }
        let symbols = crate::charge::argmax_assignments(logits)
            .into_iter()
            .map(|e| table.name(e).to_string())
            .collect();
        Ok(Self {
            lattice: sample.lattice.clone(),
            symbols,
            positions: sample.positions.clone(),
            logits: Some(logits.clone()),
            info: Vec::new(),
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn assignments(&self, table: &ElementTable) -> Result<Vec<usize>> {
        self.symbols
            .iter()
            .map(|s| {
                table
                    .index_of(s)
                    .ok_or_else(|| Error::InvalidTable(format!("symbol `{s}` is not in the element table")))
            })
            .collect()
    }

    pub fn to_sample(&self, table: &ElementTable) -> Result<MaterialSample> {
        let elements = ElementState::Assignments(self.assignments(table)?);
        MaterialSample::new(self.lattice.clone(), self.positions.clone(), elements)
    }

    /// Sample in the logits state; fails when the frame has no logits column.
    pub fn to_logit_sample(&self) -> Result<MaterialSample> {
        let logits = self
            .logits
            .clone()
            .ok_or_else(|| Error::Parse { line: 2, message: "no logits column".into() })?;
        MaterialSample::new(self.lattice.clone(), self.positions.clone(), ElementState::Logits(logits))
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{}", self.len())?;
        let rows = self.lattice.rows();
        let lat: Vec<String> = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| format_float(rows[(i, j)]))
            .collect();
        write!(w, "Lattice=\"{}\" Properties=species:S:1:pos:R:3", lat.join(" "))?;
        if let Some(l) = &self.logits {
            write!(w, ":logits:R:{}", l.ncols())?;
        }
        for (k, v) in &self.info {
            if v.contains(char::is_whitespace) {
                write!(w, " {k}=\"{v}\"")?;
            } else {
                write!(w, " {k}={v}")?;
            }
        }
        writeln!(w, " pbc=\"T T T\"")?;
        for (i, (s, p)) in self.symbols.iter().zip(&self.positions).enumerate() {
            write!(w, "{s} {} {} {}", format_float(p[0]), format_float(p[1]), format_float(p[2]))?;
            if let Some(l) = &self.logits {
                for v in l.row(i) {
                    write!(w, " {}", format_float(*v))?;
                }
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn to_string_lossless(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Shortest decimal text that parses back to the same `f64`.
fn format_float(v: f64) -> String {
    format!("{v:?}")
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_float(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

/// Splits `key=value key="quoted value"` pairs; bare keys map to `T`.
fn comment_pairs(line: &str, lineno: usize) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut chars = line.trim().chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        if chars.peek().is_none() {
            return Ok(out);
        }
        let mut key = String::new();
        while let Some(&c) = chars.peek() {
            if c == '=' || c.is_whitespace() {
                break;
            }
            key.push(c);
            chars.next();
        }
        if chars.peek() != Some(&'=') {
            out.push((key, "T".into()));
            continue;
        }
        chars.next();
        let mut value = String::new();
        if chars.peek() == Some(&'"') {
            chars.next();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(c) => value.push(c),
                    None => return Err(parse_err(lineno, "unterminated quote")),
                }
            }
        } else {
            while let Some(&c) = chars.peek() {
                if c.is_whitespace() {
                    break;
                }
                value.push(c);
                chars.next();
            }
        }
        out.push((key, value));
    }
}

struct Column {
    name: String,
    kind: char,
    width: usize,
}

fn parse_properties(props: &str, line: usize) -> Result<Vec<Column>> {
    let parts: Vec<&str> = props.split(':').collect();
    if !parts.len().is_multiple_of(3) {
        return Err(parse_err(line, format!("malformed Properties `{props}`")));
    }
    parts
        .chunks(3)
        .map(|c| {
            let width = c[2]
                .parse()
                .map_err(|_| parse_err(line, format!("bad column width `{}`", c[2])))?;
            let kind = match c[1] {
                "S" | "R" | "I" | "L" => c[1].chars().next().unwrap(),
                other => return Err(parse_err(line, format!("unknown column type `{other}`"))),
            };
            Ok(Column {
                name: c[0].to_string(),
                kind,
                width,
            })
        })
        .collect()
}

/// Reads one frame. Line numbers in errors are 1-based.
pub fn read_extxyz<R: BufRead>(reader: R) -> Result<ExtXyzRecord> {
    let mut lines = reader.lines();
    let mut next = |lineno: usize| -> Result<String> {
        match lines.next() {
            Some(l) => Ok(l?),
            None => Err(parse_err(lineno, "unexpected end of file")),
        }
    };
    let head = next(1)?;
    let n: usize = head
        .trim()
        .parse()
        .map_err(|_| parse_err(1, format!("atom count `{}` is not an integer", head.trim())))?;
    let comment = next(2)?;
    let mut lattice = None;
    let mut columns = None;
    let mut info = Vec::new();
    for (k, v) in comment_pairs(&comment, 2)? {
        match k.as_str() {
            "Lattice" => {
                let vals: Vec<f64> = v
                    .split_whitespace()
                    .map(|t| parse_float(t, 2))
                    .collect::<Result<_>>()?;
                if vals.len() != 9 {
                    return Err(parse_err(2, format!("Lattice has {} numbers, need 9", vals.len())));
                }
                let rows = [
                    [vals[0], vals[1], vals[2]],
                    [vals[3], vals[4], vals[5]],
                    [vals[6], vals[7], vals[8]],
                ];
                lattice = Some(Lattice::from_rows(rows).map_err(|e| parse_err(2, e.to_string()))?);
            }
            "Properties" => columns = Some(parse_properties(&v, 2)?),
            "pbc" => {}
            _ => info.push((k, v)),
        }
    }
    let lattice = lattice.ok_or_else(|| parse_err(2, "missing Lattice"))?;
    let columns = columns.unwrap_or_else(|| {
        vec![
            Column { name: "species".into(), kind: 'S', width: 1 },
            Column { name: "pos".into(), kind: 'R', width: 3 },
        ]
    });
    let find = |name: &str| {
        let mut offset = 0;
        for c in &columns {
            if c.name == name {
                return Some((offset, c));
            }
            offset += c.width;
        }
        None
    };
    let (species_at, species_col) = find("species").ok_or_else(|| parse_err(2, "no species column"))?;
    let (pos_at, pos_col) = find("pos").ok_or_else(|| parse_err(2, "no pos column"))?;
    if species_col.kind != 'S' || species_col.width != 1 || pos_col.kind != 'R' || pos_col.width != 3 {
        return Err(parse_err(2, "expected species:S:1 and pos:R:3"));
    }
    let logits_col = find("logits");
    if let Some((_, c)) = logits_col {
        if c.kind != 'R' || c.width == 0 {
            return Err(parse_err(2, "logits column must be real-valued"));
        }
    }
    let total_width: usize = columns.iter().map(|c| c.width).sum();

    let mut symbols = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let mut logit_values = Vec::new();
    for i in 0..n {
        let lineno = i + 3;
        let line = next(lineno)?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != total_width {
            return Err(parse_err(
                lineno,
                format!("expected {total_width} fields, found {}", toks.len()),
            ));
        }
        symbols.push(toks[species_at].to_string());
        positions.push(Vec3::new(
            parse_float(toks[pos_at], lineno)?,
            parse_float(toks[pos_at + 1], lineno)?,
            parse_float(toks[pos_at + 2], lineno)?,
        ));
        if let Some((at, c)) = logits_col {
            for t in &toks[at..at + c.width] {
                logit_values.push(parse_float(t, lineno)?);
            }
        }
    }
    let logits = logits_col
        .map(|(_, c)| Array2::from_shape_vec((n, c.width), logit_values).expect("shape checked per line"));
    Ok(ExtXyzRecord {
        lattice,
        symbols,
        positions,
        logits,
        info,
    })
}

/// Writes a sample in the assignments state.
pub fn write_extxyz<W: Write>(w: W, sample: &MaterialSample, table: &ElementTable, include_ghosts: bool) -> Result<()> {
    ExtXyzRecord::from_sample(sample, table, include_ghosts)?.write(w)
}
