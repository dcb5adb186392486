//! Plain-text and bitmap dumps.
//!
//! Sets are binary PGM (P5), one byte per cell, 255 for members, top row
//! first. Functions are CSV `x,y,value` over integer cell indices with a
//! JSON sidecar describing the lattice.

use std::io::{BufRead, Read, Write};

use serde::{Deserialize, Serialize};

use super::{GranularFunction, GridSet, Lattice};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FunctionHeader {
    #[serde(rename = "L")]
    pub side: f64,
    pub delta: f64,
    pub d: usize,
    pub origin: [f64; 2],
}

impl FunctionHeader {
    pub fn of(lattice: &Lattice) -> Self {
        Self { side: lattice.side(), delta: lattice.delta(), d: 2, origin: lattice.origin() }
    }

    pub fn lattice(&self) -> Result<Lattice> {
        if self.d != 2 {
            return Err(Error::Parse(format!("only d = 2 is supported, header says {}", self.d)));
        }
        let n = (self.side / self.delta).round() as usize;
        Lattice::new(self.origin, self.delta, n)
    }
}

pub fn write_pgm<W: Write>(set: &GridSet, mut w: W) -> Result<()> {
    let n = set.lattice().n();
    write!(w, "P5\n{n} {n}\n255\n")?;
    let mut row = vec![0u8; n];
    for j in (0..n).rev() {
        for (i, b) in row.iter_mut().enumerate() {
            *b = if set.contains(i, j) { 255 } else { 0 };
        }
        w.write_all(&row)?;
    }
    Ok(())
}

/// Reads a P5 bitmap onto `lattice`; any nonzero byte is a member.
pub fn read_pgm<R: Read>(lattice: Lattice, mut r: R) -> Result<GridSet> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < buf.len() && buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < buf.len() && buf[pos] == b'#' {
            while pos < buf.len() && buf[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < buf.len() && !buf[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Parse("truncated PGM header".into()));
        }
        fields.push(String::from_utf8_lossy(&buf[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(Error::Parse(format!("expected P5, found {}", fields[0])));
    }
    let n = lattice.n();
    let (w, h): (usize, usize) = (
        fields[1].parse().map_err(|_| Error::Parse("bad width".into()))?,
        fields[2].parse().map_err(|_| Error::Parse("bad height".into()))?,
    );
    if w != n || h != n {
        return Err(Error::Parse(format!("bitmap is {w}x{h}, lattice is {n}x{n}")));
    }
    let data = buf.get(pos..pos + n * n).ok_or_else(|| Error::Parse("short PGM body".into()))?;
    let mut set = GridSet::empty(lattice);
    for (r, row) in data.chunks(n).enumerate() {
        let j = n - 1 - r;
        for (i, &b) in row.iter().enumerate() {
            if b != 0 {
                set.insert(i, j);
            }
        }
    }
    Ok(set)
}

pub fn write_function_csv<W: Write>(f: &GranularFunction, mut w: W) -> Result<()> {
    writeln!(w, "x,y,value")?;
    let n = f.lattice().n();
    for j in 0..n {
        for i in 0..n {
            writeln!(w, "{i},{j},{:e}", f.get(i, j))?;
        }
    }
    Ok(())
}

pub fn read_function_csv<R: BufRead>(header: &FunctionHeader, r: R) -> Result<GranularFunction> {
    let lattice = header.lattice()?;
    let mut f = GranularFunction::zeros(lattice);
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split(',');
        let mut next = |what: &str| {
            parts.next().ok_or_else(|| Error::Parse(format!("line {}: missing {what}", lineno + 1)))
        };
        let i: usize = next("x")?.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad x", lineno + 1)))?;
        let j: usize = next("y")?.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad y", lineno + 1)))?;
        let v: f64 =
            next("value")?.trim().parse().map_err(|_| Error::Parse(format!("line {}: bad value", lineno + 1)))?;
        if i >= lattice.n() || j >= lattice.n() {
            return Err(Error::Parse(format!("line {}: cell ({i},{j}) outside lattice", lineno + 1)));
        }
        f.set(i, j, v);
    }
    Ok(f)
}

pub fn write_function_header<W: Write>(lattice: &Lattice, w: W) -> Result<()> {
    serde_json::to_writer_pretty(w, &FunctionHeader::of(lattice))?;
    Ok(())
}
