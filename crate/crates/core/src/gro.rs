//! Fixed-width `.gro` coordinate files.
//!
//! Atom records are `%5d%-5s%5s%5d%8.3f%8.3f%8.3f` optionally followed by
//! velocities `%8.4f%8.4f%8.4f`; the last line holds the box lengths.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pbc::{SimBox, Vec3};
use crate::state::State;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroAtom {
    pub res_number: usize,
    pub res_name: String,
    pub atom_name: String,
}

impl GroAtom {
    pub fn new(res_number: usize, res_name: &str, atom_name: &str) -> Self {
        GroAtom {
            res_number,
            res_name: res_name.to_string(),
            atom_name: atom_name.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroFrame {
    pub title: String,
    pub atoms: Vec<GroAtom>,
    pub positions: Vec<Vec3>,
    pub velocities: Option<Vec<Vec3>>,
    pub box_lengths: Vec3,
}

impl GroFrame {
    /// Periodic state built from the frame; missing velocities are zero.
    pub fn to_state(&self) -> Result<State> {
        let simbox = SimBox::periodic(self.box_lengths)?;
        let mut state = State::new(self.positions.clone(), simbox);
        if let Some(v) = &self.velocities {
            state.velocities = v.clone();
        }
        Ok(state)
    }
}

fn field<'a>(line: &'a str, lineno: usize, range: std::ops::Range<usize>, what: &str) -> Result<&'a str> {
    line.get(range.clone()).ok_or_else(|| Error::GroParse {
        line: lineno,
        msg: format!("line too short for {what} (columns {}..{})", range.start + 1, range.end),
    })
}

fn parse_f64(s: &str, lineno: usize, what: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|_| Error::GroParse {
        line: lineno,
        msg: format!("cannot parse {what} from {s:?}"),
    })
}

pub fn read_gro(text: &str) -> Result<GroFrame> {
    let mut lines = text.lines();
    let title = lines
        .next()
        .ok_or_else(|| Error::GroParse { line: 1, msg: "missing title line".into() })?
        .to_string();
    let count_line = lines
        .next()
        .ok_or_else(|| Error::GroParse { line: 2, msg: "missing atom-count line".into() })?;
    let n: usize = count_line.trim().parse().map_err(|_| Error::GroParse {
        line: 2,
        msg: format!("invalid atom count {count_line:?}"),
    })?;

    let rest: Vec<&str> = lines.collect();
    if rest.len() < n + 1 {
        return Err(Error::GroParse {
            line: 3 + rest.len(),
            msg: format!(
                "atom count says {n} but only {} record line(s) before end of file",
                rest.len().saturating_sub(1)
            ),
        });
    }

    let mut atoms = Vec::with_capacity(n);
    let mut positions = Vec::with_capacity(n);
    let mut velocities: Vec<Vec3> = Vec::new();
    let mut with_velocities = None;
    for (k, line) in rest[..n].iter().enumerate() {
        let lineno = k + 3;
        if !line.is_ascii() {
            return Err(Error::GroParse { line: lineno, msg: "non-ASCII record".into() });
        }
        let res_number = field(line, lineno, 0..5, "residue number")?
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::GroParse { line: lineno, msg: "invalid residue number".into() })?;
        let res_name = field(line, lineno, 5..10, "residue name")?.trim().to_string();
        let atom_name = field(line, lineno, 10..15, "atom name")?.trim().to_string();
        field(line, lineno, 15..20, "atom number")?
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::GroParse { line: lineno, msg: "invalid atom number".into() })?;
        let mut xyz = [0.0; 3];
        for (d, c) in xyz.iter_mut().enumerate() {
            let start = 20 + 8 * d;
            *c = parse_f64(field(line, lineno, start..start + 8, "coordinate")?, lineno, "coordinate")?;
        }
        positions.push(Vec3::from(xyz));

        let has_v = line.trim_end().len() > 44;
        match with_velocities {
            None => with_velocities = Some(has_v),
            Some(prev) if prev != has_v => {
                return Err(Error::GroParse {
                    line: lineno,
                    msg: "velocities present on some records but not others".into(),
                })
            }
            _ => {}
        }
        if has_v {
            let mut v = [0.0; 3];
            for (d, c) in v.iter_mut().enumerate() {
                let start = 44 + 8 * d;
                *c = parse_f64(field(line, lineno, start..start + 8, "velocity")?, lineno, "velocity")?;
            }
            velocities.push(Vec3::from(v));
        }
        atoms.push(GroAtom { res_number, res_name, atom_name });
    }

    let box_lineno = n + 3;
    let box_line = rest[n];
    let vals: Vec<f64> = box_line
        .split_whitespace()
        .map(|s| parse_f64(s, box_lineno, "box length"))
        .collect::<Result<_>>()?;
    if vals.len() != 3 {
        // nine-value triclinic lines are not supported
        return Err(Error::GroParse {
            line: box_lineno,
            msg: format!("expected 3 box lengths, found {} value(s)", vals.len()),
        });
    }
    if rest[n + 1..].iter().any(|l| !l.trim().is_empty()) {
        return Err(Error::GroParse {
            line: box_lineno + 1,
            msg: format!("atom count says {n} but more records follow"),
        });
    }

    Ok(GroFrame {
        title,
        atoms,
        positions,
        velocities: with_velocities.unwrap_or(false).then_some(velocities),
        box_lengths: Vec3::new(vals[0], vals[1], vals[2]),
    })
}

pub fn write_frame(frame: &GroFrame) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", frame.title.lines().next().unwrap_or(""));
    let _ = writeln!(out, "{:>5}", frame.positions.len());
    for (k, (atom, r)) in frame.atoms.iter().zip(&frame.positions).enumerate() {
        let _ = write!(
            out,
            "{:>5}{:<5.5}{:>5.5}{:>5}{:8.3}{:8.3}{:8.3}",
            atom.res_number % 100_000,
            atom.res_name,
            atom.atom_name,
            (k + 1) % 100_000,
            r.x,
            r.y,
            r.z
        );
        if let Some(v) = &frame.velocities {
            let v = v[k];
            let _ = write!(out, "{:8.4}{:8.4}{:8.4}", v.x, v.y, v.z);
        }
        out.push('\n');
    }
    let b = frame.box_lengths;
    let _ = writeln!(out, "{:10.5}{:10.5}{:10.5}", b.x, b.y, b.z);
    out
}

/// Format a state as `.gro` text; positions are wrapped into the box.
pub fn write_gro(state: &State, atoms: &[GroAtom], title: &str, with_velocities: bool) -> String {
    let frame = GroFrame {
        title: title.to_string(),
        atoms: atoms.to_vec(),
        positions: state.positions.iter().map(|r| state.simbox.wrap(*r)).collect(),
        velocities: with_velocities.then(|| state.velocities.clone()),
        box_lengths: state.simbox.lengths,
    };
    write_frame(&frame)
}
