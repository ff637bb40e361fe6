//! Plain-text patch files.
//!
//! ```text
//! # quarter annulus, r_in = 1, r_out = 2
//! dim 2
//! degrees 2 2
//! knots 0 0 0 1 1 1
//! knots 0 0 0 1 1 1
//! rational true
//! points
//! 1 0 1
//! 1 1 0.7071067811865476
//! ...
//! ```
//!
//! One `knots` line per direction, then one control point per line in
//! row-major multi-index order (last direction fastest), followed by its
//! weight when `rational true`. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::Path;

use super::Patch;
use crate::error::{Error, Result};
use crate::splines::KnotVector;

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse {
        line,
        msg: msg.into(),
    })
}

fn numbers<T: std::str::FromStr>(line: usize, fields: &[&str]) -> Result<Vec<T>> {
    fields
        .iter()
        .map(|f| {
            f.parse::<T>().or_else(|_| parse_err(line, format!("bad number '{f}'")))
        })
        .collect()
}

impl Patch {
    pub fn from_text(text: &str) -> Result<Patch> {
        let mut dim: Option<usize> = None;
        let mut degrees: Option<Vec<usize>> = None;
        let mut knots: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut rational = false;
        let mut points: Vec<(usize, Vec<f64>)> = Vec::new();
        let mut in_points = false;

        for (no, raw) in text.lines().enumerate() {
            let line_no = no + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if in_points {
                points.push((line_no, numbers(line_no, &fields)?));
                continue;
            }
            match fields[0] {
                "dim" => {
                    let v: Vec<usize> = numbers(line_no, &fields[1..])?;
                    if v.len() != 1 {
                        return parse_err(line_no, "dim takes one value");
                    }
                    dim = Some(v[0]);
                }
                "degrees" => degrees = Some(numbers(line_no, &fields[1..])?),
                "knots" => knots.push((line_no, numbers(line_no, &fields[1..])?)),
                "rational" => {
                    rational = match fields.get(1) {
                        Some(&"true") | Some(&"1") => true,
                        Some(&"false") | Some(&"0") => false,
                        _ => return parse_err(line_no, "rational expects true or false"),
                    }
                }
                "points" => in_points = true,
                other => return parse_err(line_no, format!("unknown keyword '{other}'")),
            }
        }

        let dim = dim.ok_or(Error::Parse {
            line: 0,
            msg: "missing 'dim'".into(),
        })?;
        let degrees = degrees.ok_or(Error::Parse {
            line: 0,
            msg: "missing 'degrees'".into(),
        })?;
        if degrees.len() != dim || knots.len() != dim {
            return parse_err(0, format!("expected {dim} degrees and {dim} knot lines"));
        }
        let kvs = knots
            .into_iter()
            .zip(&degrees)
            .map(|((line, k), &p)| {
                KnotVector::new(k, p).map_err(|e| Error::Parse {
                    line,
                    msg: e.to_string(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let width = dim + usize::from(rational);
        let mut cps = Vec::with_capacity(points.len());
        let mut weights = Vec::with_capacity(points.len());
        for (line, p) in points {
            if p.len() != width {
                return parse_err(line, format!("expected {width} values per point"));
            }
            cps.push(p[..dim].to_vec());
            if rational {
                weights.push(p[dim]);
            }
        }
        Patch::new(kvs, cps, rational.then_some(weights))
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "dim {}", self.dim());
        let degs: Vec<String> = self.degrees().iter().map(|p| p.to_string()).collect();
        let _ = writeln!(s, "degrees {}", degs.join(" "));
        for kv in self.knot_vectors() {
            let k: Vec<String> = kv.knots().iter().map(|v| v.to_string()).collect();
            let _ = writeln!(s, "knots {}", k.join(" "));
        }
        let _ = writeln!(s, "rational {}", self.is_rational());
        let _ = writeln!(s, "points");
        for i in 0..self.num_control_points() {
            let mut row: Vec<String> = self.control_point(i).iter().map(|v| v.to_string()).collect();
            if self.is_rational() {
                row.push(self.weight(i).to_string());
            }
            let _ = writeln!(s, "{}", row.join(" "));
        }
        s
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Patch> {
        Patch::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::{quarter_annulus, thick_quarter_ring, unit_square};
    use super::*;

    #[test]
    fn builtin_patches_round_trip() {
        for p in [
            unit_square(),
            quarter_annulus(1.0, 2.0).unwrap(),
            thick_quarter_ring(1.0, 2.0, 1.0).unwrap(),
        ] {
            let back = Patch::from_text(&p.to_text()).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn reports_line_numbers() {
        let text = "dim 2\ndegrees 1 1\nknots 0 0 1 1\nknots 0 0 x 1\npoints\n";
        match Patch::from_text(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "dim 2\ndegrees 1 1\nknots 0 0 1 1\nknots 0 0 1 1\npoints\n0 0\n0 1\n1 0\n";
        assert!(Patch::from_text(text).is_err());
        assert!(Patch::from_text("bogus 3\n").is_err());
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# square\n\ndim 2\ndegrees 1 1\nknots 0 0 1 1\nknots 0 0 1 1 # v\nrational false\npoints\n0 0\n0 1\n1 0\n1 1\n";
        assert_eq!(Patch::from_text(text).unwrap(), unit_square());
    }
}
