//! Plain-text system definition files.
//!
//! ```text
//! # 2-story shear building
//! # units: mass kg, stiffness N/m, damping N*s/m, influence dimensionless
//! n = 2
//! mass:
//!   1000 0
//!   0 1000
//! stiffness:
//!   2e6 -1e6
//!   -1e6 1e6
//! modal_xi = 0.05 0.05
//! influence = 1 1
//! ```
//!
//! `#` starts a comment. Scalars and vectors are `key = v1 v2 ...`; matrices
//! are `key:` followed by `n` whitespace-separated rows (row-major). Exactly
//! one damping source is allowed: a `damping:` matrix, `rayleigh = a b`, or
//! `modal_xi = ξ_1 ... ξ_n`. With none, the system is undamped.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::MdofSystem;
use crate::error::{Error, Result};

/// How the damping of a parsed system was specified.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingSpec {
    None,
    Matrix,
    Rayleigh { a: f64, b: f64 },
    Modal(Vec<f64>),
}

/// A parsed system definition.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemFile {
    pub system: MdofSystem,
    pub damping: DampingSpec,
}

impl SystemFile {
    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    /// Modal damping ratios for the classical solver. For a `damping:`
    /// matrix these are the diagonal projections onto the undamped modes.
    pub fn modal_ratios(&self) -> Result<Vec<f64>> {
        match &self.damping {
            DampingSpec::Modal(xi) => Ok(xi.clone()),
            DampingSpec::None => Ok(vec![0.0; self.system.dof_count()]),
            _ => self.system.projected_damping_ratios(),
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut n: Option<usize> = None;
        let mut mass = None;
        let mut stiffness = None;
        let mut damping_matrix = None;
        let mut rayleigh = None;
        let mut modal = None;
        let mut influence = None;

        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();

        let mut i = 0;
        while i < lines.len() {
            let (lineno, line) = lines[i];
            if let Some(key) = line.strip_suffix(':') {
                let key = key.trim();
                let dim = n.ok_or_else(|| Error::Parse { line: lineno, reason: "`n` must precede matrix blocks".into() })?;
                if i + dim >= lines.len() {
                    return Err(Error::Parse { line: lineno, reason: format!("matrix `{key}` needs {dim} rows") });
                }
                let mut mat = Array2::zeros((dim, dim));
                for r in 0..dim {
                    let (ln, row) = lines[i + 1 + r];
                    let vals = parse_numbers(row, ln)?;
                    if vals.len() != dim {
                        return Err(Error::Parse { line: ln, reason: format!("expected {dim} values, got {}", vals.len()) });
                    }
                    for (c, v) in vals.into_iter().enumerate() {
                        mat[[r, c]] = v;
                    }
                }
                match key {
                    "mass" => mass = Some(mat),
                    "stiffness" => stiffness = Some(mat),
                    "damping" => damping_matrix = Some(mat),
                    other => return Err(Error::Parse { line: lineno, reason: format!("unknown matrix `{other}`") }),
                }
                i += dim + 1;
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse { line: lineno, reason: format!("expected `key = value`, got `{line}`") })?;
            let vals = parse_numbers(value, lineno)?;
            match key.trim() {
                "n" => {
                    let v = vals.first().copied().unwrap_or(0.0);
                    if vals.len() != 1 || v < 1.0 || v.fract() != 0.0 {
                        return Err(Error::Parse { line: lineno, reason: "`n` must be a positive integer".into() });
                    }
                    n = Some(v as usize);
                }
                "rayleigh" => {
                    if vals.len() != 2 {
                        return Err(Error::Parse { line: lineno, reason: "`rayleigh` takes two coefficients".into() });
                    }
                    rayleigh = Some((vals[0], vals[1]));
                }
                "modal_xi" => modal = Some(vals),
                "influence" => influence = Some(vals),
                other => return Err(Error::Parse { line: lineno, reason: format!("unknown key `{other}`") }),
            }
            i += 1;
        }

        let n = n.ok_or_else(|| Error::Parse { line: 0, reason: "missing `n`".into() })?;
        let mass = mass.ok_or_else(|| Error::Parse { line: 0, reason: "missing `mass`".into() })?;
        let stiffness = stiffness.ok_or_else(|| Error::Parse { line: 0, reason: "missing `stiffness`".into() })?;
        let influence = Array1::from(influence.unwrap_or_else(|| vec![1.0; n]));
        let sources = damping_matrix.is_some() as u8 + rayleigh.is_some() as u8 + modal.is_some() as u8;
        if sources > 1 {
            return Err(Error::Parse { line: 0, reason: "give only one of `damping`, `rayleigh`, `modal_xi`".into() });
        }
        let base = MdofSystem::undamped(mass, stiffness, influence)?;
        let (system, damping) = if let Some(c) = damping_matrix {
            (base.with_damping(c)?, DampingSpec::Matrix)
        } else if let Some((a, b)) = rayleigh {
            (base.with_rayleigh(a, b), DampingSpec::Rayleigh { a, b })
        } else if let Some(xi) = modal {
            (base.with_modal_damping(&xi)?, DampingSpec::Modal(xi))
        } else {
            (base, DampingSpec::None)
        };
        Ok(Self { system, damping })
    }

    pub fn to_text(&self) -> String {
        let s = &self.system;
        let n = s.dof_count();
        let mut out = String::new();
        out.push_str("# units: mass kg, stiffness N/m, damping N*s/m, influence dimensionless\n");
        let _ = writeln!(out, "n = {n}");
        let matrix = |out: &mut String, name: &str, m: &Array2<f64>| {
            let _ = writeln!(out, "{name}:");
            for r in 0..n {
                let row: Vec<String> = (0..n).map(|c| format!("{:e}", m[[r, c]])).collect();
                let _ = writeln!(out, "  {}", row.join(" "));
            }
        };
        matrix(&mut out, "mass", s.mass());
        matrix(&mut out, "stiffness", s.stiffness());
        match &self.damping {
            DampingSpec::None => {}
            DampingSpec::Matrix => matrix(&mut out, "damping", s.damping()),
            DampingSpec::Rayleigh { a, b } => {
                let _ = writeln!(out, "rayleigh = {a:e} {b:e}");
            }
            DampingSpec::Modal(xi) => {
                let v: Vec<String> = xi.iter().map(|x| format!("{x:e}")).collect();
                let _ = writeln!(out, "modal_xi = {}", v.join(" "));
            }
        }
        let v: Vec<String> = s.influence().iter().map(|x| format!("{x:e}")).collect();
        let _ = writeln!(out, "influence = {}", v.join(" "));
        out
    }
}

fn parse_numbers(s: &str, line: usize) -> Result<Vec<f64>> {
    s.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|_| Error::Parse { line, reason: format!("`{tok}` is not a number") })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_STORY: &str = "\
# two story
n = 2
mass:
  1 0
  0 1   # trailing comment
stiffness:
  2 -1
  -1 1
modal_xi = 0.05 0.02
influence = 1 1
";

    #[test]
    fn parses_and_round_trips() {
        let f = SystemFile::parse(TWO_STORY).unwrap();
        assert_eq!(f.system.dof_count(), 2);
        assert_eq!(f.modal_ratios().unwrap(), vec![0.05, 0.02]);
        let again = SystemFile::parse(&f.to_text()).unwrap();
        assert_eq!(again.damping, f.damping);
        assert_eq!(again.system.stiffness(), f.system.stiffness());
        for (a, b) in again.system.damping().iter().zip(f.system.damping()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn rayleigh_and_errors() {
        let text = TWO_STORY.replace("modal_xi = 0.05 0.02", "rayleigh = 0.1 0.01");
        let f = SystemFile::parse(&text).unwrap();
        assert_eq!(f.damping, DampingSpec::Rayleigh { a: 0.1, b: 0.01 });
        assert!((f.system.damping()[[0, 0]] - (0.1 + 0.02)).abs() < 1e-15);

        let both = format!("{text}modal_xi = 0.1 0.1\n");
        assert!(SystemFile::parse(&both).is_err());
        assert!(SystemFile::parse("n = 2\nmass:\n 1 0\n").is_err());
        assert!(SystemFile::parse("n = 1\nmass:\n 1\nstiffness:\n x\n").is_err());
        assert!(SystemFile::parse("n = 1\nbogus = 3\n").is_err());
    }
}
