//! Argument syntax shared by the subcommands.

use std::path::{Path, PathBuf};

use envlab_core::records::RecordEvent;
use envlab_core::{Bipartition, DMatrix, DVector, Error, Result, C64};

/// Comma-separated list of values.
pub fn list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            t.parse::<T>()
                .map_err(|e| Error::Parse(format!("{what} {t:?}: {e}")))
        })
        .collect()
}

pub fn cut(text: &str, subsystems: usize) -> Result<Bipartition> {
    Bipartition::new(list(text, "subsystem")?, subsystems)
}

/// System-side unitary given on the command line.
#[derive(Clone, Debug, PartialEq)]
pub enum UnitarySpec {
    /// `phase:PHI1,PHI2,...` on the Schmidt states.
    Phase(Vec<f64>),
    /// `swap:K,L[,PHI]` between Schmidt states `K` and `L` (1-based).
    Swap { k: usize, l: usize, phase: f64 },
    /// `partial:PATH`: orthonormal vectors spanning an even Schmidt subspace.
    Partial(PathBuf),
    /// `file:PATH`: explicit matrix on the left side of the cut.
    File(PathBuf),
}

impl UnitarySpec {
    pub fn parse(text: &str) -> Result<Self> {
        let (kind, args) = text
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("unitary {text:?} needs KIND:ARGS")))?;
        match kind {
            "phase" => Ok(Self::Phase(list(args, "phase")?)),
            "swap" => {
                let v: Vec<f64> = list(args, "swap argument")?;
                let index = |x: f64| -> Result<usize> {
                    if x >= 1.0 && x.fract() == 0.0 {
                        Ok(x as usize - 1)
                    } else {
                        Err(Error::Parse(format!(
                            "swap index {x} must be a positive integer"
                        )))
                    }
                };
                match v.as_slice() {
                    [k, l] => Ok(Self::Swap {
                        k: index(*k)?,
                        l: index(*l)?,
                        phase: 0.0,
                    }),
                    [k, l, phi] => Ok(Self::Swap {
                        k: index(*k)?,
                        l: index(*l)?,
                        phase: *phi,
                    }),
                    _ => Err(Error::Parse("swap takes K,L[,PHI]".into())),
                }
            }
            "partial" => Ok(Self::Partial(PathBuf::from(args))),
            "file" => Ok(Self::File(PathBuf::from(args))),
            other => Err(Error::Parse(format!("unknown unitary kind {other:?}"))),
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// JSON rows of `[re, im]` pairs.
pub fn matrix(path: &Path) -> Result<DMatrix<C64>> {
    let rows: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n == 0 || rows.iter().any(|r| r.len() != m) {
        return Err(Error::Parse(format!(
            "{}: ragged or empty matrix",
            path.display()
        )));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| {
        C64::new(rows[i][j][0], rows[i][j][1])
    }))
}

/// JSON list of vectors, each a list of `[re, im]` pairs.
pub fn vectors(path: &Path) -> Result<Vec<DVector<C64>>> {
    let vs: Vec<Vec<[f64; 2]>> =
        serde_json::from_str(&read(path)?).map_err(|e| Error::Parse(e.to_string()))?;
    if vs.is_empty() {
        return Err(Error::Parse(format!("{}: no vectors", path.display())));
    }
    Ok(vs
        .into_iter()
        .map(|v| DVector::from_iterator(v.len(), v.into_iter().map(|[re, im]| C64::new(re, im))))
        .collect())
}

/// `"1,2|3,4"`: 1-based cells separated by `|`.
pub fn partition(text: &str, universe: usize) -> Result<Vec<RecordEvent>> {
    text.split('|')
        .map(|cell| RecordEvent::parse(cell, universe))
        .collect()
}

/// `"A,B"` as an interval.
pub fn pair(text: &str, what: &str) -> Result<(f64, f64)> {
    match list::<f64>(text, what)?.as_slice() {
        [a, b] => Ok((*a, *b)),
        _ => Err(Error::Parse(format!("{what} takes two numbers A,B"))),
    }
}
