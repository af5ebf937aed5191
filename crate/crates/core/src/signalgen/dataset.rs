use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;

use super::Signal;
use crate::error::{Error, Result};
use crate::lindyn::{
    impulse_response, modal_decompose, newmark_response, nonclassical_response, state_eigen, MdofSystem,
    NewmarkParams,
};

/// Which exact solver produced the responses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    Duhamel,
    Newmark,
    NonClassical,
}

impl fmt::Display for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Solver::Duhamel => "duhamel",
            Solver::Newmark => "newmark",
            Solver::NonClassical => "nonclassical",
        })
    }
}

impl FromStr for Solver {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "duhamel" => Ok(Solver::Duhamel),
            "newmark" => Ok(Solver::Newmark),
            "nonclassical" => Ok(Solver::NonClassical),
            other => Err(Error::InvalidArgument(format!("unknown solver `{other}`"))),
        }
    }
}

/// Physical units of a stored dataset. Dynamics are always solved in SI;
/// the units only rescale what is stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Units {
    /// Acceleration in m/s², displacement in m.
    Si,
    /// Acceleration in g, displacement in cm.
    #[default]
    GCm,
}

/// Standard gravity, m/s².
pub const STANDARD_GRAVITY: f64 = 9.80665;

impl Units {
    /// Factor applied to accelerations given in m/s².
    pub fn accel_factor(self) -> f64 {
        match self {
            Units::Si => 1.0,
            Units::GCm => 1.0 / STANDARD_GRAVITY,
        }
    }

    /// Factor applied to displacements given in m.
    pub fn disp_factor(self) -> f64 {
        match self {
            Units::Si => 1.0,
            Units::GCm => 100.0,
        }
    }
}

impl fmt::Display for Units {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Units::Si => "si",
            Units::GCm => "g-cm",
        })
    }
}

impl FromStr for Units {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "si" => Ok(Units::Si),
            "g-cm" => Ok(Units::GCm),
            other => Err(Error::InvalidArgument(format!("unknown units `{other}`"))),
        }
    }
}

/// Provenance of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub system_id: String,
    pub solver: Solver,
    pub seed: u64,
    pub units: Units,
}

/// Ground accelerations paired with the response of one DOF.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseDataset {
    pub inputs: Vec<Signal>,
    pub outputs: Vec<Signal>,
    pub dt: f64,
    pub m: usize,
    pub meta: DatasetMeta,
}

impl ResponseDataset {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Inputs as a `count × m` matrix.
    pub fn input_matrix(&self) -> Array2<f64> {
        stack(&self.inputs, self.m)
    }

    pub fn output_matrix(&self) -> Array2<f64> {
        stack(&self.outputs, self.m)
    }

    /// Keeps only the listed pairs, in the given order.
    pub fn select(&self, idx: &[usize]) -> Self {
        Self {
            inputs: idx.iter().map(|&i| self.inputs[i].clone()).collect(),
            outputs: idx.iter().map(|&i| self.outputs[i].clone()).collect(),
            dt: self.dt,
            m: self.m,
            meta: self.meta.clone(),
        }
    }
}

fn stack(signals: &[Signal], m: usize) -> Array2<f64> {
    let mut out = Array2::zeros((signals.len(), m));
    for (mut row, s) in out.rows_mut().into_iter().zip(signals) {
        row.assign(&ndarray::ArrayView1::from(s.samples()));
    }
    out
}

/// Solves every input with `solver` and records the response at `dof`
/// (DOF 0 is the roof for [`MdofSystem::shear_chain`]).
///
/// `modal_ratios` are used by the Duhamel solver only; the other two read the
/// damping matrix of `system`. `signals` are in m/s²; inputs and responses
/// are stored in `units`. The returned metadata has an empty system id and
/// seed 0; callers fill those in.
pub fn build_dataset(
    system: &MdofSystem,
    modal_ratios: &[f64],
    dof: usize,
    signals: &[Signal],
    solver: Solver,
    units: Units,
) -> Result<ResponseDataset> {
    if dof >= system.dof_count() {
        return Err(Error::InvalidArgument(format!("dof {dof} out of range")));
    }
    let meta = DatasetMeta { system_id: String::new(), solver, seed: 0, units };
    let Some(first) = signals.first() else {
        return Ok(ResponseDataset { inputs: vec![], outputs: vec![], dt: 0.0, m: 0, meta });
    };
    let (dt, m) = (first.dt(), first.len());
    for s in signals {
        if s.dt() != dt {
            return Err(Error::InvalidSignal(format!("mixed sampling steps {dt} and {}", s.dt())));
        }
        if s.len() != m {
            return Err(Error::InvalidSignal(format!("mixed lengths {m} and {}", s.len())));
        }
    }

    let outputs = match solver {
        Solver::Duhamel => {
            let modes = modal_decompose(system, modal_ratios)?;
            let h = impulse_response(&modes, dof, dt, m)?;
            signals
                .iter()
                .map(|s| Signal::new(dt, crate::lindyn::trapezoid_convolve(s.samples(), &h, dt)))
                .collect::<Result<Vec<_>>>()?
        }
        Solver::Newmark => signals
            .iter()
            .map(|s| newmark_response(system, s, NewmarkParams::default())?.dof(dof))
            .collect::<Result<Vec<_>>>()?,
        Solver::NonClassical => {
            let modes = state_eigen(system)?;
            signals.iter().map(|s| nonclassical_response(&modes, dof, s)).collect::<Result<Vec<_>>>()?
        }
    };
    let inputs = signals.iter().map(|s| s.scaled(units.accel_factor())).collect::<Result<Vec<_>>>()?;
    let outputs = outputs.iter().map(|s| s.scaled(units.disp_factor())).collect::<Result<Vec<_>>>()?;
    Ok(ResponseDataset { inputs, outputs, dt, m, meta })
}

fn write_rows(path: &Path, signals: &[Signal]) -> Result<()> {
    let mut text = String::new();
    for (id, s) in signals.iter().enumerate() {
        text.push_str(&id.to_string());
        for v in s.samples() {
            // shortest representation that parses back to the same bits
            text.push(',');
            text.push_str(&v.to_string());
        }
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

/// Writes `meta`, `inputs.csv` and `outputs.csv` into `dir`.
pub fn save_dataset(ds: &ResponseDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let meta = format!(
        "dt = {}\nm = {}\ncount = {}\nsolver = {}\nseed = {}\nunits = {}\nsystem = {}\n",
        ds.dt,
        ds.m,
        ds.len(),
        ds.meta.solver,
        ds.meta.seed,
        ds.meta.units,
        ds.meta.system_id
    );
    fs::write(dir.join("meta"), meta)?;
    write_rows(&dir.join("inputs.csv"), &ds.inputs)?;
    write_rows(&dir.join("outputs.csv"), &ds.outputs)?;
    Ok(())
}

fn malformed(path: &Path, reason: impl Into<String>) -> Error {
    Error::MalformedHeader { path: path.to_path_buf(), reason: reason.into() }
}

fn mismatch(path: &Path, reason: impl Into<String>) -> Error {
    Error::LengthMismatch { path: path.to_path_buf(), reason: reason.into() }
}

fn read_rows(path: &Path, count: usize, m: usize, dt: f64) -> Result<Vec<Signal>> {
    let text = fs::read_to_string(path)?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != count {
        return Err(mismatch(path, format!("expected {count} rows, found {}", lines.len())));
    }
    lines
        .iter()
        .enumerate()
        .map(|(row, line)| {
            let mut fields = line.split(',');
            let id = fields.next().unwrap_or("").trim();
            if id.parse::<usize>().ok() != Some(row) {
                return Err(malformed(path, format!("row {row} has id `{id}`")));
            }
            let values = fields
                .map(|f| {
                    f.trim().parse::<f64>().map_err(|_| malformed(path, format!("row {row}: `{f}` is not a number")))
                })
                .collect::<Result<Vec<f64>>>()?;
            if values.len() != m {
                return Err(mismatch(path, format!("row {row} has {} values, expected {m}", values.len())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite { path: path.to_path_buf(), row });
            }
            Signal::new(dt, values)
        })
        .collect()
}

/// Inverse of [`save_dataset`]; bit-exact.
pub fn load_dataset(dir: impl AsRef<Path>) -> Result<ResponseDataset> {
    let dir = dir.as_ref();
    let meta_path: PathBuf = dir.join("meta");
    let text = fs::read_to_string(&meta_path)?;
    let mut get = std::collections::HashMap::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| malformed(&meta_path, format!("bad line `{line}`")))?;
        get.insert(k.trim().to_string(), v.trim().to_string());
    }
    let field = |k: &str| get.get(k).ok_or_else(|| malformed(&meta_path, format!("missing `{k}`")));
    let num = |k: &str| -> Result<f64> {
        field(k)?.parse::<f64>().map_err(|_| malformed(&meta_path, format!("`{k}` is not a number")))
    };
    let int = |k: &str| -> Result<u64> {
        field(k)?.parse::<u64>().map_err(|_| malformed(&meta_path, format!("`{k}` is not an integer")))
    };
    let count = int("count")? as usize;
    let m = int("m")? as usize;
    let dt = num("dt")?;
    let solver: Solver = field("solver")?.parse().map_err(|_| malformed(&meta_path, "unknown solver"))?;
    let meta = DatasetMeta {
        system_id: get.get("system").cloned().unwrap_or_default(),
        solver,
        seed: int("seed")?,
        units: field("units")?.parse().map_err(|_| malformed(&meta_path, "unknown units"))?,
    };
    if count > 0 && !(dt > 0.0) {
        return Err(malformed(&meta_path, "dt must be positive"));
    }
    let inputs = read_rows(&dir.join("inputs.csv"), count, m, dt)?;
    let outputs = read_rows(&dir.join("outputs.csv"), count, m, dt)?;
    Ok(ResponseDataset { inputs, outputs, dt, m, meta })
}
