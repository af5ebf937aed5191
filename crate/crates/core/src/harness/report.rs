use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::metrics::{rel_err, rel_l2_rows};
use super::normalize::GaussianStats;
use super::train::RunHistory;
use crate::error::{Error, Result};
use crate::fft::amplitude_spectrum;
use crate::operatornets::AnyModel;
use crate::signalgen::ResponseDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleReport {
    pub id: usize,
    pub rel_l2: f64,
    pub rel_err: f64,
}

/// Per-sample errors of a model on a dataset, with the best and worst
/// samples by relative L2 error.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub samples: Vec<SampleReport>,
    pub best: usize,
    pub worst: usize,
    pub mean_rel_l2: f64,
    pub predictions: Array2<f64>,
}

/// Evaluates `model` on `ds` (inputs normalized with `stats` when given).
pub fn evaluate(model: &AnyModel, ds: &ResponseDataset, stats: Option<&GaussianStats>) -> Result<Report> {
    if ds.m != model.signal_len() {
        return Err(Error::DimensionMismatch { expected: model.signal_len(), got: ds.m });
    }
    if ds.is_empty() {
        return Err(Error::InvalidArgument("cannot evaluate on an empty dataset".into()));
    }
    let mut x = ds.input_matrix();
    if let Some(s) = stats {
        x = s.apply(x.view());
    }
    let predictions = model.predict(x.view())?;
    report_from_predictions(predictions, ds)
}

/// Builds a [`Report`] from precomputed predictions.
pub fn report_from_predictions(predictions: Array2<f64>, ds: &ResponseDataset) -> Result<Report> {
    let truth = ds.output_matrix();
    let l2 = rel_l2_rows(predictions.view(), truth.view())?;
    let samples: Vec<SampleReport> = l2
        .iter()
        .enumerate()
        .map(|(id, &rel_l2)| Ok(SampleReport { id, rel_l2, rel_err: rel_err(predictions.row(id), truth.row(id))? }))
        .collect::<Result<_>>()?;
    let best = (0..l2.len()).min_by(|&a, &b| l2[a].total_cmp(&l2[b])).unwrap();
    let worst = (0..l2.len()).max_by(|&a, &b| l2[a].total_cmp(&l2[b])).unwrap();
    let mean_rel_l2 = l2.iter().sum::<f64>() / l2.len() as f64;
    Ok(Report { samples, best, worst, mean_rel_l2, predictions })
}

/// Writes `report.csv`, plus `pred_<id>.csv` (t, truth, pred) and
/// `spectrum_<id>.csv` (frequency, truth and predicted amplitude) for the
/// best and worst samples.
pub fn write_report(report: &Report, ds: &ResponseDataset, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut text = String::from("id,rel_l2,rel_err,tag\n");
    for s in &report.samples {
        let tag = match (s.id == report.best, s.id == report.worst) {
            (true, true) => "best;worst",
            (true, false) => "best",
            (false, true) => "worst",
            _ => "",
        };
        let _ = writeln!(text, "{},{},{},{}", s.id, s.rel_l2, s.rel_err, tag);
    }
    fs::write(dir.join("report.csv"), text)?;

    for id in [report.best, report.worst] {
        let truth = ds.outputs[id].samples();
        let pred = report.predictions.row(id);
        let mut t = String::from("t,truth,pred\n");
        for (j, (x, p)) in truth.iter().zip(pred.iter()).enumerate() {
            let _ = writeln!(t, "{},{},{}", j as f64 * ds.dt, x, p);
        }
        fs::write(dir.join(format!("pred_{id}.csv")), t)?;

        let st = amplitude_spectrum(truth, ds.dt);
        let sp = amplitude_spectrum(pred.as_slice().expect("contiguous row"), ds.dt);
        let mut f = String::from("freq,truth,pred\n");
        for ((freq, a), (_, b)) in st.iter().zip(&sp) {
            let _ = writeln!(f, "{freq},{a},{b}");
        }
        fs::write(dir.join(format!("spectrum_{id}.csv")), f)?;
    }
    Ok(())
}

/// `history.csv`: epoch, lr, loss, train_rel_l2, test_rel_l2 (blank when
/// not measured that epoch).
pub fn write_history(history: &RunHistory, path: impl AsRef<Path>) -> Result<()> {
    let mut text = String::from("epoch,lr,loss,train_rel_l2,test_rel_l2\n");
    for r in &history.records {
        let test = r.test_rel_l2.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(text, "{},{},{},{},{}", r.epoch, r.lr, r.loss, r.train_rel_l2, test);
    }
    fs::write(path, text)?;
    Ok(())
}
