use std::fmt::Write as _;

use super::Signal;
use crate::error::{Error, Result};

/// Min, max, mean and population standard deviation of one quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub sd: f64,
}

impl Summary {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self {
            min: values.iter().copied().fold(f64::INFINITY, f64::min),
            max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean,
            sd: var.sqrt(),
        }
    }
}

/// Per-corpus statistics of PGA, largest and smallest sample, and energy
/// (sum of squared samples, no `dt` factor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorpusStats {
    pub count: usize,
    pub pga: Summary,
    pub max: Summary,
    pub min: Summary,
    pub energy: Summary,
}

impl CorpusStats {
    fn rows(&self) -> [Summary; 4] {
        [self.pga, self.max, self.min, self.energy]
    }
}

/// SD uses the population convention (divide by the count).
pub fn compute_stats(signals: &[Signal]) -> Result<CorpusStats> {
    if signals.is_empty() {
        return Err(Error::InvalidArgument("statistics of an empty corpus".into()));
    }
    let collect = |f: &dyn Fn(&Signal) -> f64| signals.iter().map(f).collect::<Vec<_>>();
    Ok(CorpusStats {
        count: signals.len(),
        pga: Summary::of(&collect(&|s| s.peak())),
        max: Summary::of(&collect(&|s| s.samples().iter().copied().fold(f64::NEG_INFINITY, f64::max))),
        min: Summary::of(&collect(&|s| s.samples().iter().copied().fold(f64::INFINITY, f64::min))),
        energy: Summary::of(&collect(&|s| s.energy())),
    })
}

/// CSV with one row per (quantity, statistic) and one column per corpus.
pub fn format_stats_table(corpora: &[(&str, &CorpusStats)]) -> String {
    let mut out = String::from("quantity,statistic");
    for (name, _) in corpora {
        let _ = write!(out, ",{name}");
    }
    out.push('\n');
    for (q, qname) in ["pga", "max", "min", "energy"].into_iter().enumerate() {
        for (sname, pick) in [
            ("min", (|s: &Summary| s.min) as fn(&Summary) -> f64),
            ("max", |s| s.max),
            ("mean", |s| s.mean),
            ("sd", |s| s.sd),
        ] {
            let _ = write!(out, "{qname},{sname}");
            for (_, c) in corpora {
                let _ = write!(out, ",{}", pick(&c.rows()[q]));
            }
            out.push('\n');
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_arithmetic() {
        let a = Signal::new(0.1, vec![0.1, -0.05]).unwrap();
        let b = Signal::new(0.1, vec![-0.3, 0.2]).unwrap();
        let s = compute_stats(&[a, b]).unwrap();
        assert!((s.pga.mean - 0.2).abs() < 1e-15);
        assert!((s.pga.sd - 0.1).abs() < 1e-15);
        assert_eq!(s.min.min, -0.3);
        assert_eq!(s.max.max, 0.2);
        let c = compute_stats(&[Signal::new(1.0, vec![1.0, -2.0, 3.0]).unwrap()]).unwrap();
        assert_eq!(c.energy.mean, 14.0);
        assert_eq!(c.energy.sd, 0.0);
        assert!(compute_stats(&[]).is_err());
    }

    #[test]
    fn table_layout() {
        let s = compute_stats(&[Signal::new(1.0, vec![0.5]).unwrap()]).unwrap();
        let t = format_stats_table(&[("train", &s), ("test", &s)]);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines.len(), 17);
        assert_eq!(lines[0], "quantity,statistic,train,test");
        assert_eq!(lines[1], "pga,min,0.5,0.5");
        assert!(lines[16].starts_with("energy,sd,"));
    }
}
