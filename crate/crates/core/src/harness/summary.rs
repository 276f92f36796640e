use std::collections::BTreeMap;

use crate::error::{Error, Result};

use super::CurveRow;

/// Thin curves kept per algorithm.
pub const THIN_CURVES: usize = 5;

pub const SUMMARY_HEADER: &str =
    "# sweep summary v1\nalgorithm,window,step_end,mean,std_err,count,sample_0,sample_1,sample_2,sample_3,sample_4\n";

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub window: usize,
    pub step_end: usize,
    pub mean: f64,
    pub std_err: f64,
    pub count: usize,
    /// Normalized rate of the first runs in (env, run) order.
    pub samples: Vec<f64>,
}

impl CurvePoint {
    /// Normal-approximation 95% interval of the mean.
    pub fn ci95(&self) -> (f64, f64) {
        (self.mean - 1.96 * self.std_err, self.mean + 1.96 * self.std_err)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgorithmCurve {
    pub algorithm: String,
    pub points: Vec<CurvePoint>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Summary {
    pub curves: Vec<AlgorithmCurve>,
}

impl Summary {
    pub fn curve(&self, algorithm: &str) -> Option<&AlgorithmCurve> {
        self.curves.iter().find(|c| c.algorithm == algorithm)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(SUMMARY_HEADER);
        for c in &self.curves {
            for p in &c.points {
                out.push_str(&format!(
                    "{},{},{},{},{},{}",
                    c.algorithm, p.window, p.step_end, p.mean, p.std_err, p.count
                ));
                for i in 0..THIN_CURVES {
                    match p.samples.get(i) {
                        Some(x) => out.push_str(&format!(",{x}")),
                        None => out.push(','),
                    }
                }
                out.push('\n');
            }
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut summary = Summary::default();
        let bad = |line: usize, what: &str| Error::Parse(format!("summary line {line}: {what}"));
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.starts_with('#') && !l.is_empty());
        match lines.next() {
            Some((_, header)) if SUMMARY_HEADER.lines().nth(1) == Some(header) => {}
            _ => return Err(Error::Parse("summary header missing or unsupported".into())),
        }
        for (i, line) in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 6 + THIN_CURVES {
                return Err(bad(i + 1, "wrong number of fields"));
            }
            let num = |k: usize| fields[k].parse::<f64>().map_err(|_| bad(i + 1, "bad number"));
            let int = |k: usize| fields[k].parse::<usize>().map_err(|_| bad(i + 1, "bad integer"));
            let samples = fields[6..]
                .iter()
                .take_while(|f| !f.is_empty())
                .map(|f| f.parse::<f64>().map_err(|_| bad(i + 1, "bad sample")))
                .collect::<Result<Vec<_>>>()?;
            let point = CurvePoint {
                window: int(1)?,
                step_end: int(2)?,
                mean: num(3)?,
                std_err: num(4)?,
                count: int(5)?,
                samples,
            };
            match summary.curves.last_mut() {
                Some(c) if c.algorithm == fields[0] => c.points.push(point),
                _ => summary.curves.push(AlgorithmCurve { algorithm: fields[0].to_string(), points: vec![point] }),
            }
        }
        Ok(summary)
    }
}

/// Per-window normalized rates keyed by (env, run).
type RunCurves = BTreeMap<(usize, usize), Vec<f64>>;

/// Mean and standard error per (algorithm, window) over all runs, plus the
/// first [`THIN_CURVES`] runs in (env, run) order. Algorithms keep their
/// first-appearance order.
pub fn aggregate(rows: &[CurveRow], window: usize) -> Summary {
    let mut groups: Vec<(&str, RunCurves)> = Vec::new();
    for r in rows {
        let g = match groups.iter().position(|(a, _)| *a == r.algorithm) {
            Some(g) => g,
            None => {
                groups.push((&r.algorithm, BTreeMap::new()));
                groups.len() - 1
            }
        };
        let curve = groups[g].1.entry((r.env, r.run)).or_default();
        if curve.len() <= r.window {
            curve.resize(r.window + 1, f64::NAN);
        }
        curve[r.window] = r.normalized_rate;
    }
    let mut summary = Summary::default();
    for (algorithm, runs) in groups {
        let windows = runs.values().map(Vec::len).max().unwrap_or(0);
        let points = (0..windows)
            .map(|w| {
                let xs: Vec<f64> = runs.values().filter_map(|c| c.get(w).copied()).filter(|x| !x.is_nan()).collect();
                let count = xs.len();
                let mean = xs.iter().sum::<f64>() / count.max(1) as f64;
                let var = if count > 1 {
                    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1) as f64
                } else {
                    0.0
                };
                CurvePoint {
                    window: w,
                    step_end: (w + 1) * window,
                    mean,
                    std_err: (var / count.max(1) as f64).sqrt(),
                    count,
                    samples: runs.values().take(THIN_CURVES).filter_map(|c| c.get(w).copied()).collect(),
                }
            })
            .collect();
        summary.curves.push(AlgorithmCurve { algorithm: algorithm.to_string(), points });
    }
    summary
}
