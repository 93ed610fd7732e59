use std::collections::HashSet;
use std::thread;

use serde::{Deserialize, Serialize};

use super::{predict, train_svr, FeatureMatrix, KernelKind, SvrParams};
use crate::error::{Error, Result};
use crate::evaluation::pearson_r;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Train on one dataset, test on another.
    OneToOne,
    /// Train on two merged datasets, test on a third.
    TwoToOne,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainCell {
    pub train: Vec<String>,
    pub test: String,
    /// Pearson r on the test set, or the error that stopped this split.
    pub r: std::result::Result<f64, String>,
}

impl CrossDomainCell {
    /// Training datasets joined with `+`.
    pub fn train_label(&self) -> String {
        self.train.join("+")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossDomainReport {
    pub cells: Vec<CrossDomainCell>,
    /// Per test set, mean r over its successful cells (`None` if all failed).
    pub test_means: Vec<(String, Option<f64>)>,
}

impl CrossDomainReport {
    pub fn cells_for<'a>(&'a self, test: &'a str) -> impl Iterator<Item = &'a CrossDomainCell> + 'a {
        self.cells.iter().filter(move |c| c.test == test)
    }

    pub fn mean_for(&self, test: &str) -> Option<f64> {
        self.test_means.iter().find(|(t, _)| t == test).and_then(|(_, m)| *m)
    }
}

fn check_tables(tables: &[FeatureMatrix]) -> Result<Vec<String>> {
    if tables.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "cross-domain evaluation needs at least 2 datasets, got {}",
            tables.len()
        )));
    }
    let names: Vec<String> = tables.iter().map(FeatureMatrix::name).collect();
    let unique: HashSet<&String> = names.iter().collect();
    if unique.len() != names.len() {
        return Err(Error::InvalidInput(format!(
            "dataset names are not distinct: {names:?}"
        )));
    }
    for t in tables {
        t.labels()?;
    }
    Ok(names)
}

/// Training index sets per test index, ordered by test then by train indices.
fn splits(n: usize, mode: SplitMode) -> Result<Vec<(Vec<usize>, usize)>> {
    if matches!(mode, SplitMode::TwoToOne | SplitMode::Both) && n < 3 {
        return Err(Error::InvalidInput(format!(
            "two-to-one evaluation needs at least 3 datasets, got {n}"
        )));
    }
    let mut out = Vec::new();
    for test in 0..n {
        let others: Vec<usize> = (0..n).filter(|&i| i != test).collect();
        if matches!(mode, SplitMode::OneToOne | SplitMode::Both) {
            out.extend(others.iter().map(|&a| (vec![a], test)));
        }
        if matches!(mode, SplitMode::TwoToOne | SplitMode::Both) {
            for (i, &a) in others.iter().enumerate() {
                out.extend(others[i + 1..].iter().map(|&b| (vec![a, b], test)));
            }
        }
    }
    Ok(out)
}

fn fit_eval(train: &[&FeatureMatrix], test: &FeatureMatrix, params: &SvrParams) -> Result<f64> {
    let merged = FeatureMatrix::concat(train)?;
    let model = train_svr(&merged, params)?;
    let pred = predict(&model, test)?;
    pearson_r(&pred, test.labels()?)
}

/// Runs every split for `mode` concurrently. A failing split is recorded in
/// its cell and does not stop the others.
pub fn cross_domain_fit_eval(
    tables: &[FeatureMatrix],
    mode: SplitMode,
    params: &SvrParams,
) -> Result<CrossDomainReport> {
    let names = check_tables(tables)?;
    let plan = splits(tables.len(), mode)?;
    let results: Vec<Result<f64>> = thread::scope(|s| {
        let handles: Vec<_> = plan
            .iter()
            .map(|(train, test)| {
                s.spawn(move || {
                    let train: Vec<&FeatureMatrix> = train.iter().map(|&i| &tables[i]).collect();
                    fit_eval(&train, &tables[*test], params)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("split worker panicked"))
            .collect()
    });
    let cells: Vec<CrossDomainCell> = plan
        .iter()
        .zip(results)
        .map(|((train, test), r)| {
            if let Err(e) = &r {
                log::warn!("split {:?} -> {} failed: {e}", train, names[*test]);
            }
            CrossDomainCell {
                train: train.iter().map(|&i| names[i].clone()).collect(),
                test: names[*test].clone(),
                r: r.map_err(|e| e.to_string()),
            }
        })
        .collect();
    let test_means = names
        .iter()
        .map(|n| {
            let ok: Vec<f64> = cells
                .iter()
                .filter(|c| &c.test == n)
                .filter_map(|c| c.r.clone().ok())
                .collect();
            let mean = (!ok.is_empty()).then(|| ok.iter().sum::<f64>() / ok.len() as f64);
            (n.clone(), mean)
        })
        .collect();
    Ok(CrossDomainReport { cells, test_means })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub c: f64,
    pub gamma: Option<f64>,
    /// Mean held-out r over the leave-one-dataset-out folds that succeeded.
    pub mean_r: Option<f64>,
}

pub const GRID_C: [f64; 4] = [0.1, 1.0, 10.0, 100.0];
pub const GRID_GAMMA_FACTORS: [f64; 3] = [0.1, 1.0, 10.0];

/// Leave-one-dataset-out search over C and multiples of the default gamma.
/// Returns the best parameters (first on ties) and every grid point scored.
pub fn grid_search(tables: &[FeatureMatrix], base: &SvrParams) -> Result<(SvrParams, Vec<GridPoint>)> {
    check_tables(tables)?;
    let gammas: Vec<Option<f64>> = match base.kernel {
        KernelKind::Linear => vec![None],
        KernelKind::Rbf => {
            let g0 = base.gamma.unwrap_or(1.0 / tables[0].num_features() as f64);
            GRID_GAMMA_FACTORS.iter().map(|f| Some(f * g0)).collect()
        }
    };
    let mut points = Vec::new();
    let mut best: Option<(f64, SvrParams)> = None;
    for &c in &GRID_C {
        for &gamma in &gammas {
            let params = SvrParams { c, gamma, ..*base };
            let rs: Vec<f64> = thread::scope(|s| {
                let handles: Vec<_> = (0..tables.len())
                    .map(|test| {
                        let params = &params;
                        s.spawn(move || {
                            let train: Vec<&FeatureMatrix> = tables
                                .iter()
                                .enumerate()
                                .filter(|(i, _)| *i != test)
                                .map(|(_, t)| t)
                                .collect();
                            fit_eval(&train, &tables[test], params)
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .filter_map(|h| h.join().expect("grid worker panicked").ok())
                    .collect()
            });
            let mean_r = (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64);
            log::info!("grid C={c} gamma={gamma:?}: mean r {mean_r:?}");
            if let Some(m) = mean_r {
                if best.as_ref().map_or(true, |(b, _)| m > *b) {
                    best = Some((m, params));
                }
            }
            points.push(GridPoint { c, gamma, mean_r });
        }
    }
    let (_, params) =
        best.ok_or_else(|| Error::Undefined("every grid point failed to produce a correlation".into()))?;
    Ok((params, points))
}
