//! CSV formats: per-run histories, companion parameter files, campaign
//! summaries and the mode comparison table.

use std::collections::BTreeMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use bec_bo_core::constants::joule_to_nk;
use bec_bo_core::dynamics::PROPERTY_NAMES;
use bec_bo_core::ramp::ParamVector;
use serde::{Deserialize, Serialize};

use crate::bo::History;
use crate::error::{Error, Result};

/// One row of a history file. Energies are in nK, relative to the final
/// ground state where the name says so.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iter: usize,
    pub seed: u64,
    pub mode: String,
    pub t_f_ms: f64,
    #[serde(rename = "E_cl_nK")]
    pub e_cl_nk: f64,
    #[serde(rename = "E_qu_excess_nK")]
    pub e_qu_excess_nk: f64,
    #[serde(rename = "E_cl_int_nK")]
    pub e_cl_int_nk: f64,
    #[serde(rename = "C_minus_C0_nK")]
    pub c_minus_c0_nk: f64,
    #[serde(rename = "incumbent_C_minus_C0_nK")]
    pub incumbent_c_minus_c0_nk: f64,
    pub feasible: bool,
    pub wall_ms: f64,
}

pub fn history_rows(h: &History) -> Vec<HistoryRow> {
    h.records
        .iter()
        .map(|r| HistoryRow {
            iter: r.iter,
            seed: h.seed,
            mode: h.grouping.name().to_string(),
            t_f_ms: h.t_f_ms,
            e_cl_nk: joule_to_nk(r.terms.e_cl),
            e_qu_excess_nk: joule_to_nk(r.terms.e_qu_excess),
            e_cl_int_nk: joule_to_nk(r.terms.e_cl_int),
            c_minus_c0_nk: joule_to_nk(r.objective - h.c_obj0),
            incumbent_c_minus_c0_nk: joule_to_nk(h.records[r.incumbent].objective - h.c_obj0),
            feasible: r.feasible,
            wall_ms: r.wall_ms,
        })
        .collect()
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn open(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::Reader::from_reader(file))
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let rows = open(path)?.deserialize().collect::<std::result::Result<Vec<T>, _>>();
    rows.map_err(|e| Error::Runtime(format!("{}: {e}", path.display())))
}

pub fn write_history(path: &Path, h: &History) -> Result<()> {
    write_rows(path, &history_rows(h))
}

pub fn read_history(path: &Path) -> Result<Vec<HistoryRow>> {
    read_rows(path)
}

/// Companion file of a history: parameters and raw end-state properties
/// (SI units) of every call, plus the incumbent index after it.
pub fn write_params(path: &Path, h: &History) -> Result<()> {
    let mut w = create(path)?;
    let dim = h.records.first().map_or(0, |r| r.params.len());
    let mut header = vec!["iter".to_string(), "incumbent_iter".into(), "sentinel".into()];
    header.extend((1..=dim).map(|i| format!("p{i}")));
    header.extend(PROPERTY_NAMES.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in &h.records {
        let mut row = vec![r.iter.to_string(), (r.incumbent + 1).to_string(), r.sentinel.to_string()];
        row.extend(r.params.as_slice().iter().map(|v| v.to_string()));
        row.extend(r.properties.iter().map(|v| v.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A parameter file as written by [`write_params`] or a plain table with
/// columns `p1..pD`. From a params file the final incumbent is returned,
/// otherwise the first row.
pub fn read_param_vector(path: &Path) -> Result<ParamVector> {
    let bad = |m: &str| Error::Config(format!("{}: {m}", path.display()));
    let mut reader = open(path)?;
    let header = reader.headers()?.clone();
    let cols: Vec<usize> = (1..)
        .map_while(|i| header.iter().position(|h| h.trim() == format!("p{i}")))
        .collect();
    if cols.is_empty() {
        return Err(bad("no p1..pD columns"));
    }
    let records = reader.records().collect::<std::result::Result<Vec<_>, _>>()?;
    let last = records.last().ok_or_else(|| bad("no rows"))?;
    let row = match header.iter().position(|h| h == "incumbent_iter") {
        Some(c) => {
            let inc: usize = last[c].parse().map_err(|_| bad("malformed incumbent_iter"))?;
            records.get(inc.wrapping_sub(1)).ok_or_else(|| bad("incumbent_iter out of range"))?
        }
        None => &records[0],
    };
    let values = cols
        .iter()
        .map(|&c| row[c].trim().parse::<f64>().map_err(|_| bad("non-numeric parameter")))
        .collect::<Result<Vec<_>>>()?;
    ParamVector::new(values).map_err(|e| bad(&e.to_string()))
}

/// Mean and sample standard deviation over seeds of the incumbent after
/// each call, for one (spline, mode, duration) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub spline: String,
    pub mode: String,
    pub t_f_ms: f64,
    pub iter: usize,
    pub runs: usize,
    #[serde(rename = "C_minus_C0_mean_nK")]
    pub c_mean: f64,
    #[serde(rename = "C_minus_C0_std_nK")]
    pub c_std: f64,
    #[serde(rename = "E_cl_mean_nK")]
    pub e_cl_mean: f64,
    #[serde(rename = "E_cl_std_nK")]
    pub e_cl_std: f64,
    #[serde(rename = "E_qu_excess_mean_nK")]
    pub e_qu_mean: f64,
    #[serde(rename = "E_qu_excess_std_nK")]
    pub e_qu_std: f64,
    #[serde(rename = "E_cl_int_mean_nK")]
    pub e_int_mean: f64,
    #[serde(rename = "E_cl_int_std_nK")]
    pub e_int_std: f64,
}

/// Mean and sample standard deviation (zero for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Summary rows for every cell. Histories are grouped by spline label,
/// mode and duration; a cell covers the iterations every run reached.
pub fn summarize<'a>(runs: impl IntoIterator<Item = (&'a str, &'a History)>) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(String, &'static str, u64), Vec<&History>> = BTreeMap::new();
    for (spline, h) in runs {
        cells.entry((spline.to_string(), h.grouping.name(), h.t_f_ms.to_bits())).or_default().push(h);
    }
    let mut rows = Vec::new();
    for ((spline, mode, tf), hs) in cells {
        let len = hs.iter().map(|h| h.records.len()).min().unwrap_or(0);
        for iter in 1..=len {
            let mut cols: [Vec<f64>; 4] = Default::default();
            for h in &hs {
                let r = h.incumbent_at(iter);
                cols[0].push(joule_to_nk(r.objective - h.c_obj0));
                cols[1].push(joule_to_nk(r.terms.e_cl));
                cols[2].push(joule_to_nk(r.terms.e_qu_excess));
                cols[3].push(joule_to_nk(r.terms.e_cl_int));
            }
            let [c, cl, qu, int] = cols.map(|v| mean_std(&v));
            rows.push(SummaryRow {
                spline: spline.clone(),
                mode: mode.to_string(),
                t_f_ms: f64::from_bits(tf),
                iter,
                runs: hs.len(),
                c_mean: c.0,
                c_std: c.1,
                e_cl_mean: cl.0,
                e_cl_std: cl.1,
                e_qu_mean: qu.0,
                e_qu_std: qu.1,
                e_int_mean: int.0,
                e_int_std: int.1,
            });
        }
    }
    rows
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_rows(path, rows)
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    read_rows(path)
}

/// Final incumbent of one run, the input of [`compare_modes`].
#[derive(Debug, Clone, PartialEq)]
pub struct FinalOutcome {
    pub spline: String,
    pub mode: String,
    pub t_f_ms: f64,
    pub seed: u64,
    /// Final incumbent `C_obj − C_obj⁰`, nK.
    pub value: f64,
}

impl FinalOutcome {
    pub fn from_history(spline: &str, h: &History) -> Option<Self> {
        Some(Self {
            spline: spline.to_string(),
            mode: h.grouping.name().to_string(),
            t_f_ms: h.t_f_ms,
            seed: h.seed,
            value: joule_to_nk(h.incumbent()?.objective - h.c_obj0),
        })
    }

    pub fn from_rows(spline: &str, rows: &[HistoryRow]) -> Option<Self> {
        let last = rows.last()?;
        Some(Self {
            spline: spline.to_string(),
            mode: last.mode.clone(),
            t_f_ms: last.t_f_ms,
            seed: last.seed,
            value: last.incumbent_c_minus_c0_nk,
        })
    }
}

/// One mode within one (spline, duration) cell. A seed is won when the
/// mode's final value is strictly below every other mode's on that seed;
/// it is tied when no mode is strictly best and this mode shares the
/// minimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub spline: String,
    pub t_f_ms: f64,
    pub mode: String,
    pub runs: usize,
    #[serde(rename = "median_C_minus_C0_nK")]
    pub median: f64,
    pub wins: usize,
    pub ties: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Paired per-seed comparison of final incumbents. Every (spline,
/// duration) cell needs at least two modes run over the same seeds.
pub fn compare_modes(outcomes: &[FinalOutcome]) -> Result<Vec<ComparisonRow>> {
    type Cell<'a> = BTreeMap<&'a str, BTreeMap<u64, f64>>;
    let mut cells: BTreeMap<(&str, u64), Cell> = BTreeMap::new();
    for o in outcomes {
        let seeds = cells.entry((&o.spline, o.t_f_ms.to_bits())).or_default().entry(&o.mode).or_default();
        if seeds.insert(o.seed, o.value).is_some() {
            return Err(Error::Config(format!("seed {} appears twice for mode {}", o.seed, o.mode)));
        }
    }
    let mut rows = Vec::new();
    for ((spline, tf), modes) in cells {
        let t_f_ms = f64::from_bits(tf);
        if modes.len() < 2 {
            return Err(Error::Config(format!("{spline} at {t_f_ms} ms: need at least two modes to compare")));
        }
        let seeds: Vec<u64> = modes.values().next().expect("non-empty").keys().copied().collect();
        if modes.values().any(|m| !m.keys().copied().eq(seeds.iter().copied())) {
            return Err(Error::Config(format!("{spline} at {t_f_ms} ms: modes were run over different seeds")));
        }
        let mut wins: BTreeMap<&str, usize> = BTreeMap::new();
        let mut ties: BTreeMap<&str, usize> = BTreeMap::new();
        for seed in &seeds {
            let best = modes.values().map(|m| m[seed]).fold(f64::INFINITY, f64::min);
            let at_best: Vec<&str> = modes.iter().filter(|(_, m)| m[seed] == best).map(|(k, _)| *k).collect();
            let tally = if at_best.len() == 1 { &mut wins } else { &mut ties };
            for mode in at_best {
                *tally.entry(mode).or_default() += 1;
            }
        }
        for (mode, m) in &modes {
            let values: Vec<f64> = m.values().copied().collect();
            rows.push(ComparisonRow {
                spline: spline.to_string(),
                t_f_ms,
                mode: mode.to_string(),
                runs: values.len(),
                median: median(&values),
                wins: wins.get(mode).copied().unwrap_or(0),
                ties: ties.get(mode).copied().unwrap_or(0),
            });
        }
    }
    Ok(rows)
}

pub fn write_comparison(path: &Path, rows: &[ComparisonRow]) -> Result<()> {
    write_rows(path, rows)
}

/// History files below `dir`, with the spline label taken from the name
/// of the directory holding each file.
pub fn find_histories(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let path = entry.map_err(|e| Error::io(&d, e))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            if path.is_dir() {
                stack.push(path);
            } else if name.starts_with("history_") && name.ends_with(".csv") {
                let spline = d.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                found.push((spline, path));
            }
        }
    }
    found.sort();
    Ok(found)
}
