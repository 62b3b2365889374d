use std::f64::consts::FRAC_1_SQRT_2;
use std::path::Path;

use freerg_core::measure::semicircle_density;
use freerg_core::schema::MeasureJson;
use freerg_core::transform::linspace;
use freerg_core::{
    conv_cumulants, distance, distance_extended, measure_of_t, Error, Iterate, Measure, MetricGrid, Transform,
};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::output::{num, write_atomic};

/// Ratios above this fail `clt-run`.
pub const RATIO_LIMIT: f64 = FRAC_1_SQRT_2 + 0.01;

/// Below this a distance counts as zero and the next ratio is left blank.
const ZERO_DISTANCE: f64 = 1e-9;

/// Successive density gaps may rise by at most this much (the Stieltjes
/// round-trip accuracy) and still count as decreasing.
const GAP_SLACK: f64 = 2e-3;

fn seed_in_q3(seed: &MeasureJson) -> Result<Measure, CliError> {
    let mu: Measure = seed.to_measure()?;
    let cert = mu.q3_check();
    if !cert.is_member {
        eprintln!("{}", serde_json::to_string_pretty(&cert).expect("certificate serializes"));
        return Err(CliError::Input(format!(
            "seed is not in Q3 (mean {}, variance {}); standardize it first",
            cert.mean, cert.variance
        )));
    }
    Ok(mu)
}

fn semicircle(grid: &MetricGrid) -> Transform {
    Transform::new(Measure::standard_semicircle()).expect("semicircle is valid").with_axis(grid.axis)
}

/// Rows `(n, d_n, d_n / d_{n-1}, 2^{-n/2} d_0)`.
pub struct CltTable {
    pub rows: Vec<(u32, f64, Option<f64>, f64)>,
}

impl CltTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,distance,ratio,bound\n");
        for (n, d, ratio, bound) in &self.rows {
            let ratio = ratio.map(num).unwrap_or_default();
            out.push_str(&format!("{n},{},{ratio},{}\n", num(*d), num(*bound)));
        }
        out
    }

    pub fn worst_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.2).reduce(f64::max)
    }
}

pub fn clt_table(cfg: &ExperimentConfig) -> Result<CltTable, CliError> {
    let mu = seed_in_q3(cfg.seed()?)?;
    let rho = semicircle(&cfg.grid);
    let seed = Iterate::from_measure(Transform::new(mu)?.with_axis(cfg.grid.axis), 4)?;
    let distances = (0..=cfg.n_max)
        .into_par_iter()
        .map(|n| Ok(distance(&seed.renormalize_times(n)?, &rho, &cfg.grid)?.value))
        .collect::<Result<Vec<f64>, Error>>()?;
    let d0 = distances[0];
    let rows = distances
        .iter()
        .enumerate()
        .map(|(n, &d)| {
            let ratio = (n > 0 && distances[n - 1] > ZERO_DISTANCE).then(|| d / distances[n - 1]);
            (n as u32, d, ratio, 2f64.powf(-(n as f64) / 2.0) * d0)
        })
        .collect();
    Ok(CltTable { rows })
}

pub fn clt_run(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let table = clt_table(cfg)?;
    let csv = table.to_csv();
    match &cfg.output_dir {
        Some(dir) => write_atomic(&dir.join("clt.csv"), &csv)?,
        None => print!("{csv}"),
    }
    match table.worst_ratio() {
        Some(r) if r > RATIO_LIMIT => {
            eprintln!("contraction check failed: ratio {r} exceeds {RATIO_LIMIT}");
            Ok(1)
        }
        _ => Ok(0),
    }
}

pub fn density_run(cfg: &ExperimentConfig) -> Result<i32, CliError> {
    let mu = seed_in_q3(cfg.seed()?)?;
    let dir = cfg.output_dir.clone().unwrap_or_else(|| "freerg-out".into());
    let seed = Iterate::from_measure(Transform::new(mu)?, 4)?;
    let spec = cfg.density_xs;
    let xs = linspace(spec.lo, spec.hi, spec.points);
    let schedule = (cfg.eps_schedule[0], cfg.eps_schedule[1]);
    let rho = |x: f64| semicircle_density(1.0, x);

    let mut runs = Vec::new();
    let mut gaps: Vec<(u32, f64)> = Vec::new();
    let mut failures = 0;
    for n in 0..=cfg.n_max {
        let it = seed.renormalize_times(n)?;
        match measure_of_t(&it, &xs, schedule) {
            Ok(density) => {
                let file = format!("density_n{n}.csv");
                let mut csv = String::from("x,density,semicircle\n");
                for (x, f) in density.xs.iter().zip(&density.fs) {
                    csv.push_str(&format!("{},{},{}\n", num(*x), num(*f), num(rho(*x))));
                }
                write_atomic(&dir.join(&file), &csv)?;
                let gap = density.sup_gap(cfg.gap_window, rho);
                gaps.push((n, gap));
                runs.push(json!({"n": n, "file": file, "sup_gap": gap, "mass": density.mass()}));
            }
            Err(Error::NoDensity) => runs.push(json!({"n": n, "skipped": "atomic law has no density"})),
            Err(e) => {
                eprintln!("n = {n}: {e}");
                failures += 1;
                runs.push(json!({"n": n, "error": e.to_string()}));
            }
        }
    }
    let tail: Vec<f64> = gaps.iter().filter(|(n, _)| *n >= 2).map(|g| g.1).collect();
    let decreasing = tail.windows(2).all(|w| w[1] <= w[0] + GAP_SLACK);
    let summary = json!({
        "gap_window": cfg.gap_window,
        "eps_schedule": cfg.eps_schedule,
        "density_xs": cfg.density_xs,
        "runs": runs,
        "gaps_decreasing": decreasing,
    });
    write_atomic(&dir.join("density_summary.json"), &pretty(&summary))?;
    if !decreasing {
        eprintln!("density gaps do not decrease for n >= 2");
    }
    Ok(if failures == 0 && decreasing { 0 } else { 1 })
}

pub struct DistanceRequest<'a> {
    pub a: &'a MeasureJson,
    pub b: &'a MeasureJson,
    pub grid: MetricGrid,
    pub extended: bool,
    pub csv: Option<&'a Path>,
}

pub fn distance_cmd(req: &DistanceRequest) -> Result<i32, CliError> {
    let handle = |m: &MeasureJson| -> Result<Transform, CliError> {
        Ok(Transform::new(m.to_measure()?)?.with_axis(req.grid.axis))
    };
    let (a, b) = (handle(req.a)?, handle(req.b)?);
    let report = if req.extended { distance_extended(&a, &b, &req.grid)? } else { distance(&a, &b, &req.grid)? };
    if let Some(path) = req.csv {
        write_atomic(path, &report.to_csv())?;
    }
    println!("{}", report.summary_json());
    Ok(0)
}

fn strings_or_numbers(exact: Option<Vec<String>>, approx: &[f64]) -> Value {
    match exact {
        Some(s) => json!(s),
        None => json!(approx),
    }
}

fn sequences_json(order: usize, exact: Option<(Vec<String>, Vec<String>)>, approx: (Vec<f64>, Vec<f64>)) -> String {
    let is_exact = exact.is_some();
    let (em, ek) = exact.map_or((None, None), |(m, k)| (Some(m), Some(k)));
    pretty(&json!({
        "order": order,
        "exact": is_exact,
        "moments": strings_or_numbers(em, &approx.0),
        "cumulants": strings_or_numbers(ek, &approx.1),
    }))
}

fn check_order(order: usize) -> Result<(), CliError> {
    if order == 0 {
        return Err(CliError::Input("--order must be at least 1".into()));
    }
    Ok(())
}

pub fn cumulants_cmd(spec: &MeasureJson, order: usize) -> Result<String, CliError> {
    check_order(order)?;
    let mu: Measure = spec.to_measure()?;
    if let Some(atoms) = spec.exact_atoms() {
        let atoms = atoms?;
        let (m, k) = (atoms.moments(order)?, atoms.cumulants(order)?);
        return Ok(sequences_json(order, Some((m.to_exact_strings(), k.to_exact_strings())), (vec![], vec![])));
    }
    let (m, k) = (mu.moments(order)?, mu.cumulants(order)?);
    Ok(sequences_json(order, None, (m.into_vec(), k.into_vec())))
}

/// Free cumulants and moments of `a ⊞ b`.
pub fn convolve_cmd(a: &MeasureJson, b: &MeasureJson, order: usize) -> Result<String, CliError> {
    check_order(order)?;
    let (ma, mb): (Measure, Measure) = (a.to_measure()?, b.to_measure()?);
    if let (Some(xa), Some(xb)) = (a.exact_atoms(), b.exact_atoms()) {
        let kappa = conv_cumulants(&xa?.cumulants(order)?, &xb?.cumulants(order)?)?;
        let m = freerg_core::nc::moments_from_cumulants(&kappa);
        return Ok(sequences_json(order, Some((m.to_exact_strings(), kappa.to_exact_strings())), (vec![], vec![])));
    }
    let kappa = conv_cumulants(&ma.cumulants(order)?, &mb.cumulants(order)?)?;
    let m = freerg_core::nc::moments_from_cumulants(&kappa);
    Ok(sequences_json(order, None, (m.into_vec(), kappa.into_vec())))
}

fn pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("json serializes") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(seed: &str, n_max: u32) -> ExperimentConfig {
        ExperimentConfig { seed_measure: Some(MeasureJson::parse(seed).unwrap()), n_max, ..Default::default() }
    }

    #[test]
    fn rademacher_table() {
        let t = clt_table(&cfg(
            r#"{"type":"atomic","atoms":[{"position":-1,"weight":0.5},{"position":1,"weight":0.5}]}"#,
            1,
        ))
        .unwrap();
        assert!((t.rows[0].1 - 0.28719).abs() < 1e-5);
        assert!(t.rows[0].2.is_none());
        assert!((t.rows[1].1 - 0.13348).abs() < 1e-5);
        assert!((t.rows[1].2.unwrap() - 0.4648).abs() < 1e-4);
    }

    #[test]
    fn semicircle_table_is_flat() {
        let t = clt_table(&cfg(r#"{"type":"semicircle"}"#, 3)).unwrap();
        assert!(t.rows.iter().all(|r| r.1 <= 1e-9 && r.2.is_none()));
        assert_eq!(t.worst_ratio(), None);
    }

    #[test]
    fn non_q3_seed_is_an_input_error() {
        let err = clt_table(&cfg(r#"{"type":"semicircle","sigma":2}"#, 1)).err().unwrap();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn cumulant_outputs() {
        let rad = MeasureJson::parse(
            r#"{"type":"atomic","atoms":[{"position":-1,"weight":"1/2"},{"position":1,"weight":"1/2"}]}"#,
        )
        .unwrap();
        let v: Value = serde_json::from_str(&cumulants_cmd(&rad, 6).unwrap()).unwrap();
        assert_eq!(v["cumulants"], json!(["0/1", "1/1", "0/1", "-1/1", "0/1", "2/1"]));
        let b = MeasureJson::parse(r#"{"type":"bernoulli_std","p":0.25}"#).unwrap();
        let v: Value = serde_json::from_str(&cumulants_cmd(&b, 3).unwrap()).unwrap();
        assert!((v["cumulants"][2].as_f64().unwrap() - 2.0 / 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(v["exact"], json!(false));
        assert_eq!(cumulants_cmd(&b, 0).unwrap_err().exit_code(), 2);

        let v: Value = serde_json::from_str(&convolve_cmd(&rad, &rad, 4).unwrap()).unwrap();
        assert_eq!(v["cumulants"], json!(["0/1", "2/1", "0/1", "-2/1"]));
        assert_eq!(v["moments"], json!(["0/1", "2/1", "0/1", "6/1"]));
    }
}
