use anyhow::{bail, Result};
use rayon::prelude::*;
use serde_json::{json, Value};

use leaky_well::asymptotics::{background_slope, HybridModel};
use leaky_well::model::PhysicalUnits;
use leaky_well::observables::{
    current_series, exp_deviation_series, leading_lifetime, survival_by, zeno_chain, AutoSurvival,
    DeviationQuantity, DeviationReference, MeasurementSchedule, SurvivalOptions,
};
use leaky_well::quad::QuadSettings;
use leaky_well::resonances::{PoleCache, PoleExpansion};
use leaky_well::{Definition, Method, ModelConfig, SurvivalPoint};

use crate::output::{Cell, Table};

/// A computed table and the parameters that produced it.
pub struct Output {
    pub table: Table,
    pub parameters: Value,
}

pub fn table1(strengths: &[f64], count: usize, cache: &mut PoleCache) -> Result<Output> {
    let mut table = Table::new(&["G", "index", "re_q", "im_q", "tau", "eps", "residual"]);
    for &g in strengths {
        let config = ModelConfig::new(g, 1)?;
        for p in cache.poles(&config, count)? {
            table.push(vec![g.into(), p.index.into(), p.q.re.into(), p.q.im.into(), p.tau.into(), p.eps.into(), p.residual.into()]);
        }
    }
    Ok(Output { table, parameters: json!({ "G": strengths, "poles": count }) })
}

pub struct SurvivalRequest<'a> {
    pub config: ModelConfig,
    pub grid: &'a [f64],
    pub definition: Definition,
    pub method: Method,
    pub n_poles: usize,
    pub settings: QuadSettings,
}

fn check_times(grid: &[f64]) -> Result<()> {
    if let Some(t) = grid.iter().find(|&&t| t < 0.0) {
        bail!(leaky_well::Error::Domain(format!("time must be >= 0, got {t}")));
    }
    Ok(())
}

/// Survival points in grid order; warnings are deduplicated.
pub fn survival_points(req: &SurvivalRequest, cache: &mut PoleCache) -> Result<(Vec<SurvivalPoint>, Vec<String>)> {
    check_times(req.grid)?;
    let options = SurvivalOptions { quad: req.settings, n_poles: req.n_poles, ..Default::default() };
    let points: Vec<SurvivalPoint> = match req.method {
        Method::Auto => AutoSurvival::new(&req.config, req.definition, options)?.series(req.grid)?,
        Method::Poles => {
            let expansion = PoleExpansion::new(&req.config, cache.poles(&req.config, req.n_poles)?)?;
            req.grid.par_iter().map(|&t| expansion.survival(t, req.definition)).collect()
        }
        Method::Hybrid => {
            let expansion = PoleExpansion::new(&req.config, cache.poles(&req.config, req.n_poles)?)?;
            let model = HybridModel { expansion, background_slope: background_slope(&req.config) };
            req.grid.par_iter().map(|&t| model.survival(t, req.definition)).collect::<leaky_well::Result<_>>()?
        }
        method => req
            .grid
            .par_iter()
            .map(|&t| survival_by(t, &req.config, req.definition, method, &options))
            .collect::<leaky_well::Result<_>>()?,
    };
    let mut warnings: Vec<String> = Vec::new();
    for w in points.iter().flat_map(|p| &p.warnings) {
        if !warnings.contains(w) {
            warnings.push(w.clone());
        }
    }
    Ok((points, warnings))
}

pub fn survival(req: &SurvivalRequest, grid_text: &str, cache: &mut PoleCache) -> Result<(Output, Vec<String>)> {
    let (points, warnings) = survival_points(req, cache)?;
    let mut table = Table::new(&["T", "P", "err_est", "method"]);
    for p in &points {
        table.push(vec![p.t.into(), p.p.into(), p.err_est.into(), p.method.as_str().into()]);
    }
    let parameters = json!({
        "G": req.config.g(),
        "n": req.config.n(),
        "t": grid_text,
        "definition": req.definition.as_str(),
        "method": req.method.as_str(),
        "poles": req.n_poles,
        "abs_tol": req.settings.abs_tol,
        "q_max": req.settings.q_max,
        "panel_budget": req.settings.panel_budget,
        "seam_tol": SurvivalOptions::default().seam_tol,
    });
    Ok((Output { table, parameters }, warnings))
}

pub fn current(config: &ModelConfig, grid: &[f64], grid_text: &str, tol: f64, settings: &QuadSettings) -> Result<Output> {
    let points = current_series(grid, config, settings, tol)?;
    let mut table = Table::new(&["T", "j", "outflow", "err_est"]);
    for p in points {
        table.push(vec![p.t.into(), p.j.into(), p.outflow.into(), p.err_est.into()]);
    }
    let parameters = json!({
        "G": config.g(), "n": config.n(), "t": grid_text, "tol": tol,
        "abs_tol": settings.abs_tol, "q_max": settings.q_max,
    });
    Ok(Output { table, parameters })
}

pub fn zeno(config: &ModelConfig, intervals: &[f64], horizon: f64) -> Result<Output> {
    let schedules = intervals
        .iter()
        .map(|&dt| MeasurementSchedule::new(dt, horizon))
        .collect::<leaky_well::Result<Vec<_>>>()?;
    let report = zeno_chain(config, &schedules, horizon)?;
    let options = SurvivalOptions::default();
    let unmeasured = survival_by(horizon, config, Definition::InWell, Method::Auto, &options)?.p;
    let mut table = Table::new(&["interval", "measurements", "single", "value", "rank", "ratio_to_unmeasured"]);
    for (i, e) in report.entries.iter().enumerate() {
        let rank = report.chain.iter().position(|&c| c == i).unwrap_or(i) + 1;
        table.push(vec![
            e.schedule.interval.into(),
            (e.schedule.measurements() as usize).into(),
            e.single.p.into(),
            e.value.into(),
            rank.into(),
            (e.value / unmeasured).into(),
        ]);
    }
    Ok(Output { table, parameters: json!({ "G": config.g(), "n": config.n(), "intervals": intervals, "horizon": horizon }) })
}

pub fn convert(mass: f64, width: f64, strength: f64, time: f64) -> Result<Output> {
    let (g, t) = PhysicalUnits::new(mass, width)?.to_dimensionless(strength, time);
    let mut table = Table::new(&["G", "T"]);
    table.push(vec![g.into(), t.into()]);
    Ok(Output { table, parameters: json!({ "mass": mass, "width": width, "strength": strength, "time": time }) })
}

/// Default time grid of each figure.
pub fn figure_grid(id: u32) -> &'static str {
    match id {
        1 => "0.01:1.5:0.01",
        2 => "0.01:1.5:0.005",
        3 => "0:2:0.01",
        4 => "0:30:0.05",
        5 => "0.02:2:0.02",
        _ => "0.05:40:0.05",
    }
}

pub fn figure(id: u32, config: &ModelConfig, grid: &[f64], grid_text: &str, cache: &mut PoleCache) -> Result<Output> {
    let settings = QuadSettings::default();
    let mut parameters = json!({ "figure": id, "G": config.g(), "n": config.n(), "t": grid_text });
    let request = |definition, method, n_poles| SurvivalRequest {
        config: *config,
        grid,
        definition,
        method,
        n_poles,
        settings,
    };
    let table = match id {
        1 | 2 => {
            let tau = leading_lifetime(config)?;
            let quantity = if id == 1 { DeviationQuantity::Current } else { DeviationQuantity::Survival };
            let series = exp_deviation_series(grid, config, tau, quantity, DeviationReference::Unit)?;
            parameters["tau"] = json!(tau);
            parameters["reference"] = json!("unit");
            let mut table = Table::new(&["T", "ratio"]);
            for (t, r) in series {
                table.push(vec![t.into(), r.into()]);
            }
            table
        }
        3 | 4 => {
            let method = if id == 3 { Method::Quadrature } else { Method::Auto };
            let (points, _) = survival_points(&request(Definition::InWell, method, 4), cache)?;
            parameters["method"] = json!(method.as_str());
            let mut table = Table::new(&["T", "P", "err_est", "method"]);
            for p in points {
                table.push(vec![p.t.into(), p.p.into(), p.err_est.into(), p.method.as_str().into()]);
            }
            table
        }
        5 => {
            let (in_well, _) = survival_points(&request(Definition::InWell, Method::Poles, 2), cache)?;
            let (overlap, _) = survival_points(&request(Definition::Overlap, Method::Poles, 2), cache)?;
            parameters["poles"] = json!(2);
            let mut table = Table::new(&["T", "in_well", "overlap"]);
            for (a, b) in in_well.iter().zip(&overlap) {
                table.push(vec![a.t.into(), a.p.into(), b.p.into()]);
            }
            table
        }
        6 => {
            // two poles below T = 2, hybrid (four poles plus background) from there on
            let (short, long): (Vec<f64>, Vec<f64>) = grid.iter().partition(|&&t| t < 2.0);
            let mut rows = Vec::new();
            for (part, method, n_poles) in [(&short, Method::Poles, 2), (&long, Method::Hybrid, 4)] {
                let sub = |definition| SurvivalRequest { config: *config, grid: part, definition, method, n_poles, settings };
                let (in_well, _) = survival_points(&sub(Definition::InWell), cache)?;
                let (overlap, _) = survival_points(&sub(Definition::Overlap), cache)?;
                for (a, b) in in_well.iter().zip(&overlap) {
                    rows.push(vec![a.t.into(), a.p.into(), b.p.into(), (a.p / b.p).into(), method.as_str().into()]);
                }
            }
            rows.sort_by(|a: &Vec<Cell>, b| match (&a[0], &b[0]) {
                (Cell::Float(x), Cell::Float(y)) => x.total_cmp(y),
                _ => std::cmp::Ordering::Equal,
            });
            let mut table = Table::new(&["T", "in_well", "overlap", "ratio", "method"]);
            table.rows = rows;
            table
        }
        other => bail!(leaky_well::Error::Domain(format!("unknown figure {other}; expected 1 to 6"))),
    };
    Ok(Output { table, parameters })
}
