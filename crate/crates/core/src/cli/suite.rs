//! The eight-case regression suite.

use rayon::prelude::*;

use super::table::Table;
use crate::engine::{simulate, EngineError, EventKind, SimResult};
use crate::scenarios::{build_initial_conditions, catalog, game_config, CaseId, CaseKind, TestCase, UnitSystem, NMAC_RADIUS_M, SUITE_RANGES_M};
use crate::strategies::{AircraftStrategy, HazardBehavior};

pub const HEAD_ON_MIN_MISS_M: f64 = 300.0;
pub const CONVERGING_MIN_MISS_M: f64 = 500.0;
pub const MIN_R_SQUARED: f64 = 0.95;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteRow {
    pub r0_m: f64,
    pub miss_m: f64,
    pub miss_normalized: f64,
    pub miss_time_s: f64,
    pub nmac: bool,
    pub collision: bool,
}

#[derive(Debug, Clone)]
pub struct CaseReport {
    pub case: TestCase,
    pub units: UnitSystem,
    pub rows: Vec<SuiteRow>,
    /// Simulation at the largest initial range.
    pub longest: SimResult,
}

impl CaseReport {
    pub fn r_squared(&self) -> f64 {
        let xs: Vec<f64> = self.rows.iter().map(|r| r.r0_m).collect();
        let ys: Vec<f64> = self.rows.iter().map(|r| r.miss_m).collect();
        r_squared(&xs, &ys)
    }

    pub fn at(&self, r0_m: f64) -> Option<&SuiteRow> {
        self.rows.iter().find(|r| r.r0_m == r0_m)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["r0_m", "miss_m", "miss_normalized", "miss_time_s", "nmac", "collision"]);
        for r in &self.rows {
            t.push(vec![
                r.r0_m.to_string(),
                r.miss_m.to_string(),
                r.miss_normalized.to_string(),
                r.miss_time_s.to_string(),
                r.nmac.to_string(),
                r.collision.to_string(),
            ]);
        }
        t
    }
}

/// Coefficient of determination of the least-squares line through the points.
pub fn r_squared(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if syy == 0.0 {
        return 1.0;
    }
    if sxx == 0.0 {
        return 0.0;
    }
    sxy * sxy / (sxx * syy)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub case: CaseId,
    pub value: f64,
    pub threshold: String,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub cases: Vec<CaseReport>,
}

impl SuiteReport {
    pub fn case(&self, id: CaseId) -> &CaseReport {
        self.cases.iter().find(|c| c.case.id == id).expect("suite covers every case")
    }

    /// Threshold checks at the largest range plus the linearity of every case
    /// that is expected to miss.
    pub fn checks(&self) -> Vec<Check> {
        let r_max = SUITE_RANGES_M[SUITE_RANGES_M.len() - 1];
        let mut out = Vec::new();
        for c in &self.cases {
            let id = c.case.id;
            let row = c.at(r_max).expect("largest range is simulated");
            let check = match (c.case.kind, id) {
                (CaseKind::HeadOn, _) => Check {
                    name: "miss_at_2000m".into(),
                    case: id,
                    value: row.miss_m,
                    threshold: format!("> {HEAD_ON_MIN_MISS_M}"),
                    pass: row.miss_m > HEAD_ON_MIN_MISS_M,
                },
                (CaseKind::Converging, _) => Check {
                    name: "miss_at_2000m".into(),
                    case: id,
                    value: row.miss_m,
                    threshold: format!("> {CONVERGING_MIN_MISS_M}"),
                    pass: row.miss_m > CONVERGING_MIN_MISS_M,
                },
                (CaseKind::Overtaking, CaseId::O1) => Check {
                    name: "collision_at_2000m".into(),
                    case: id,
                    value: row.miss_m,
                    threshold: format!("< {NMAC_RADIUS_M}"),
                    pass: row.miss_m < NMAC_RADIUS_M,
                },
                (CaseKind::Overtaking, _) => Check {
                    name: "no_nmac_at_2000m".into(),
                    case: id,
                    value: row.miss_m,
                    threshold: format!(">= {NMAC_RADIUS_M}"),
                    pass: !row.nmac,
                },
            };
            out.push(check);
            if id != CaseId::O1 {
                let r2 = c.r_squared();
                out.push(Check {
                    name: "linearity_r2".into(),
                    case: id,
                    value: r2,
                    threshold: format!(">= {MIN_R_SQUARED}"),
                    pass: r2 >= MIN_R_SQUARED,
                });
            }
        }
        out
    }

    pub fn checks_table(&self) -> Table {
        let mut t = Table::new(&["check", "case", "value", "threshold", "pass"]);
        for c in self.checks() {
            t.push(vec![c.name, c.case.to_string(), c.value.to_string(), c.threshold, c.pass.to_string()]);
        }
        t
    }
}

/// Simulates every case at every suite range against a non-responsive hazard.
pub fn run_suite(strategy: &AircraftStrategy, dt: Option<f64>) -> Result<SuiteReport, EngineError> {
    let cases = catalog();
    let jobs: Vec<(usize, f64)> = (0..cases.len()).flat_map(|i| SUITE_RANGES_M.iter().map(move |&r| (i, r))).collect();
    let results: Vec<SimResult> = jobs
        .par_iter()
        .map(|&(i, r0)| {
            let tc = &cases[i];
            let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
            let w = build_initial_conditions(tc, r0, &units)
                .map_err(|e| EngineError::InvalidInitialState(format!("{}: {e}", tc.id)))?;
            let mut cfg = game_config(tc, &w, &units);
            if let Some(dt) = dt {
                cfg.dt = dt;
            }
            simulate(&w, strategy, &HazardBehavior::NonResponsive { heading: None }, &cfg)
        })
        .collect::<Result<_, _>>()?;
    let mut results = results.into_iter();
    let mut reports = Vec::new();
    for tc in cases {
        let units = UnitSystem::from_knots(tc.aircraft_speed_kt);
        let mut rows = Vec::new();
        let mut longest = None;
        for &r0 in &SUITE_RANGES_M {
            let res = results.next().expect("one result per job");
            rows.push(SuiteRow {
                r0_m: r0,
                miss_m: units.to_si_length(res.miss_distance),
                miss_normalized: res.miss_distance,
                miss_time_s: units.to_si_time(res.miss_time),
                nmac: res.has_event(EventKind::Nmac),
                collision: res.has_event(EventKind::Collision),
            });
            longest = Some(res);
        }
        reports.push(CaseReport {
            case: tc,
            units,
            rows,
            longest: longest.expect("at least one range"),
        });
    }
    Ok(SuiteReport { cases: reports })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_squared_oracle() {
        assert!((r_squared(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]) - 1.0).abs() < 1e-15);
        // Oracle: hand computation for (1,1), (2,3), (3,2): sxy = 1, sxx = 2, syy = 2.
        assert!((r_squared(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]) - 0.25).abs() < 1e-15);
    }
}
