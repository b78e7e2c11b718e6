//! Timing of the metric routes on seeded random inputs.

use std::hint::black_box;
use std::time::Instant;

use crate::coeffs::CoeffRoute;
use crate::error::{Error, Result};
use crate::invariants::{StateMatrix, TangentMatrix};
use crate::matrix_file::json_number;
use crate::metric::PreparedState;
use crate::oracle::bures_eigen_oracle;
use crate::random::{random_state, random_tangent, rng_from_seed, StateOptions};
use crate::selftest::SPECTRUM_FLOOR;
use crate::sylvester::solve_dense;
use crate::tolerance::Tolerances;

pub const MIN_REPS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchRoute {
    Prop1,
    Prop2,
    Prop4,
    Oracle,
    /// `n^2 x n^2` linear solve of the vectorized equation.
    Dense,
}

impl BenchRoute {
    pub const ALL: [BenchRoute; 5] = [
        BenchRoute::Prop1,
        BenchRoute::Prop2,
        BenchRoute::Prop4,
        BenchRoute::Oracle,
        BenchRoute::Dense,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchRoute::Prop1 => "prop1",
            BenchRoute::Prop2 => "prop2",
            BenchRoute::Prop4 => "prop4",
            BenchRoute::Oracle => "oracle",
            BenchRoute::Dense => "dense",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown route `{s}`")))
    }

    fn has_cache(self) -> bool {
        matches!(self, BenchRoute::Prop1 | BenchRoute::Prop2 | BenchRoute::Prop4)
    }
}

#[derive(Debug, Clone)]
pub struct BenchRecord {
    pub n: usize,
    pub route: BenchRoute,
    /// Median over repetitions including all per-state preparation.
    pub cold_ns: u128,
    /// Median with the per-state cache already filled; cached routes only.
    pub amortized_ns: Option<u128>,
    pub value: f64,
    /// Relative gap to the oracle value.
    pub residual: f64,
    pub generic: bool,
    pub consistent: bool,
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub n_list: Vec<usize>,
    pub routes: Vec<BenchRoute>,
    pub reps: usize,
    pub seed: u64,
    pub tol: Tolerances,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
    pub warnings: Vec<String>,
}

fn evaluate(route: BenchRoute, p: &PreparedState, yp: &TangentMatrix, y: &TangentMatrix) -> Result<f64> {
    Ok(match route {
        BenchRoute::Prop1 => p.prop1(yp, y)?.value,
        BenchRoute::Prop2 => p.prop2(yp, y)?.value,
        BenchRoute::Prop4 => p.prop4(yp, y)?.value,
        BenchRoute::Oracle => bures_eigen_oracle(p.state(), yp, y)?.value,
        BenchRoute::Dense => {
            let x = solve_dense(p.state(), y, p.tolerances())?;
            0.5 * (yp.matrix() * x.x.matrix()).trace().re
        }
    })
}

fn median(mut v: Vec<u128>) -> u128 {
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2
    }
}

fn time_cold(route: BenchRoute, state: &StateMatrix, yp: &TangentMatrix, y: &TangentMatrix, tol: &Tolerances, reps: usize) -> Result<u128> {
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        let p = PreparedState::new(state.clone(), tol);
        black_box(evaluate(route, &p, yp, y)?);
        samples.push(start.elapsed().as_nanos());
    }
    Ok(median(samples))
}

fn time_amortized(route: BenchRoute, p: &PreparedState, yp: &TangentMatrix, y: &TangentMatrix, reps: usize) -> Result<u128> {
    let mut samples = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        black_box(evaluate(route, p, yp, y)?);
        samples.push(start.elapsed().as_nanos());
    }
    Ok(median(samples))
}

pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    if cfg.reps == 0 {
        return Err(Error::InvalidArgument("reps must be at least 1".into()));
    }
    if let Some(&n) = cfg.n_list.iter().find(|&&n| n == 0) {
        return Err(Error::InvalidArgument(format!("invalid size {n}")));
    }
    let mut warnings = Vec::new();
    if cfg.reps < MIN_REPS {
        warnings.push(format!(
            "{} repetitions: medians are degenerate below {MIN_REPS}",
            cfg.reps
        ));
    }
    let mut records = Vec::new();
    for &n in &cfg.n_list {
        let mut rng = rng_from_seed(cfg.seed ^ n as u64);
        let state = random_state(n, &StateOptions::with_floor(SPECTRUM_FLOOR), &mut rng)?;
        let yp = random_tangent(n, &mut rng);
        let y = random_tangent(n, &mut rng);
        let oracle = bures_eigen_oracle(&state, &yp, &y)?.value;
        let prepared = PreparedState::new(state.clone(), &cfg.tol);
        for &route in &cfg.routes {
            match evaluate(route, &prepared, &yp, &y) {
                Ok(value) => {
                    let residual = (value - oracle).abs() / oracle.abs().max(1.0);
                    let consistent = residual <= cfg.tol.xroute;
                    if !consistent {
                        warnings.push(format!(
                            "n={n} {}: value deviates from the oracle by {residual:.3e}",
                            route.name()
                        ));
                    }
                    let cold_ns = time_cold(route, &state, &yp, &y, &cfg.tol, cfg.reps)?;
                    let amortized_ns = if route.has_cache() {
                        if route != BenchRoute::Prop1 {
                            prepared.coefficients(CoeffRoute::Companion)?;
                        }
                        Some(time_amortized(route, &prepared, &yp, &y, cfg.reps)?)
                    } else {
                        None
                    };
                    records.push(BenchRecord {
                        n,
                        route,
                        cold_ns,
                        amortized_ns,
                        value,
                        residual,
                        generic: prepared.genericity().generic,
                        consistent,
                    });
                }
                Err(e) => warnings.push(format!("n={n} {}: skipped ({e})", route.name())),
            }
        }
    }
    Ok(BenchReport { records, warnings })
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{:>3}  {:<7} {:>14} {:>14}  {:<24} {:<10} {}\n",
            "n", "route", "cold_ns", "amortized_ns", "value", "residual", "generic"
        );
        for r in &self.records {
            let amortized = r.amortized_ns.map_or("-".to_string(), |v| v.to_string());
            out.push_str(&format!(
                "{:>3}  {:<7} {:>14} {:>14}  {:<24} {:<10.3e} {}\n",
                r.n,
                r.route.name(),
                r.cold_ns,
                amortized,
                json_number(r.value),
                r.residual,
                r.generic
            ));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .records
            .iter()
            .map(|r| {
                format!(
                    "    {{\"n\": {}, \"route\": \"{}\", \"cold_ns\": {}, \"amortized_ns\": {}, \"value\": {}, \"residual\": {}, \"generic\": {}, \"consistent\": {}}}",
                    r.n,
                    r.route.name(),
                    r.cold_ns,
                    r.amortized_ns.map_or("null".to_string(), |v| v.to_string()),
                    json_number(r.value),
                    json_number(r.residual),
                    r.generic,
                    r.consistent
                )
            })
            .collect();
        let warnings: Vec<String> = self.warnings.iter().map(|w| serde_json::to_string(w).unwrap_or_default()).collect();
        format!(
            "{{\n  \"kind\": \"bench\",\n  \"records\": [\n{}\n  ],\n  \"warnings\": [{}]\n}}\n",
            rows.join(",\n"),
            warnings.join(", ")
        )
    }
}
