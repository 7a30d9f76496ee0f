//! Acceptance suite: one pass/fail line per criterion, nonzero exit on any
//! failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use bubble_core::runner::{
    family_checks, family_refinement, family_sweep, gn_checks, gn_run, sphere_calibration,
    stereo_checks, stereo_run, torsion_checks, torsion_run, Check, FamilySweep,
    DEFAULT_STEREO_RESOLUTION,
};
use bubble_core::torsion::ACCEPTANCE_MESH;
use bubble_core::ExperimentConfig;

const POWER_TUPLES: [(usize, u32, f64, f64); 4] = [
    (6, 1, 1.0, 2.0),
    (6, 2, 1.0, 2.0),
    (5, 2, 1.0, 1.6),
    (7, 1, 1.0, 2.0),
];
const SINGULAR_TUPLE: (usize, u32, f64, f64) = (5, 1, 0.8, 2.0);
const TUPLE_BUDGET: Duration = Duration::from_secs(120);
const CALIBRATION_BUDGET: Duration = Duration::from_secs(5);

struct Criterion {
    id: usize,
    title: &'static str,
    checks: Vec<Check>,
}

impl Criterion {
    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.passed)
    }
}

fn config(tuple: (usize, u32, f64, f64), singular: bool) -> ExperimentConfig {
    ExperimentConfig {
        dim_n: tuple.0,
        k: tuple.1,
        alpha: tuple.2,
        r: tuple.3,
        singular,
        ..ExperimentConfig::default()
    }
}

fn label(sweep: &FamilySweep) -> String {
    let c = &sweep.config;
    format!("({},{},{},{})", c.dim_n, c.k, c.alpha, c.r)
}

fn pick(sweep: &FamilySweep, names: &[&str]) -> Vec<Check> {
    family_checks(sweep)
        .into_iter()
        .filter(|c| names.iter().any(|n| c.name.starts_with(n)))
        .map(|c| Check {
            name: format!("{} {}", label(sweep), c.name),
            ..c
        })
        .collect()
}

fn failed(name: &str, e: impl std::fmt::Display) -> Vec<Check> {
    vec![Check::new(name, false, format!("error: {e}"))]
}

fn main() -> ExitCode {
    let mut criteria = Vec::new();

    let mut sweeps = Vec::new();
    let mut timing = Vec::new();
    let mut sweep_errors = Vec::new();
    for tuple in POWER_TUPLES {
        let start = Instant::now();
        match family_sweep(&config(tuple, false)) {
            Ok(s) => {
                let elapsed = start.elapsed();
                timing.push(Check::new(
                    format!("{} runtime", label(&s)),
                    elapsed <= TUPLE_BUDGET,
                    format!("{:.2} s", elapsed.as_secs_f64()),
                ));
                sweeps.push(s);
            }
            Err(e) => sweep_errors.extend(failed(&format!("{tuple:?}"), e)),
        }
    }
    let collect = |names: &[&str], extra: &[Check]| -> Vec<Check> {
        let mut v: Vec<Check> = sweeps.iter().flat_map(|s| pick(s, names)).collect();
        v.extend(extra.iter().cloned());
        v.extend(sweep_errors.iter().cloned());
        v
    };
    criteria.push(Criterion {
        id: 1,
        title: "power-regime exponent tau",
        checks: collect(&["tau slope"], &timing),
    });
    criteria.push(Criterion {
        id: 2,
        title: "deviation rate",
        checks: collect(&["dev slope"], &[]),
    });
    criteria.push(Criterion {
        id: 3,
        title: "gap rate and lower bound",
        checks: collect(&["gap slope", "gap lower"], &[]),
    });

    let singular_cfg = config(SINGULAR_TUPLE, true);
    let singular = family_sweep(&singular_cfg);
    let mut c4 = Vec::new();
    let mut c5 = collect(&["vol slope", "per slope", "vol bound"], &[]);
    match &singular {
        Ok(s) => {
            c4.extend(pick(s, &["dev slope"]));
            c5.extend(pick(s, &["vol slope", "per slope", "vol bound"]));
        }
        Err(e) => c4.extend(failed("singular sweep", e)),
    }
    match family_refinement(&singular_cfg) {
        Ok(r) => {
            c4.push(Check::new(
                "sampled max grows under refinement",
                r.max_grows(),
                format!(
                    "max |H-H0| at largest t: {:.4e} -> {:.4e}",
                    r.max_deviation_coarse.last().unwrap(),
                    r.max_deviation_fine.last().unwrap()
                ),
            ));
            c4.push(Check::new(
                "dev_Lr refinement-stable",
                r.max_relative_change <= 0.03,
                format!(
                    "max change {:.3}% from resolution {} to {}",
                    100.0 * r.max_relative_change,
                    r.coarse,
                    r.fine
                ),
            ));
        }
        Err(e) => c4.extend(failed("singular refinement", e)),
    }
    criteria.push(Criterion {
        id: 4,
        title: "singular mode",
        checks: c4,
    });
    criteria.push(Criterion {
        id: 5,
        title: "measures and perimeters",
        checks: c5,
    });

    let start = Instant::now();
    let mut c6 = Vec::new();
    for n in 2..=7 {
        match sphere_calibration(n, 2.0) {
            Ok(c) => c6.push(Check::new(
                format!("unit sphere N={n}"),
                c.worst() <= 1e-10 && c.gap == 0.0,
                format!("worst deviation {:.2e}, gap {}", c.worst(), c.gap),
            )),
            Err(e) => c6.extend(failed(&format!("unit sphere N={n}"), e)),
        }
    }
    let elapsed = start.elapsed();
    c6.push(Check::new(
        "calibration runtime",
        elapsed <= CALIBRATION_BUDGET,
        format!("{:.3} s", elapsed.as_secs_f64()),
    ));
    criteria.push(Criterion {
        id: 6,
        title: "sphere calibration",
        checks: c6,
    });

    criteria.push(Criterion {
        id: 7,
        title: "Gagliardo-Nirenberg suite",
        checks: gn_run()
            .map(|r| gn_checks(&r))
            .unwrap_or_else(|e| failed("gn", e)),
    });
    criteria.push(Criterion {
        id: 8,
        title: "stereographic transfer",
        checks: stereo_run(DEFAULT_STEREO_RESOLUTION, ExperimentConfig::default().seed)
            .map(|r| stereo_checks(&r))
            .unwrap_or_else(|e| failed("stereo", e)),
    });
    let torsion = torsion_run(ACCEPTANCE_MESH, 2.0).map(|r| torsion_checks(&r));
    let (c9, c10) = match torsion {
        Ok(checks) => checks
            .into_iter()
            .partition(|c| c.name != "rough stability ratio"),
        Err(e) => (failed("torsion", &e), failed("torsion", &e)),
    };
    criteria.push(Criterion {
        id: 9,
        title: "torsion identity",
        checks: c9,
    });
    criteria.push(Criterion {
        id: 10,
        title: "rough stability consistency",
        checks: c10,
    });

    let mut all = true;
    for c in &criteria {
        let ok = c.passed();
        all &= ok;
        println!(
            "criterion {:>2} {}: {}",
            c.id,
            if ok { "PASS" } else { "FAIL" },
            c.title
        );
        for check in &c.checks {
            println!("    {check}");
        }
    }
    let passed = criteria.iter().filter(|c| c.passed()).count();
    println!("acceptance: {passed}/{} criteria passed", criteria.len());
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
