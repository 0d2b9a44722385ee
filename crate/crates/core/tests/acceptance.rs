// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

//! Acceptance gate. Each test prints one `PASS`/`FAIL` line for its
//! criterion before asserting, so `--nocapture` gives a readable summary.

use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config as RunnerConfig, TestRunner};
use qrouter::cli::format::table_cell;
use qrouter::network::{link_budget, max_reach_km, FeasibilityPolicy, Reach, StarNetwork};
use qrouter::photonics::{
    db_to_ratio, router_insertion_loss_db, worst_case_crosstalk_sum, MuxSpec,
};
use qrouter::transport::{
    compare_to_analytic, run_all_trials, run_trials, simulate_router_transit, SimConfig,
    TrialTallies, DEFAULT_SIGMA_THRESHOLD,
};
use qrouter::wiring::{build_plan, verify_plan, NodeId, WavelengthId, WiringPlan};

fn report(id: u32, name: &str, pass: bool, detail: String) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    println!("criterion {id} [{verdict}] {name}: {detail}");
}

fn commercial() -> MuxSpec {
    MuxSpec::new(40, 5.0, -25.0, -30.0).unwrap()
}

fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_qrouter"))
        .args(args)
        .output()
        .expect("binary runs")
}

/// Independent check that a plan is a proper edge coloring with its declared
/// colors: every pair assigned, symmetric, in range, distinct per vertex.
fn brute_force_valid(plan: &WiringPlan) -> bool {
    let n = plan.n_nodes();
    let k = plan.color_count() as u32;
    for u in 0..n {
        let mut seen = vec![false; k as usize + 1];
        for v in (0..n).filter(|&v| v != u) {
            let (a, b) = (NodeId::new(u), NodeId::new(v));
            let (Ok(x), Ok(y)) = (plan.wavelength_for(a, b), plan.wavelength_for(b, a)) else {
                return false;
            };
            let c = x.channel();
            if c != y.channel() || c == 0 || c > k || seen[c as usize] {
                return false;
            }
            seen[c as usize] = true;
        }
    }
    true
}

#[test]
fn criterion_1_small_plans() {
    let start = Instant::now();
    let out = run_cli(&["plan", "5", "--format", "table"]);
    let table = String::from_utf8(out.stdout).unwrap();
    let ab = table_cell(&table, "A", "B");
    let five = verify_plan(&build_plan(5).unwrap()).valid;
    let six = verify_plan(&build_plan(6).unwrap()).valid;
    let elapsed = start.elapsed();
    let pass = out.status.success()
        && ab.as_deref() == Some("2")
        && five
        && six
        && elapsed < Duration::from_secs(1);
    report(
        1,
        "5- and 6-port plans",
        pass,
        format!("A-B={ab:?}, n=5 valid={five}, n=6 valid={six}, {elapsed:?} (< 1 s)"),
    );
    assert!(pass);
}

#[test]
fn criterion_2_color_count_law() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in 2..=64 {
        let plan = build_plan(n).unwrap();
        let expected = if n % 2 == 0 { n - 1 } else { n };
        let verified = verify_plan(&plan).valid;
        let oracle = n > 10 || brute_force_valid(&plan);
        let used: std::collections::BTreeSet<u32> = plan
            .pairs()
            .map(|(u, v)| plan.wavelength_for(u, v).unwrap().channel())
            .collect();
        if !verified || !oracle || plan.color_count() != expected || used.len() != expected {
            failures.push(n);
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(5);
    report(
        2,
        "n = 2..64 use n-1 (even) / n (odd) wavelengths",
        pass,
        format!("failures {failures:?}, brute force agrees for n <= 10, {elapsed:?} (< 5 s)"),
    );
    assert!(pass);
}

#[test]
fn criterion_3_router_insertion_loss() {
    let spec = MuxSpec::isolated(40, 5.0).unwrap();
    let il = router_insertion_loss_db(&spec);
    let pass = il == 10.0;
    report(3, "router insertion loss", pass, format!("IL 5 dB per MUX gives {il} dB (exact 10.0)"));
    assert!(pass);
}

#[test]
fn criterion_4_worst_case_crosstalk() {
    let spec = commercial();
    let signal = spec.mid_band_channel();
    let got = worst_case_crosstalk_sum(&spec, 10.0, signal).unwrap().worst_case_sum;
    // Direct sum: two adjacent neighbors at -25 dB, 37 others at -30 dB, each
    // crossing two MUXes and gaining the 10 dB pre-router handicap.
    let adjacent = 10f64.powf((10.0 - 50.0) / 10.0);
    let nonadjacent = 10f64.powf((10.0 - 60.0) / 10.0);
    let oracle = 2.0 * adjacent + 37.0 * nonadjacent;
    let quoted_bound = 2.0 * adjacent + 36.0 * nonadjacent;
    let pass = (got - 5.7e-4).abs() <= 1e-7 && (got - oracle).abs() <= 1e-15;
    report(
        4,
        "worst-case crosstalk at X = 10 dB",
        pass,
        format!(
            "sum {got:.4e} ({:.4}%), oracle {oracle:.4e}, target 5.7e-4 +/- 1e-7; \
             quoted bound over N-2 interferers {quoted_bound:.4e} ({:.4}%)",
            got * 100.0,
            quoted_bound * 100.0
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_5_reach() {
    let policy = FeasibilityPolicy::new(20.0, 1e-3).unwrap();
    let reach = |il: f64| {
        let net = StarNetwork::new(MuxSpec::isolated(40, il).unwrap(), vec![0.0; 4], 0.2).unwrap();
        match max_reach_km(&net, &policy) {
            Reach::Bounded { per_arm_km, end_to_end_km } => (per_arm_km, end_to_end_km),
            Reach::Unbounded => (f64::INFINITY, f64::INFINITY),
        }
    };
    let (arm5, e2e5) = reach(5.0);
    let (arm1, e2e1) = reach(1.0);
    let pass = (arm5 - 25.0).abs() <= 1e-9 && (e2e5 - 50.0).abs() <= 1e-9 && e2e1 >= 90.0 - 1e-9;
    report(
        5,
        "reach under a 20 dB budget at 0.2 dB/km",
        pass,
        format!("IL 5: {arm5} km/arm, {e2e5} km end to end; IL 1: {arm1} km/arm, {e2e1} km (>= 90)"),
    );
    assert!(pass);
}

#[test]
fn criterion_6_monte_carlo_transit() {
    let start = Instant::now();
    let config = SimConfig::new(commercial(), 1_000_000, 42);
    let sim = simulate_router_transit(&config).unwrap();
    let elapsed = start.elapsed();
    let comparison = compare_to_analytic(&sim, DEFAULT_SIGMA_THRESHOLD);
    let expected_delivered = 0.1;
    let sigma = (expected_delivered * (1.0 - expected_delivered) / 1e6f64).sqrt();
    let z = (sim.delivered_fraction - expected_delivered) / sigma;
    let ratios = &sim.weighted.leak_to_signal_ratio_by_offset;
    let mut worst_rel = 0.0f64;
    let mut ratio_ok = true;
    for offset in [-1i64, 1] {
        match ratios.get(&offset) {
            Some(r) => worst_rel = worst_rel.max(((r - 1e-5) / 1e-5).abs()),
            None => ratio_ok = false,
        }
    }
    ratio_ok &= worst_rel <= 1e-12;
    let pass = z.abs() < 4.0 && ratio_ok && comparison.pass && elapsed < Duration::from_secs(30);
    report(
        6,
        "1e6-photon transit, seed 42",
        pass,
        format!(
            "delivered {:.6} vs 0.1 (z = {z:+.2}, |z| < 4), adjacent wrong/right ratio rel err \
             {worst_rel:.1e} (<= 1e-12), all {} z-checks and {} ratio checks pass = {}, {elapsed:?} (< 30 s)",
            sim.delivered_fraction,
            comparison.z_checks.len(),
            comparison.ratio_checks.len(),
            comparison.pass
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sim.json");
    std::fs::write(&path, r#"{"sim": {"trials": 200000, "seed": 42}}"#).unwrap();
    let p = path.to_str().unwrap();
    let a = run_cli(&["simulate", p]);
    let b = run_cli(&["simulate", p, "--workers", "3"]);
    let identical = a.status.success() && a.stdout == b.stdout;

    let config = SimConfig::new(commercial(), 40_000, 7);
    let whole = run_all_trials(&config).unwrap();
    let mut merged = TrialTallies::default();
    for range in [25_000..40_000, 0..1, 1..25_000] {
        merged.merge(&run_trials(&config, range).unwrap());
    }
    let exact = merged == whole;
    let pass = identical && exact;
    report(
        7,
        "determinism",
        pass,
        format!("two simulate runs byte-identical = {identical}, out-of-order partition merge exact = {exact}"),
    );
    assert!(pass);
}

fn property(name: &str, outcome: Result<(), String>, failures: &mut Vec<String>) {
    match outcome {
        Ok(()) => println!("  property {name}: 1000 cases ok"),
        Err(e) => {
            println!("  property {name}: {e}");
            failures.push(name.to_string());
        }
    }
}

#[test]
fn criterion_8_property_suites() {
    let mut failures = Vec::new();
    let runner = || {
        TestRunner::new(RunnerConfig {
            cases: 1000,
            failure_persistence: None,
            ..RunnerConfig::default()
        })
    };

    let involution = runner().run(&(2usize..200, any::<u64>(), any::<u64>()), |(n, a, w)| {
        let plan = build_plan(n).unwrap();
        let u = NodeId::new((a % n as u64) as usize);
        let w = WavelengthId::new((w % plan.color_count() as u64) as u32 + 1);
        if let Some(v) = plan.route(u, w).unwrap() {
            prop_assert_ne!(u, v);
            prop_assert_eq!(plan.route(v, w).unwrap(), Some(u));
            prop_assert_eq!(plan.wavelength_for(u, v).unwrap(), w);
        }
        Ok(())
    });
    property("route involution", involution.map_err(|e| e.to_string()), &mut failures);

    let symmetry = runner().run(
        &(2usize..40, prop::collection::vec(0.0f64..120.0, 2..40), 0.0f64..0.5),
        |(a, arms, alpha)| {
            let n = arms.len();
            let net = StarNetwork::new(commercial(), arms, alpha).unwrap();
            let policy = FeasibilityPolicy::new(20.0, 1e-3).unwrap();
            let u = NodeId::new(a % n);
            let v = NodeId::new((a + 1) % n);
            let uv = link_budget(&net, u, v, &policy).unwrap();
            let vu = link_budget(&net, v, u, &policy).unwrap();
            prop_assert!((uv.total_loss_db - vu.total_loss_db).abs() <= 1e-9);
            prop_assert_eq!(uv.wavelength, vu.wavelength);
            Ok(())
        },
    );
    property("budget symmetry", symmetry.map_err(|e| e.to_string()), &mut failures);

    let closure = runner().run(
        &(0.5f64..15.0, -45.0f64..-20.0, 0.0f64..10.0, 1u64..200, any::<u64>()),
        |(il, adj, extra, trials, seed)| {
            let spec = MuxSpec::new(8, il, adj, adj - extra).unwrap();
            let sim = simulate_router_transit(&SimConfig::new(spec, trials, seed)).unwrap();
            let c = &sim.counts;
            prop_assert_eq!(c.delivered + c.lost + c.leaked_by_offset.values().sum::<u64>(), trials);
            Ok(())
        },
    );
    property("tally closure", closure.map_err(|e| e.to_string()), &mut failures);

    let composition = runner().run(&(0.0f64..60.0, 0.0f64..60.0), |(a, b)| {
        let product = db_to_ratio(a).value() * db_to_ratio(b).value();
        let combined = db_to_ratio(a + b).value();
        prop_assert!((product - combined).abs() <= 1e-12 * combined.max(1e-300));
        Ok(())
    });
    property("dB composition", composition.map_err(|e| e.to_string()), &mut failures);

    let pass = failures.is_empty();
    report(8, "property suites", pass, format!("failing: {failures:?}"));
    assert!(pass);
}
