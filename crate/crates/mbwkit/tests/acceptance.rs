//! End-to-end acceptance checks. Runs without the test harness so that each
//! check prints exactly one PASS or FAIL line; exits non-zero if any fail.

use std::process::Command;
use std::time::{Duration, Instant};

use mbwkit_core::analysis::{compare, linear_fit, zscores, MethodScores, Orientation};
use mbwkit_core::blur::{default_transitions, mprc, mprt, mprt_with_prefilter, retinal_profile, transition_metrics};
use mbwkit_core::display::{lcrc, DisplayModel, GrayLevel, LcResponse, DEFAULT_DECAY_TAU, DEFAULT_PULSE_WIDTH};
use mbwkit_core::rig::{self, matched_window, measure_at, sweep, RigConfig};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestRunner};

const RATE: f64 = 20_000.0;
const VELOCITIES: std::ops::RangeInclusive<u32> = 5..=20;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn point_rig() -> RigConfig {
    RigConfig { aperture_px: 1, ..RigConfig::default() }
}

fn lc(tau: f64) -> DisplayModel {
    DisplayModel::exponential_lc(60.0, tau, tau).unwrap()
}

fn ideal_hold_mprt() -> Outcome {
    let model = DisplayModel::ideal_hold(60.0).unwrap();
    let got = mprt(&model, &default_transitions(), 10, RATE).unwrap().mprt_s * 1e3;
    let expect = 0.8 * 1e3 / 60.0;
    let rel = (got - expect).abs() / expect;
    outcome(rel <= 0.005, format!("mprt={got:.4} ms, expected {expect:.4} ms, rel err {:.3}%", rel * 100.0))
}

fn retinal_equivalence() -> Outcome {
    let models = [
        ("ideal-hold", DisplayModel::ideal_hold(60.0).unwrap()),
        ("lc 2 ms", lc(2e-3)),
        ("lc 8 ms", lc(8e-3)),
        ("impulse", DisplayModel::impulse(60.0, DEFAULT_PULSE_WIDTH, DEFAULT_DECAY_TAU).unwrap()),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for rate in [20_000.0, 24_000.0] {
        let n = (rate / 60.0f64).round();
        let bound = 2.0 / n;
        for (name, model) in &models {
            let mut worst = 0.0f64;
            for v in 1..=20 {
                worst = worst.max(retinal_gap(model, v, rate));
            }
            pass &= worst <= bound;
            parts.push(format!("{name}@{}k {worst:.1e}", rate / 1e3));
        }
        parts.push(format!("bound {bound:.1e}"));
    }
    outcome(pass, format!("max |retina - mprc| over v=1..20: {}", parts.join(", ")))
}

/// Largest difference between the retinal leading edge and the MPRC under
/// `t = t_switch - T - r T / v`.
fn retinal_gap(model: &DisplayModel, v: u32, rate: f64) -> f64 {
    let period = model.frame_period();
    let block = 2 * v * (model.settling_frames() as u32 + 2);
    let profile = retinal_profile(model, block, v, rate).unwrap();
    let curve = lcrc(model, GrayLevel::BLACK, GrayLevel::WHITE, rate).unwrap();
    let m = mprc(&curve.trace, period).unwrap();
    let mut worst = 0.0f64;
    for (&r, &value) in profile.positions.iter().zip(&profile.values) {
        let t = curve.switch_time - period - r * period / v as f64;
        if r >= -(block as f64) / 2.0 && t >= m.start_time() && t <= m.end_time() {
            worst = worst.max((value - m.value_at(t)).abs());
        }
    }
    worst
}

fn rig_geometry() -> Outcome {
    let hold = DisplayModel::ideal_hold(60.0).unwrap();
    let mut pass = true;
    let (mut worst_point, mut worst_wide) = (0.0f64, 0.0f64);
    for v in VELOCITIES {
        let d1 = measure_at(&point_rig(), &hold, v, None).unwrap().delta_mbw_px;
        let d500 = measure_at(&RigConfig::default(), &hold, v, None).unwrap().delta_mbw_px;
        pass &= d1.abs() <= v as f64 && (d500 - 400.0).abs() <= v as f64;
        worst_point = worst_point.max(d1.abs() / v as f64);
        worst_wide = worst_wide.max((d500 - 400.0).abs() / v as f64);
    }
    outcome(
        pass,
        format!("max |dMBW|/v (A=1) = {worst_point:.3}; max |dMBW-400|/v (A=500) = {worst_wide:.3}"),
    )
}

fn monotonicity() -> Outcome {
    let taus = [1e-3, 2e-3, 4e-3, 8e-3, 16e-3];
    let vs: Vec<u32> = VELOCITIES.collect();
    let mprts: Vec<f64> =
        taus.iter().map(|&t| mprt(&lc(t), &default_transitions(), 10, RATE).unwrap().mprt_s * 1e3).collect();
    let slope = |rig: &RigConfig, m: &DisplayModel| sweep(rig, m, "", &vs).unwrap().fit.unwrap().slope_b;
    let point: Vec<f64> = taus.iter().map(|&t| slope(&point_rig(), &lc(t))).collect();
    let wide: Vec<f64> = taus.iter().map(|&t| slope(&RigConfig::default(), &lc(t))).collect();
    let hold = DisplayModel::ideal_hold(60.0).unwrap();
    let hold_b = [slope(&point_rig(), &hold), slope(&RigConfig::default(), &hold)];
    let increasing = |v: &[f64]| v.windows(2).all(|p| p[1] > p[0]);
    let pass = increasing(&mprts) && increasing(&point) && hold_b.iter().all(|b| b.abs() <= 1.0);
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join(" ");
    outcome(
        pass,
        format!(
            "mprt ms [{}]; b (A=1) [{}]; hold b {:.3}/{:.3}; b (A=500, not gated) [{}]",
            fmt(&mprts),
            fmt(&point),
            hold_b[0],
            hold_b[1],
            fmt(&wide)
        ),
    )
}

fn filter_robustness() -> Outcome {
    let presets = rig::presets(60.0).unwrap();
    let mut pass = true;
    let mut worst = (0.0f64, "", 0u32, 0u32);
    let mut order_note = Vec::new();
    for aperture in [1, 500] {
        let rig = RigConfig { aperture_px: aperture, ..RigConfig::default() };
        let mut at12 = Vec::new();
        for (name, model) in &presets {
            let window = matched_window(model);
            for v in VELOCITIES {
                let raw = measure_at(&rig, model, v, None).unwrap().delta_mbw_px;
                let filtered = measure_at(&rig, model, v, window).unwrap().delta_mbw_px;
                let diff = (raw - filtered).abs();
                pass &= diff <= 2.0;
                if diff > worst.0 {
                    worst = (diff, name, v, aperture);
                }
                if v == 12 {
                    at12.push((*name, raw, filtered));
                }
            }
        }
        let order = |key: fn(&(&str, f64, f64)) -> f64| {
            let mut s = at12.clone();
            s.sort_by(|a, b| key(a).total_cmp(&key(b)));
            s.iter().map(|e| e.0).collect::<Vec<_>>()
        };
        let same = order(|e| e.1) == order(|e| e.2);
        if aperture == 1 {
            pass &= same;
        }
        order_note.push(format!("A={aperture} rank at v=12 {}", if same { "unchanged" } else { "changed" }));
    }
    outcome(
        pass,
        format!(
            "max |filtered - raw| = {:.2} px ({} v={} A={}); {} (rank gated on A=1)",
            worst.0,
            worst.1,
            worst.2,
            worst.3,
            order_note.join(", ")
        ),
    )
}

fn blink_limit() -> Outcome {
    let base = LcResponse::symmetric(4e-3);
    // one flash per frame, placed at the end of the frame
    let n_bet: Vec<f64> = [1.0, 0.5, 0.25]
        .iter()
        .map(|&duty| {
            let m = DisplayModel::backlight_blink(60.0, base, 60.0, duty, 1.0 - duty).unwrap();
            mprt(&m, &default_transitions(), 10, RATE).unwrap().mprt_s * 1e3
        })
        .collect();
    let decreasing = n_bet.windows(2).all(|p| p[1] < p[0]);

    let mut ratios = Vec::new();
    for duty in [0.5, 0.25] {
        let (mut raw, mut improved) = (Vec::new(), Vec::new());
        for k in 0..8 {
            let m = DisplayModel::backlight_blink(60.0, base, rig::BLINK_FREQ_HZ, duty, k as f64 / 8.0).unwrap();
            let window = matched_window(&m);
            raw.push(mprt(&m, &default_transitions(), 10, RATE).unwrap().mprt_s);
            improved.push(mprt_with_prefilter(&m, &default_transitions(), 10, RATE, window).unwrap().mprt_s);
        }
        ratios.push((duty, variance(&raw) / variance(&improved)));
    }
    let stable = ratios.iter().all(|&(_, r)| r >= 10.0);
    outcome(
        decreasing && stable,
        format!(
            "n-bet ms at duty 1/0.5/0.25 = {:.3}/{:.3}/{:.3}; phase variance raw/improved at {} Hz: {}",
            n_bet[0],
            n_bet[1],
            n_bet[2],
            rig::BLINK_FREQ_HZ,
            ratios.iter().map(|(d, r)| format!("duty {d} {r:.1}x")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn analysis_exactness() -> Outcome {
    let mut pass = true;
    let mut worst_fit = 0.0f64;
    for xs in [vec![0.0, 1.0], vec![1.0, 2.0, 3.0, 4.0], (5..=20).map(f64::from).collect::<Vec<_>>()] {
        let xy: Vec<(f64, f64)> = xs.iter().map(|&x| (x, 1.0 + 2.0 * x)).collect();
        let f = linear_fit(&xy).unwrap();
        let err = (f.intercept_a - 1.0).abs().max((f.slope_b - 2.0).abs()).max((f.r_squared - 1.0).abs());
        worst_fit = worst_fit.max(err);
    }
    pass &= worst_fit <= 1e-12;

    let mut worst_z = 0.0f64;
    for values in [vec![3.0, 5.0, 7.0], vec![12.5, 9.0, 31.0, 4.4, 18.0, 7.7, 21.0, 15.0, 11.1], vec![-1e3, 0.0, 1e3, 2e3]] {
        let z = zscores(&values).unwrap();
        let n = z.len() as f64;
        let mean = z.iter().sum::<f64>() / n;
        let sd = (z.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
        worst_z = worst_z.max(mean.abs()).max((sd - 1.0).abs());
    }
    pass &= worst_z <= 1e-12;

    let mut runner = TestRunner::new_with_rng(
        Config { cases: 100, failure_persistence: None, ..Config::default() },
        proptest::test_runner::TestRng::deterministic_rng(proptest::test_runner::RngAlgorithm::ChaCha),
    );
    let table = (
        prop::collection::btree_set(-4000i32..4000, 3..12),
        prop::collection::vec(-500i32..500, 12),
        0.01f64..100.0,
        -1000.0f64..1000.0,
        0usize..2,
        any::<bool>(),
    );
    let affine = runner.run(&table, |(a, b, scale, shift, which, lower)| {
        let devices: Vec<String> = (0..a.len()).map(|i| format!("dut{i}")).collect();
        let col = |vals: Vec<f64>| devices.iter().cloned().zip(vals).collect::<Vec<_>>();
        let orientation = if lower { Orientation::LowerIsBetter } else { Orientation::HigherIsBetter };
        let first: Vec<f64> = a.iter().map(|&v| v as f64 / 4.0).collect();
        let second: Vec<f64> = b[..a.len()].iter().map(|&v| v as f64 / 4.0).collect();
        let mut methods = vec![
            MethodScores::new("mbw", orientation, col(first)).unwrap(),
            MethodScores::new("other", Orientation::HigherIsBetter, col(second)).unwrap(),
        ];
        if methods[1].values.iter().all(|(_, v)| *v == methods[1].values[0].1) {
            return Ok(());
        }
        let before = compare(&methods).unwrap();
        for (_, v) in methods[which].values.iter_mut() {
            *v = scale * *v + shift;
        }
        let after = compare(&methods).unwrap();
        for (c, d) in before.columns.iter().zip(&after.columns) {
            prop_assert_eq!(&c.rank, &d.rank);
        }
        Ok(())
    });
    let affine_ok = affine.is_ok();
    pass &= affine_ok;
    outcome(
        pass,
        format!(
            "fit err {worst_fit:.1e}; z-score err {worst_z:.1e}; affine rank invariance over 100 tables: {}",
            if affine_ok { "held".to_string() } else { format!("{affine:?}") }
        ),
    )
}

fn round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_mbwkit");
    let run = |args: &[&str]| {
        let status = Command::new(bin).args(args).output().unwrap();
        assert!(status.status.success(), "{args:?}: {}", String::from_utf8_lossy(&status.stderr));
    };
    let path = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let read = |p: &str| std::fs::read(p).unwrap();
    let mut pass = true;
    let mut worst = 0.0f64;
    for preset in ["ideal-hold", "lc-slow", "lc-asymmetric", "crt", "blink"] {
        let (curve, normalized, report) =
            (path(&format!("{preset}.csv")), path(&format!("{preset}.norm.csv")), path(&format!("{preset}.mprt.csv")));
        let steps: [Vec<&str>; 3] = [
            vec!["lcrc", "--preset", preset, "--quiet", "--out", &curve],
            vec!["ingest", &curve, "--quiet", "--out", &normalized],
            vec!["mprt", "--waveform", &normalized, "--velocity", "10", "--quiet", "--out", &report],
        ];
        let mut first = Vec::new();
        for step in &steps {
            run(step);
        }
        for f in [&curve, &normalized, &report] {
            first.push((read(f), read(&format!("{f}.manifest.json"))));
        }
        for step in &steps {
            run(step);
        }
        for (f, before) in [&curve, &normalized, &report].iter().zip(&first) {
            pass &= read(f) == before.0 && read(&format!("{f}.manifest.json")) == before.1;
        }
        let text = String::from_utf8(read(&report)).unwrap();
        let row = text.lines().nth(1).unwrap();
        let cli_ms: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        let model = rig::presets(60.0).unwrap().into_iter().find(|(n, _)| *n == preset).unwrap().1;
        let memory_ms =
            transition_metrics(&model, GrayLevel::BLACK, GrayLevel::WHITE, 10, RATE, None).unwrap().n_bet_s * 1e3;
        worst = worst.max((cli_ms - memory_ms).abs());
    }
    pass &= worst <= 1e-9;
    outcome(pass, format!("max |cli - in-memory| n-bet = {worst:.1e} ms; repeated runs byte-identical: {pass}"))
}

type Check = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let checks: [Check; 8] = [
        ("1 ideal hold mprt", ideal_hold_mprt, Duration::from_secs(1)),
        ("2 retinal/mprc equivalence", retinal_equivalence, Duration::from_secs(30)),
        ("3 rig geometry", rig_geometry, Duration::from_secs(30)),
        ("4 monotonicity", monotonicity, Duration::from_secs(120)),
        ("5 filter robustness", filter_robustness, Duration::from_secs(600)),
        ("6 backlight blink", blink_limit, Duration::from_secs(600)),
        ("7 analysis exactness", analysis_exactness, Duration::from_secs(600)),
        ("8 round trip", round_trip, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (name, check, budget) in checks {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= budget;
        let pass = result.pass && in_time;
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.2} s{}]",
            if pass { "PASS" } else { "FAIL" },
            result.detail,
            elapsed.as_secs_f64(),
            if in_time { String::new() } else { format!(", over {} s budget", budget.as_secs()) }
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
