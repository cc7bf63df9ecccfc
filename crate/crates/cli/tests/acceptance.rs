//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. The two desk-scale training runs take a few minutes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use deepjam_cli::config::RunConfig;
use deepjam_cli::experiment::{run_experiment, Experiment};
use deepjam_core::fungrid::{
    extend_function, extend_warp, invert_warp, split_function, split_warp, srsf, srsf_inverse, warp_srsf,
};
use deepjam_core::jam::{decompose_total_warp, fit};
use deepjam_core::simgen::{generate, random_warp};
use deepjam_core::sphere::{exp_map, inv_exp_map, karcher_mean_warps, psi_to_warp, warp_to_psi};
use deepjam_core::warpnet::simplex::simplex_forward;
use deepjam_core::{
    Dataset, FunctionSample, Grid, JamConfig, KarcherConfig, NetConfig, Scenario, SimConfig, SrsfSample, TemplateMode,
    TrainedAligner, Warp, WarpNet,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Trapezoid L² norm over all channels, written out independently of the
/// library quadrature.
fn l2(q: &SrsfSample) -> f64 {
    let h = q.grid().spacing();
    q.channels()
        .iter()
        .map(|c| {
            let n = c.len();
            let inner: f64 = c[1..n - 1].iter().map(|v| v * v).sum();
            h * (inner + 0.5 * (c[0] * c[0] + c[n - 1] * c[n - 1]))
        })
        .sum::<f64>()
        .sqrt()
}

fn difference(a: &SrsfSample, b: &SrsfSample) -> SrsfSample {
    let channels = a
        .channels()
        .iter()
        .zip(b.channels())
        .map(|(x, y)| x.iter().zip(y).map(|(u, v)| u - v).collect())
        .collect();
    SrsfSample::new(*a.grid(), channels, vec![0.0; a.num_channels()]).unwrap()
}

fn band_limited(grid: Grid, channels: usize, rng: &mut ChaCha8Rng) -> FunctionSample {
    let coeffs: Vec<Vec<f64>> = (0..channels).map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
    FunctionSample::from_fn(grid, channels, |j, t| {
        coeffs[j]
            .iter()
            .enumerate()
            .map(|(k, c)| c * (std::f64::consts::PI * (k + 1) as f64 * t).sin())
            .sum()
    })
    .unwrap()
}

/// Unit sup-norm combination of `sin(kπt)` and `cos(kπt)` for `k ≤ 2`: the
/// bandwidth of `sin(2πt)`. The prescribed derivative and quadrature schemes
/// lose about `A·ω²h²/4` at frequency `ω`, so the round-trip bound is only
/// meaningful for a fixed band and amplitude.
fn unit_band_limited(grid: Grid, channels: usize, rng: &mut ChaCha8Rng) -> FunctionSample {
    let mut out = Vec::with_capacity(channels);
    for _ in 0..channels {
        let c: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let v: Vec<f64> = grid
            .points()
            .iter()
            .map(|&t| {
                let w = std::f64::consts::PI * t;
                c[0] + c[1] * w.sin() + c[2] * w.cos() + c[3] * (2.0 * w).sin() + c[4] * (2.0 * w).cos()
            })
            .collect();
        let sup = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        out.push(v.iter().map(|x| x / sup).collect());
    }
    FunctionSample::new(grid, out).unwrap()
}

fn smooth_warp(grid: Grid, roughness: f64, rng: &mut ChaCha8Rng) -> Warp {
    random_warp(&grid, roughness, 4, rng).unwrap()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

fn desk(preset: &str) -> Result<Experiment, String> {
    let cfg = RunConfig::load(Some(preset), None).map_err(|e| e.to_string())?;
    run_experiment(&cfg, |_| {}).map_err(|e| e.to_string())
}

fn scenario_one(run: &Result<Experiment, String>) -> Outcome {
    let e = run.as_ref().map_err(Clone::clone)?;
    let c = &e.report.channels[0];
    let ccsv = c.ccsv_reduction.unwrap_or(f64::NEG_INFINITY);
    let dist = c.distance_reduction.unwrap_or(f64::NEG_INFINITY);
    check(
        ccsv >= 90.0 && dist >= 95.0,
        format!(
            "test CCSV reduction {ccsv:.2}% (>= 90), distance reduction {dist:.2}% (>= 95), {:.0} s",
            e.elapsed.as_secs_f64()
        ),
    )
}

fn scenario_two(run: &Result<Experiment, String>) -> Outcome {
    let e = run.as_ref().map_err(Clone::clone)?;
    let ccsv: Vec<f64> = e.report.channels.iter().map(|c| c.ccsv_reduction.unwrap_or(f64::NEG_INFINITY)).collect();
    let dist: Vec<f64> = e.report.channels.iter().map(|c| c.distance_reduction.unwrap_or(f64::NEG_INFINITY)).collect();
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{x:.2}")).collect::<Vec<_>>().join(" / ");
    check(
        ccsv.len() == 3 && ccsv.iter().all(|&r| r >= 60.0) && dist.iter().all(|&r| r >= 90.0),
        format!(
            "test CCSV reduction {}% (>= 60), distance reduction {}% (>= 90), {:.0} s",
            fmt(&ccsv),
            fmt(&dist),
            e.elapsed.as_secs_f64()
        ),
    )
}

fn gradient_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let grid = Grid::unit(17).unwrap();
    let data: Vec<SrsfSample> = (0..3).map(|_| srsf(&band_limited(grid, 2, &mut rng))).collect();
    let target = srsf(&band_limited(grid, 2, &mut rng));
    let mut net = WarpNet::new(NetConfig::new(17, 2, 3, 4, 5, 1e-3)).unwrap();
    let params: Vec<f64> = net.parameters().iter().map(|_| rng.random_range(-0.3..0.3)).collect();
    net.set_parameters(&params).unwrap();
    let analytic = net.loss_and_gradients(&data, &target).unwrap().1.flatten();
    let loss = |p: &[f64]| {
        let mut probe = net.clone();
        probe.set_parameters(p).unwrap();
        probe.loss_and_gradients(&data, &target).unwrap().0
    };
    let eps = 1e-5;
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let (mut hi, mut lo) = (params.clone(), params.clone());
        hi[i] += eps;
        lo[i] -= eps;
        let fd = (loss(&hi) - loss(&lo)) / (2.0 * eps);
        worst = worst.max((fd - analytic[i]).abs() / fd.abs().max(analytic[i].abs()).max(1e-6));
    }
    check(worst < 1e-4, format!("{} parameters, max relative error {worst:.2e} (< 1e-4)", params.len()))
}

fn isometry() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let grid = Grid::unit(1025).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let q1 = srsf(&band_limited(grid, 1, &mut rng));
        let q2 = srsf(&band_limited(grid, 1, &mut rng));
        let g = smooth_warp(grid, 0.3, &mut rng);
        let before = l2(&difference(&q1, &q2));
        let after = l2(&difference(&warp_srsf(&q1, &g).unwrap(), &warp_srsf(&q2, &g).unwrap()));
        worst = worst.max((after - before).abs() / before);
    }
    check(worst < 1e-3, format!("100 triples at P=1025, max relative change {worst:.2e} (< 1e-3)"))
}

fn karcher_suite() -> Outcome {
    let cfg = KarcherConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    let grid = Grid::unit(65).unwrap();
    let mut worst_residual: f64 = 0.0;
    for n in [2, 5, 20, 60] {
        let warps: Vec<Warp> = (0..n).map(|_| smooth_warp(grid, 0.3, &mut rng)).collect();
        let m = karcher_mean_warps(&warps, &cfg).map_err(|e| e.to_string())?;
        if !m.converged || m.residual >= cfg.tolerance {
            return Err(format!("{n} warps: residual {:.2e} after {} iterations", m.residual, m.iterations));
        }
        worst_residual = worst_residual.max(m.residual);
    }
    let w = smooth_warp(grid, 0.3, &mut rng);
    let same = karcher_mean_warps(&vec![w.clone(); 7], &cfg).map_err(|e| e.to_string())?;
    let same_err = max_abs_diff(same.psi.values(), warp_to_psi(&w).unwrap().values());
    let ident = karcher_mean_warps(&vec![Warp::identity(grid); 7], &cfg).map_err(|e| e.to_string())?;
    let ident_err = ident.mean.distance_from_identity();
    let mut pair_err: f64 = 0.0;
    for _ in 0..20 {
        let a = warp_to_psi(&smooth_warp(grid, 0.2, &mut rng)).unwrap();
        let b = warp_to_psi(&smooth_warp(grid, 0.2, &mut rng)).unwrap();
        let back = exp_map(&a, &inv_exp_map(&a, &b).unwrap(), 1.0).unwrap();
        pair_err = pair_err.max(max_abs_diff(back.values(), b.values()));
    }
    check(
        same_err < 1e-6 && ident_err < 1e-6 && pair_err < 1e-6,
        format!(
            "residual <= {worst_residual:.1e} (< {:.0e}), identical {same_err:.1e}, identity {ident_err:.1e}, exp/log {pair_err:.1e} (< 1e-6)",
            cfg.tolerance
        ),
    )
}

fn center_of_orbit(runs: &[(&str, &Result<Experiment, String>)]) -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (name, run) in runs {
        let d = run.as_ref().map_err(Clone::clone)?.center_distance;
        ok &= d < 0.02;
        parts.push(format!("{name} {d:.2e}"));
    }
    check(ok, format!("sup distance of the segment Karcher mean from identity: {} (< 0.02)", parts.join(", ")))
}

fn plant_and_recover() -> Outcome {
    let karcher = KarcherConfig::default();
    let mut worst: f64 = 0.0;
    for scenario in [Scenario::One, Scenario::Two] {
        let cfg = SimConfig { n_total: 40, points_per_period: 43, seed: 61, ..SimConfig::default() };
        let sim = generate(scenario, &cfg).map_err(|e| e.to_string())?;
        for (i, total) in sim.total_warps.iter().enumerate() {
            let (local, _) = decompose_total_warp(&invert_warp(total).unwrap(), 3, &karcher).map_err(|e| e.to_string())?;
            worst = worst.max(invert_warp(&local).unwrap().sup_distance(&sim.local_warps[i]));
        }
    }
    check(worst < 0.02, format!("80 subjects, worst local-warp sup distance {worst:.2e} (< 0.02)"))
}

fn round_trips() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    let g193 = Grid::unit(193).unwrap();
    let reference = FunctionSample::from_fn(g193, 1, |_, t| (2.0 * std::f64::consts::PI * t).sin()).unwrap();
    let mut srsf_err = max_abs_diff(srsf_inverse(&srsf(&reference)).channel(0), reference.channel(0));
    for _ in 0..20 {
        let f = unit_band_limited(g193, 2, &mut rng);
        let back = srsf_inverse(&srsf(&f));
        for (a, b) in back.channels().iter().zip(f.channels()) {
            srsf_err = srsf_err.max(max_abs_diff(a, b));
        }
    }
    let mut psi_err: f64 = 0.0;
    for _ in 0..20 {
        let w = smooth_warp(Grid::unit(257).unwrap(), 0.3, &mut rng);
        psi_err = psi_err.max(psi_to_warp(&warp_to_psi(&w).unwrap()).unwrap().sup_distance(&w));
    }
    let mut split_exact = true;
    for k in 1..5 {
        let f = band_limited(Grid::unit(33).unwrap(), 2, &mut rng);
        let mut channels = f.clone().into_channels();
        for c in &mut channels {
            let last = c.len() - 1;
            c[last] = c[0];
        }
        let period = FunctionSample::new(*f.grid(), channels).unwrap();
        split_exact &= split_function(&extend_function(&period, k).unwrap(), k).unwrap().iter().all(|p| p.channels() == period.channels());
        let w = smooth_warp(Grid::unit(33).unwrap(), 0.3, &mut rng);
        split_exact &= split_warp(&extend_warp(&w, k).unwrap(), k).unwrap().iter().all(|p| p.sup_distance(&w) < 1e-12);
    }

    let sim = generate(Scenario::Two, &SimConfig { n_total: 8, points_per_period: 9, seed: 3, ..SimConfig::default() })
        .map_err(|e| e.to_string())?;
    let (aligner, _) = fit(
        &sim.functions,
        &JamConfig::new(3, 2, NetConfig::new(25, 3, 2, 3, 5, 1e-3)),
        TemplateMode::Amplitude,
        |_| {},
    )
    .map_err(|e| e.to_string())?;
    let json = aligner.to_json().unwrap();
    let restored = TrainedAligner::from_json(&json).map_err(|e| e.to_string())?;
    let checkpoint_exact = restored == aligner && restored.to_json().unwrap() == json;
    let dir = tempfile::tempdir().unwrap();
    let ds = Dataset::from_simulation(&sim, 3);
    ds.write(&dir.path().join("a")).unwrap();
    let back = Dataset::read(&dir.path().join("a")).map_err(|e| e.to_string())?;
    back.write(&dir.path().join("b")).unwrap();
    let dataset_exact = back == ds && snapshot(&dir.path().join("a")) == snapshot(&dir.path().join("b"));

    check(
        srsf_err < 1e-3 && psi_err < 1e-3 && split_exact && checkpoint_exact && dataset_exact,
        format!(
            "SRSF {srsf_err:.1e} (< 1e-3 at P=193), psi {psi_err:.1e}, extend/split exact {split_exact}, checkpoint exact {checkpoint_exact}, dataset exact {dataset_exact}"
        ),
    )
}

fn simplex_exactness() -> Outcome {
    let out = simplex_forward(&[0.0; 3], &Grid::unit(3).unwrap()).map_err(|e| e.to_string())?;
    let z_err = max_abs_diff(&out.z, &[0.25, 1.0 / 3.0, 0.5]);
    let w_err = max_abs_diff(out.warp.values(), &[0.0, 0.5, 1.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    let mut valid = true;
    for p in [3, 17, 129] {
        let grid = Grid::unit(p).unwrap();
        let inputs: Vec<Vec<f64>> = vec![
            vec![1e6; p],
            vec![-1e6; p],
            (0..p).map(|i| if i % 2 == 0 { 700.0 } else { -700.0 }).collect(),
            (0..p).map(|_| rng.random_range(-1e4..1e4)).collect(),
        ];
        for y in inputs {
            let w = simplex_forward(&y, &grid).map_err(|e| e.to_string())?.warp;
            let v = w.values();
            valid &= v[0] == 0.0 && v[p - 1] == 1.0 && v.iter().all(|x| x.is_finite()) && v.windows(2).all(|s| s[1] >= s[0]);
        }
    }
    check(
        z_err < 1e-12 && w_err < 1e-12 && valid,
        format!("z error {z_err:.1e}, warp error {w_err:.1e} (< 1e-12), saturated inputs give valid warps {valid}"),
    )
}

fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                files.insert(path.strip_prefix(root).unwrap().display().to_string(), fs::read(&path).unwrap());
            }
        }
    }
    files
}

fn cli_determinism() -> Outcome {
    let commands: &[&[&str]] = &[
        &["simulate", "--preset", "smoke", "--scenario", "1", "--seed", "7", "--out", "data"],
        &["train", "--preset", "smoke", "--seed", "7", "--data", "data", "--out", "trained"],
        &["align", "--checkpoint", "trained", "--data", "data", "--out", "aligned"],
        &["template", "--out", "aligned"],
        &["evaluate", "--data", "aligned"],
    ];
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for args in commands {
        for d in &dirs {
            let out = Command::new(env!("CARGO_BIN_EXE_deepjam"))
                .args(*args)
                .current_dir(d.path())
                .output()
                .map_err(|e| e.to_string())?;
            if !out.status.success() {
                return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
            }
        }
    }
    let (a, b) = (snapshot(dirs[0].path()), snapshot(dirs[1].path()));
    let differing: Vec<&String> = a.iter().filter(|(k, v)| b.get(*k) != Some(v)).map(|(k, _)| k).collect();
    check(
        differing.is_empty() && a.len() == b.len(),
        format!("5 commands, {} files, differing: {differing:?}", a.len()),
    )
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut failed = 0;
    let mut report = |n: u32, name: &str, outcome: Outcome| {
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("[{tag}] {n:>2} {name}: {detail}");
    };
    report(3, "gradient oracle", gradient_oracle());
    report(4, "isometry", isometry());
    report(5, "Karcher fixed point", karcher_suite());
    report(7, "plant and recover", plant_and_recover());
    report(8, "round trips", round_trips());
    report(9, "simplex activation", simplex_exactness());
    report(10, "CLI determinism", cli_determinism());
    let s1 = desk("desk-scenario1");
    report(1, "scenario 1 desk run", scenario_one(&s1));
    let s2 = desk("desk-scenario2");
    report(2, "scenario 2 desk run", scenario_two(&s2));
    report(6, "center of orbit", center_of_orbit(&[("scenario 1", &s1), ("scenario 2", &s2)]));
    println!("acceptance: {failed} failed, {:.0} s", start.elapsed().as_secs_f64());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
