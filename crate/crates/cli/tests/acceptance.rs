//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use nonloc_core::linalg::rank;
use nonloc_core::matrix::{ComplexMatrix, C64};
use nonloc_core::random::{ginibre, random_density_matrix, stream_rng};
use nonloc_core::*;
use serde_json::Value;

type Outcome = std::result::Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn p(v: f64) -> NoiseParameter {
    NoiseParameter::new(v).unwrap()
}

fn nonloc(args: &[&str]) -> (Vec<u8>, Duration) {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_nonloc"))
        .args(args)
        .output()
        .expect("spawn nonloc");
    let elapsed = start.elapsed();
    assert!(
        out.status.success(),
        "nonloc {args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    (out.stdout, elapsed)
}

fn certify_args(family: &str, pv: &str) -> Vec<String> {
    [
        "certify",
        "--family",
        family,
        "--n",
        "4",
        "--l",
        "2",
        "--d",
        "2",
        "--p",
        pv,
        "--partition",
        "12|34",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn headline() -> Outcome {
    let mut notes = Vec::new();
    for family in ["iso-ghz", "werner-lift"] {
        let args = certify_args(family, "0.40");
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let (stdout, elapsed) = nonloc(&argv);
        let report: Value = serde_json::from_slice(&stdout).map_err(|e| e.to_string())?;
        let gme = &report["gme_verdict"];
        ensure(gme["status"] == "GME", format!("{family}: status {}", gme["status"]))?;
        let min_pt = gme["evidence"][0]["min_pt_eigenvalue"].as_f64().unwrap();
        ensure(min_pt < -1e-6, format!("{family}: min PT eigenvalue {min_pt}"))?;
        for g in gme["symmetric_support"].as_array().unwrap() {
            let dev = g["deviation"].as_f64().unwrap();
            ensure(dev < 1e-12, format!("{family}: support deviation {dev}"))?;
        }
        ensure(
            report["bilocal"]["status"] == "BILOCAL-CERTIFIED",
            format!("{family}: {}", report["bilocal"]["status"]),
        )?;
        let dev = report["identity_report"]["max_abs_deviation"].as_f64().unwrap();
        ensure(dev < 1e-10, format!("{family}: identity deviation {dev}"))?;
        ensure(elapsed < Duration::from_secs(10), format!("{family}: took {elapsed:?}"))?;
        notes.push(format!("{family} min_pt={min_pt:.4} {:.0?}", elapsed));
    }
    Ok(notes.join("; "))
}

fn lifted(family: Family, n: usize, l: usize, d: usize, v: f64) -> DensityMatrix {
    lift_bipartite(
        &family.seed(d, p(v)).unwrap(),
        &embed_channel(l, d).unwrap(),
        &embed_channel(n - l, d).unwrap(),
    )
    .unwrap()
}

fn construction_oracle() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, l, d) in [(3, 1, 2), (4, 2, 2), (4, 2, 3), (5, 2, 2)] {
        for v in [0.0, 0.3, 1.0] {
            let g = sigma_ghz(n, l, d, p(v))
                .unwrap()
                .matrix()
                .max_abs_diff(lifted(Family::IsoGhz, n, l, d, v).matrix());
            let w = sigma_werner(n, l, d, p(v))
                .unwrap()
                .matrix()
                .max_abs_diff(lifted(Family::WernerLift, n, l, d, v).matrix());
            ensure(
                g < 1e-12 && w < 1e-12,
                format!("({n},{l},{d}) p={v}: iso {g:e}, werner {w:e}"),
            )?;
            worst = worst.max(g).max(w);
        }
    }
    Ok(format!("max deviation {worst:.1e}"))
}

fn lifting_identity() -> Outcome {
    let cfg = IdentityConfig::default();
    let iso = isotropic(2, p(0.4)).unwrap();
    let chans = [embed_channel(2, 2).unwrap(), embed_channel(2, 2).unwrap()];
    let a = verify_lifting_identity(&iso, &chans, None, &cfg).map_err(|e| e.to_string())?;
    ensure(
        a.trials == 200 && a.max_abs_deviation < 1e-10,
        format!("K=2: {:e}", a.max_abs_deviation),
    )?;

    let seed = random_density_matrix(&SubsystemShape::uniform(3, 2).unwrap(), 1).unwrap();
    let chans = [
        embed_channel(2, 2).unwrap(),
        embed_channel(1, 2).unwrap(),
        embed_channel(2, 2).unwrap(),
    ];
    let cfg = IdentityConfig { trials: 100, ..cfg };
    let b = verify_lifting_identity(&seed, &chans, None, &cfg).map_err(|e| e.to_string())?;
    ensure(
        b.trials == 100 && b.max_abs_deviation < 1e-10,
        format!("K=3: {:e}", b.max_abs_deviation),
    )?;
    Ok(format!(
        "K=2 {:.1e}, K=3 {:.1e}",
        a.max_abs_deviation, b.max_abs_deviation
    ))
}

fn threshold_boundary() -> Outcome {
    let cut: KPartition = "1|2".parse().unwrap();
    for d in 2..=3 {
        let t = entanglement_threshold(d).unwrap();
        let min_at = |v: f64| is_npt(&isotropic(d, p(v)).unwrap(), &cut).unwrap().min_pt_eigenvalue;
        let at = min_at(t);
        let above = min_at(t + 0.01);
        ensure(at.abs() < 1e-9, format!("d={d}: boundary eigenvalue {at:e}"))?;
        ensure(above < -1e-4, format!("d={d}: eigenvalue above boundary {above:e}"))?;
    }
    let l2 = local_threshold(2).unwrap();
    let l3 = local_threshold(3).unwrap();
    ensure(
        format!("{l2:.6}") == format!("{:.6}", 5.0 / 12.0),
        format!("d=2 local {l2}"),
    )?;
    ensure(
        format!("{l3:.6}") == format!("{:.6}", 8.0 / 27.0),
        format!("d=3 local {l3}"),
    )?;
    let table = nonloc_cli::cmd_thresholds(&nonloc_cli::ThresholdArgs { d_max: 3 }).map_err(|e| e.to_string())?;
    ensure(table.contains("2,0.333333,0.416667,0.083333"), table.clone())?;
    ensure(table.contains("3,0.25,0.296296,0.046296"), table)?;
    Ok(format!("p_local(2)={l2:.6} p_local(3)={l3:.6}"))
}

fn dual_map() -> Outcome {
    let mut rng = stream_rng(5, 0);
    let mut worst: f64 = 0.0;
    for m in 1..=4 {
        for d in 2..=3 {
            let ch = embed_channel(m, d).unwrap();
            let out = ch.out_dim();
            let unit = ch.apply_dual(&ComplexMatrix::identity(out)).unwrap();
            let dev = unit.max_abs_diff(&ComplexMatrix::identity(d));
            ensure(dev < 1e-12, format!("M={m} d={d}: unitality {dev:e}"))?;
            for k in 0..50u64 {
                let rho = random_density_matrix(&SubsystemShape::uniform(1, d).unwrap(), 100 * m as u64 + k).unwrap();
                let x = ginibre(&mut rng, out, out);
                let lhs = ch.apply(rho.matrix()).unwrap().trace_product(&x);
                let rhs = rho.matrix().trace_product(&ch.apply_dual(&x).unwrap());
                let gap = (lhs - rhs).norm();
                ensure(gap < 1e-12, format!("M={m} d={d}: trace duality {gap:e}"))?;
                worst = worst.max(gap);
            }
        }
    }
    for seed in 0..100u64 {
        let m = 1 + (seed % 3) as usize;
        let d = 2 + (seed % 2) as usize;
        let ch = embed_channel(m, d).unwrap();
        let povms: Vec<Povm> = (0..m)
            .map(|k| random_povm(d, 2 + k % 2, seed * 7 + k as u64).unwrap())
            .collect();
        let (min_eig, completeness) = dual_povm_product(&ch, &povms).unwrap().validity().unwrap();
        ensure(
            min_eig >= -1e-10 && completeness < 1e-10,
            format!("draw {seed}: {min_eig:e} {completeness:e}"),
        )?;
    }
    Ok(format!("trace duality {worst:.1e}"))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

fn symmetric_subspace() -> Outcome {
    for m in 1..=4 {
        for d in 2..=3 {
            let proj = sym_projector(m, d).unwrap();
            let idem = proj.matmul(&proj).max_abs_diff(&proj);
            ensure(idem < 1e-12, format!("M={m} d={d}: idempotence {idem:e}"))?;
            let r = rank(&proj, 0.5).unwrap();
            ensure(r == binomial(m + d - 1, m), format!("M={m} d={d}: rank {r}"))?;
        }
    }
    let shape = SubsystemShape::uniform(4, 2).unwrap();
    let mut ghz_ket = vec![C64::new(0.0, 0.0); 16];
    ghz_ket[0] = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ghz_ket[15] = ghz_ket[0];
    let projected = sym_projector(4, 2)
        .unwrap()
        .mul_vec(ginibre(&mut stream_rng(3, 0), 16, 1).as_slice());
    for psi in [&ghz_ket, &projected] {
        for (m, n) in [(0, 1), (1, 3), (2, 3)] {
            let dev = swap_invariance_check(psi, &shape, m, n).unwrap();
            ensure(dev < 1e-12, format!("swap ({m},{n}): {dev:e}"))?;
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let singlet = [
        C64::new(0.0, 0.0),
        C64::new(s, 0.0),
        C64::new(-s, 0.0),
        C64::new(0.0, 0.0),
    ];
    let dev = swap_invariance_check(&singlet, &SubsystemShape::uniform(2, 2).unwrap(), 0, 1).unwrap();
    ensure((dev - 2.0).abs() < 1e-12, format!("singlet: {dev}"))?;
    Ok(format!("singlet deviation {dev:.12}"))
}

fn no_signalling() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let shape = SubsystemShape::uniform(3, 2).unwrap();
        let rho = random_density_matrix(&shape, seed).unwrap();
        let settings: Vec<Vec<Povm>> = (0..3u64)
            .map(|k| {
                (0..2u64)
                    .map(|s| random_povm(2, 2 + s as usize, seed * 31 + k * 2 + s).unwrap())
                    .collect()
            })
            .collect();
        let st = SettingsTable::from_born(&rho, &settings).unwrap();
        for part in ["1|2|3", "12|3", "1|23"] {
            let dev = check_no_signalling(&st, &part.parse().unwrap()).unwrap();
            ensure(dev < 1e-12, format!("draw {seed} {part}: {dev:e}"))?;
            worst = worst.max(dev);
        }
    }
    // Alice's p(0) is 3/4 or 1/4 depending on Bob's setting: gap 1/2.
    let table = |alice0: f64| {
        ProbTable::new(
            vec![2, 2],
            vec![alice0 / 2.0, alice0 / 2.0, (1.0 - alice0) / 2.0, (1.0 - alice0) / 2.0],
        )
        .unwrap()
    };
    let tables = vec![table(0.75), table(0.25), table(0.75), table(0.25)];
    let st = SettingsTable::new(vec![2, 2], tables).unwrap();
    let gap = check_no_signalling(&st, &"1|2".parse().unwrap()).unwrap();
    ensure((gap - 0.5).abs() < 1e-12, format!("signalling gap {gap}"))?;
    Ok(format!("Born worst {worst:.1e}, signalling gap {gap}"))
}

fn determinism() -> Outcome {
    let args = certify_args("iso-ghz", "0.40");
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let (a, _) = nonloc(&argv);
    let (b, _) = nonloc(&argv);
    ensure(a == b, "reports differ")?;
    let mut sweep = vec!["sweep", "--family", "werner-lift", "--n", "3", "--l", "1", "--d", "2"];
    sweep.extend(["--p-max", "0.5", "--step", "0.1", "--trials", "20", "--seed", "9"]);
    let (c, _) = nonloc(&sweep);
    let (e, _) = nonloc(&sweep);
    ensure(c == e, "sweep CSV differs")?;
    Ok(format!("{} report bytes identical", a.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 headline GME + bilocal at p=0.40", headline),
        ("2 closed forms equal channel images", construction_oracle),
        ("3 lifting identity K=2 and K=3", lifting_identity),
        ("4 threshold boundaries", threshold_boundary),
        ("5 dual-map properties", dual_map),
        ("6 symmetric subspace", symmetric_subspace),
        ("7 no-signalling", no_signalling),
        ("8 deterministic reports", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        match std::panic::catch_unwind(check) {
            Ok(Ok(note)) => println!("PASS  criterion {name}: {note}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL  criterion {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL  criterion {name}: panicked");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
