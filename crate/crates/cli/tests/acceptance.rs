//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Run alone with `cargo test -p infoinv-cli --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use infoinv::comgeo::{
    classical_model, enumerate_max_vertices, gbit_model, max_tensor_constraints, max_tensor_membership, min_tensor,
    polytope_equal, pr_box, DEFAULT_DIM_CAP,
};
use infoinv::invsep::{
    classical_invariance_check, css_from_decomposition, g_measure, gpt_separability, is_css, lambda_tau,
    ppt_min_eigenvalue, ppt_verdict, Decomposition, DecompositionTerm, FKind, MeasureConfig, PptVerdict,
    QuantumPolytope, CSS_TOL,
};
use infoinv::matcore::{DimSplit, NormKind};
use infoinv::qstate::{
    bell_state, density_from_pure, marginals, pi_map, purity, random_mixed, random_mixed_with, random_pure_with,
    random_unitary_with, split_rng, werner_state, BellKind, DensityMatrix,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn qubit() -> DimSplit {
    DimSplit::new(2, 1).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_product<R: Rng>(rng: &mut R) -> DensityMatrix {
    let a = random_mixed_with(qubit(), rng.random_range(1..=2), rng).unwrap();
    let b = random_mixed_with(qubit(), rng.random_range(1..=2), rng).unwrap();
    DensityMatrix::tensor(&a, &b).with_split(DimSplit::qubits()).unwrap()
}

fn pi_idempotence() -> Outcome {
    let mut worst: f64 = 0.0;
    for i in 0..1000u64 {
        let rho = random_mixed(DimSplit::qubits(), 1 + (i % 4) as usize, 10_000 + i).unwrap();
        let once = pi_map(&rho);
        worst = worst.max((pi_map(&once).matrix() - once.matrix()).frobenius());
    }
    check(
        worst <= 1e-12,
        format!("max ‖Π²(ρ) − Π(ρ)‖_F = {worst:e} over 1000 states"),
    )
}

fn product_fixed_point() -> Outcome {
    let cfg = MeasureConfig::default();
    let mut rng = split_rng(2, 0);
    let worst_product = (0..500)
        .map(|_| g_measure(&random_product(&mut rng), cfg))
        .fold(0.0, f64::max);
    let mut rng = split_rng(2, 1);
    let (mut entangled, mut drawn) = (Vec::new(), 0);
    while entangled.len() < 500 {
        drawn += 1;
        let rho = random_mixed_with(DimSplit::qubits(), rng.random_range(1..=4), &mut rng).unwrap();
        if ppt_verdict(&rho) == PptVerdict::Entangled {
            entangled.push(g_measure(&rho, cfg));
        }
    }
    let least_entangled = entangled.iter().cloned().fold(f64::INFINITY, f64::min);
    check(
        worst_product <= 1e-12 && least_entangled > 1e-6,
        format!(
            "products: max G = {worst_product:e}; PPT-entangled ({drawn} drawn for 500): min G = {least_entangled:e}"
        ),
    )
}

fn bell_measure() -> Outcome {
    let v = g_measure(
        &bell_state(BellKind::PhiPlus),
        MeasureConfig::new(FKind::Identity, NormKind::Frobenius),
    );
    let err = (v - 3f64.sqrt() / 2.0).abs();
    check(err <= 1e-9, format!("G(ρ_Bell) = {v}, |G − √3/2| = {err:e}"))
}

fn werner_threshold() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for i in 0..=100 {
        let p = i as f64 / 100.0;
        let m = ppt_min_eigenvalue(&werner_state(p).unwrap());
        worst = worst.max((m - (1.0 - 3.0 * p) / 4.0).abs());
        values.push((p, m));
    }
    let changes: Vec<(f64, f64)> = values
        .windows(2)
        .filter(|w| (w[0].1 >= 0.0) != (w[1].1 >= 0.0))
        .map(|w| (w[0].0, w[1].0))
        .collect();
    let bracketed = changes.len() == 1 && changes[0].0 < 1.0 / 3.0 && 1.0 / 3.0 < changes[0].1;
    check(
        worst <= 1e-9 && bracketed,
        format!("max |λ_min − (1−3p)/4| = {worst:e}; sign changes at {changes:?}"),
    )
}

fn pure_state_criterion() -> Outcome {
    let mut rng = split_rng(5, 0);
    let (mut disagreements, mut products) = (0, 0);
    for i in 0..500 {
        // Every fifth draw is a random product vector so both sides of the equivalence occur.
        let rho = if i % 5 == 0 {
            let a = density_from_pure(&random_pure_with(qubit(), &mut rng));
            let b = density_from_pure(&random_pure_with(qubit(), &mut rng));
            DensityMatrix::tensor(&a, &b).with_split(DimSplit::qubits()).unwrap()
        } else {
            density_from_pure(&random_pure_with(DimSplit::qubits(), &mut rng))
        };
        let css = is_css(&QuantumPolytope::singleton(rho.clone()), CSS_TOL).map_err(|e| e.to_string())?;
        let pure_marginal = purity(&marginals(&rho).0) >= 1.0 - 1e-10;
        products += pure_marginal as usize;
        disagreements += (css != pure_marginal) as usize;
    }
    check(
        disagreements == 0,
        format!("{disagreements} disagreements over 500 states ({products} with pure marginals)"),
    )
}

fn lambda_tau_idempotence() -> Outcome {
    let mut failures = 0;
    let mut worst_vertices = 0;
    for case in 0..200u64 {
        let mut rng = split_rng(6, case);
        let n = rng.random_range(2..=4);
        let verts: Vec<DensityMatrix> = (0..n)
            .map(|_| random_mixed_with(DimSplit::qubits(), rng.random_range(1..=4), &mut rng).unwrap())
            .collect();
        let once = lambda_tau(&QuantumPolytope::new(verts).unwrap());
        let twice = lambda_tau(&once);
        worst_vertices = worst_vertices.max(once.vertices().len());
        let equal = polytope_equal(&twice.to_vpolytope(), &once.to_vpolytope(), 1e-8).map_err(|e| e.to_string())?;
        failures += (!equal) as usize;
    }
    check(
        failures == 0,
        format!("{failures} of 200 polytopes not idempotent (largest Λτ image: {worst_vertices} vertices)"),
    )
}

fn witness_soundness() -> Outcome {
    let (mut not_css, mut worst): (usize, f64) = (0, 0.0);
    for case in 0..100u64 {
        let mut rng = split_rng(7, case);
        let n = rng.random_range(1..=4);
        let mut weights: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        let terms = weights
            .iter()
            .map(|&p| DecompositionTerm {
                p,
                a: random_mixed_with(qubit(), rng.random_range(1..=2), &mut rng).unwrap(),
                b: random_mixed_with(qubit(), rng.random_range(1..=2), &mut rng).unwrap(),
            })
            .collect();
        let d = Decomposition::new(terms).map_err(|e| e.to_string())?;
        let w = css_from_decomposition(&d);
        not_css += (!is_css(&w, CSS_TOL).map_err(|e| e.to_string())?) as usize;
        worst = worst.max(w.fit(&d.state()).map_err(|e| e.to_string())?.residual);
    }
    check(
        not_css == 0 && worst <= 1e-8,
        format!("{not_css} of 100 witnesses not CSS; max hull residual {worst:e}"),
    )
}

fn classical_collapse() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (na, nb) in [(2, 2), (2, 3)] {
        let (a, b) = (classical_model(na).unwrap(), classical_model(nb).unwrap());
        let max =
            enumerate_max_vertices(&max_tensor_constraints(&a, &b), DEFAULT_DIM_CAP).map_err(|e| e.to_string())?;
        let equal = polytope_equal(&min_tensor(&a, &b), &max, 1e-9).map_err(|e| e.to_string())?;
        let invariant = classical_invariance_check(na, nb).map_err(|e| e.to_string())?;
        ok &= equal && invariant;
        details.push(format!("{na}x{nb}: Ω_min = Ω_max {equal}, Λ̃∘φ(Ω) = Ω {invariant}"));
    }
    check(ok, details.join("; "))
}

fn box_world() -> Outcome {
    let g = gbit_model();
    let pr = pr_box();
    let in_max = max_tensor_membership(&pr, &max_tensor_constraints(&g, &g), 1e-10).map_err(|e| e.to_string())?;
    let fit = gpt_separability(&pr, &g, &g).map_err(|e| e.to_string())?;
    let separable = fit.residual <= 1e-9;
    let Some(cert) = fit.separation else {
        return Err(format!("PR box residual {:e} but no certificate", fit.residual));
    };
    let verified = cert.verify(pr.coords(), &min_tensor(&g, &g));
    check(
        in_max && !separable && verified.is_some_and(|m| m > 0.0),
        format!(
            "PR box in Ω_max {in_max}, separable {separable}; certificate normal {:?}, offset {:e}, margin {:e}",
            cert.normal, cert.offset, cert.margin
        ),
    )
}

fn local_unitary_invariance() -> Outcome {
    let mut worst: f64 = 0.0;
    for case in 0..200u64 {
        let mut rng = split_rng(10, case);
        let rho = random_mixed_with(DimSplit::qubits(), rng.random_range(1..=4), &mut rng).unwrap();
        let u = random_unitary_with(2, &mut rng).unwrap();
        let v = random_unitary_with(2, &mut rng).unwrap();
        let rotated = rho.local_unitary(&u, &v).map_err(|e| e.to_string())?;
        for norm in [NormKind::Frobenius, NormKind::Trace] {
            let cfg = MeasureConfig::new(FKind::Identity, norm);
            worst = worst.max((g_measure(&rho, cfg) - g_measure(&rotated, cfg)).abs());
        }
    }
    check(
        worst <= 1e-9,
        format!("max |G(ρ) − G((U⊗V)ρ(U⊗V)†)| = {worst:e} over 200 triples"),
    )
}

fn marginal_mixedness() -> Outcome {
    let mut rng = split_rng(11, 0);
    let (mut entangled, mut violations, mut highest): (usize, usize, f64) = (0, 0, 0.0);
    for i in 0..1000 {
        let split = if i % 2 == 0 {
            DimSplit::qubits()
        } else {
            DimSplit::new(2, 3).unwrap()
        };
        let rho = density_from_pure(&random_pure_with(split, &mut rng));
        if ppt_verdict(&rho) == PptVerdict::Entangled {
            entangled += 1;
            let (a, b) = marginals(&rho);
            let p = purity(&a).max(purity(&b));
            highest = highest.max(p);
            violations += (p > 1.0 - 1e-8) as usize;
        }
    }
    check(
        violations == 0 && entangled > 0,
        format!(
            "{entangled} entangled pure states, {violations} with a marginal purity above 1 − 1e-8 (max {highest})"
        ),
    )
}

fn cli_determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_infoinv"))
            .args(["sweep", "werner"])
            .output()
            .map_err(|e| e.to_string())
    };
    let (a, b) = (run()?, run()?);
    if !a.status.success() {
        return Err(format!("sweep exited with {:?}", a.status.code()));
    }
    let golden_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/sweep_werner.csv");
    let golden = std::fs::read(&golden_path).map_err(|e| format!("{}: {e}", golden_path.display()))?;
    check(
        a.stdout == b.stdout && a.stdout == golden,
        format!(
            "two runs identical {}, matches golden file {} ({} bytes)",
            a.stdout == b.stdout,
            a.stdout == golden,
            a.stdout.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Π idempotence", pi_idempotence),
        ("product fixed point", product_fixed_point),
        ("Bell-state measure", bell_measure),
        ("Werner PPT threshold", werner_threshold),
        ("pure-state criterion", pure_state_criterion),
        ("Λ∘τ idempotence", lambda_tau_idempotence),
        ("witness soundness", witness_soundness),
        ("classical collapse", classical_collapse),
        ("box-world entanglement", box_world),
        ("local-unitary invariance", local_unitary_invariance),
        ("marginal mixedness", marginal_mixedness),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("[{tag}] {:>2}. {name}: {detail} ({secs:.2} s)", i + 1);
        failed += outcome.is_err() as usize;
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
