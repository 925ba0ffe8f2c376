//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use tfem_core::assembly::{assemble_constraints, assemble_fem, assemble_tfem, JacobianMode, TfemOptions};
use tfem_core::basis::{gauss_rule, HexGeometry, Point3};
use tfem_core::experiment::{compute_error, run_single, ExperimentConfig, MeshSource, Method};
use tfem_core::mesh::{gen_eight_element, gen_two_element};
use tfem_core::tangle::{concave_elements, fold_sample_points, invert_trilinear, inverters, oriented_count_in};
use tfem_core::{BoundarySpec, ExactSolution, Family, Mesh};

const TWO_SWEEP: [f64; 8] = [0.10, 0.15, 0.20, 0.25, 0.30, 0.35, 0.40, 0.45];
const EIGHT_SWEEP: [f64; 4] = [0.10, 0.20, 0.30, 0.40];

struct Outcome {
    pass: bool,
    detail: String,
}

fn sweep_meshes() -> Vec<(Family, f64, Mesh)> {
    let two = TWO_SWEEP.iter().map(|&d| (Family::TwoElement, d, gen_two_element(d).unwrap()));
    let eight = EIGHT_SWEEP.iter().map(|&d| (Family::EightElement, d, gen_eight_element(d).unwrap()));
    two.chain(eight).collect()
}

fn untangled_reduction() -> Outcome {
    let m = gen_eight_element(1.0).unwrap();
    let bc = BoundarySpec::left_dirichlet(&m);
    let ex = ExactSolution::benchmark();
    let fem = assemble_fem(&m, &bc, &ex, JacobianMode::Signed, 2).unwrap();
    let tfem = assemble_tfem(&m, &bc, &ex, &TfemOptions::default()).unwrap();
    let dk = (fem.stiffness.to_dense() - tfem.stiffness.to_dense()).amax();
    let df = fem
        .load
        .values
        .iter()
        .zip(&tfem.load.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let mut config = ExperimentConfig::new(MeshSource::Family(Family::EightElement), vec![1.0], vec![]);
    config.record_timing = false;
    let e_fem = run_single(&m, Method::FemSigned, &config).unwrap().max_rel_error;
    let e_tfem = run_single(&m, Method::Tfem, &config).unwrap().max_rel_error;
    Outcome {
        pass: dk <= 1e-14 && df <= 1e-14 && e_fem <= 1e-10 && e_tfem <= 1e-10 && tfem.concave.is_empty(),
        detail: format!("max |dK| {dk:.1e}, max |df| {df:.1e}, errors fem {e_fem:.1e} tfem {e_tfem:.1e}"),
    }
}

/// `tfem ≤ 1e-5` and `fem_signed / tfem ≥ 1e3` for every `d`.
fn sweep(family: Family, ds: &[f64]) -> Outcome {
    let mut config = ExperimentConfig::new(MeshSource::Family(family), ds.to_vec(), vec![]);
    config.depth = 7;
    let mut worst_tfem = 0.0f64;
    let mut worst_ratio = f64::INFINITY;
    let mut rows = Vec::new();
    for &d in ds {
        let m = family.generate(d).unwrap();
        let fem = run_single(&m, Method::FemSigned, &config).unwrap().max_rel_error;
        let tfem = run_single(&m, Method::Tfem, &config).unwrap().max_rel_error;
        worst_tfem = worst_tfem.max(tfem);
        worst_ratio = worst_ratio.min(fem / tfem);
        rows.push(format!("{d}: {tfem:.1e}/{fem:.1e}"));
    }
    let accurate = worst_tfem <= 1e-5;
    let gap = worst_ratio >= 1e3;
    Outcome {
        pass: accurate && gap,
        detail: format!(
            "tfem <= 1e-5 {} (worst {worst_tfem:.2e}); fem_signed/tfem >= 1e3 {} (smallest {worst_ratio:.1e}); tfem/fem_signed per d [{}]",
            pf(accurate),
            pf(gap),
            rows.join(", ")
        ),
    }
}

fn depth_convergence() -> Outcome {
    let m = gen_two_element(0.3).unwrap();
    let mut config = ExperimentConfig::new(MeshSource::Family(Family::TwoElement), vec![0.3], vec![]);
    let errors: Vec<f64> = (4..=7)
        .map(|depth| {
            config.depth = depth;
            run_single(&m, Method::Tfem, &config).unwrap().max_rel_error
        })
        .collect();
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[1] / w[0]).collect();
    Outcome {
        pass: ratios.iter().all(|&r| r <= 0.75),
        detail: format!(
            "errors depth 4..7 [{}], ratios [{}]",
            errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>().join(", "),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    }
}

fn oriented_cover() -> Outcome {
    let mut worst = (1.0f64, String::new());
    for (family, d, m) in sweep_meshes() {
        let inv = inverters(&m.geometries());
        let seed = (d * 1000.0) as u64 + family as u64 * 7919;
        let points: Vec<Point3> = {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..10_000)
                .map(|_| Vector3::new(rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()))
                .collect()
        };
        let counts: Vec<Option<i32>> = points
            .par_iter()
            .map(|p| oriented_count_in(&inv, p).ok().and_then(|c| c.checked_net().ok()))
            .collect();
        let valid: Vec<i32> = counts.into_iter().flatten().collect();
        let good = valid.iter().filter(|&&n| n == 1).count();
        let frac = good as f64 / valid.len() as f64;
        if frac <= worst.0 {
            worst = (frac, format!("{family} d={d}: {good}/{} valid points", valid.len()));
        }
    }
    Outcome {
        pass: worst.0 >= 0.999,
        detail: format!("worst net = 1 fraction {:.5} ({})", worst.0, worst.1),
    }
}

fn signed_volume_identity() -> Outcome {
    let rule = gauss_rule(2).unwrap();
    let mut worst = 0.0f64;
    let meshes = sweep_meshes().into_iter().map(|(_, _, m)| m).chain([gen_eight_element(1.0).unwrap()]);
    for m in meshes {
        let v: f64 = m
            .geometries()
            .iter()
            .map(|g| rule.points.iter().zip(&rule.weights).map(|(xi, w)| w * g.det_j(xi)).sum::<f64>())
            .sum();
        worst = worst.max((v - 1.0).abs());
    }
    Outcome {
        pass: worst <= 1e-12,
        detail: format!("max |sum detJ - 1| {worst:.1e}"),
    }
}

/// Dense-lattice Newton oracle: every cell of a 64³ parametric lattice whose
/// inflated corner-image box contains `p` seeds a damped Newton solve.
struct Oracle {
    g: HexGeometry,
    boxes: Vec<(Point3, Point3, Vector3<f64>)>,
}

const LATTICE: usize = 64;

impl Oracle {
    fn new(g: &HexGeometry) -> Self {
        let h = 2.0 / LATTICE as f64;
        let mut boxes = Vec::with_capacity(LATTICE.pow(3));
        for k in 0..LATTICE {
            for j in 0..LATTICE {
                for i in 0..LATTICE {
                    let lo = Vector3::new(i, j, k).map(|v| -1.0 + v as f64 * h);
                    let mut blo = Vector3::repeat(f64::INFINITY);
                    let mut bhi = Vector3::repeat(f64::NEG_INFINITY);
                    for c in 0..8 {
                        let xi = lo + Vector3::new((c & 1) as f64, (c >> 1 & 1) as f64, (c >> 2 & 1) as f64) * h;
                        let x = g.map(&xi);
                        blo = blo.inf(&x);
                        bhi = bhi.sup(&x);
                    }
                    // the trilinear image bulges past its corners by O(h²)
                    let pad = (bhi - blo).amax() * 0.5 + 1e-9;
                    boxes.push((blo.add_scalar(-pad), bhi.add_scalar(pad), lo.add_scalar(0.5 * h)));
                }
            }
        }
        Oracle { g: g.clone(), boxes }
    }

    fn newton(&self, p: &Point3, mut xi: Vector3<f64>) -> Option<Vector3<f64>> {
        let tol = 1e-12 * self.g.scale();
        let mut r = (self.g.map(&xi) - p).norm();
        for _ in 0..50 {
            if r <= tol {
                break;
            }
            let j: Matrix3<f64> = self.g.jacobian_matrix(&xi);
            let step = j.lu().solve(&(self.g.map(&xi) - p))?;
            let mut damp = 1.0;
            loop {
                let cand = xi - step * damp;
                let rc = (self.g.map(&cand) - p).norm();
                if rc < r || damp < 1e-6 {
                    xi = cand;
                    r = rc;
                    break;
                }
                damp *= 0.5;
            }
        }
        (r <= tol && xi.amax() <= 1.0 + 1e-9).then_some(xi)
    }

    fn roots(&self, p: &Point3) -> Vec<(Vector3<f64>, i8)> {
        let mut out: Vec<Vector3<f64>> = Vec::new();
        for (lo, hi, seed) in &self.boxes {
            if (0..3).any(|k| p[k] < lo[k] || p[k] > hi[k]) {
                continue;
            }
            if let Some(xi) = self.newton(p, *seed) {
                if out.iter().all(|r| (r - xi).amax() > 1e-6) {
                    out.push(xi);
                }
            }
        }
        let mut roots: Vec<(Vector3<f64>, i8)> =
            out.into_iter().map(|xi| (xi, if self.g.det_j(&xi) > 0.0 { 1 } else { -1 })).collect();
        roots.sort_by(|a, b| a.0.x.total_cmp(&b.0.x).then(a.0.y.total_cmp(&b.0.y)));
        roots
    }
}

fn root_oracle() -> Outcome {
    let mut checked = 0usize;
    let mut mismatches = Vec::new();
    for (family, d, m) in sweep_meshes() {
        let geoms = m.geometries();
        let oracles: Vec<Oracle> = geoms.par_iter().map(Oracle::new).collect();
        let concave = concave_elements(&m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + (d * 100.0) as u64 + family as u64);
        // half uniform in the domain, half images of the concave element
        let points: Vec<Point3> = (0..100)
            .map(|i| {
                if i % 2 == 0 || concave.is_empty() {
                    Vector3::new(rng.random(), rng.random(), rng.random())
                } else {
                    let xi = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                    geoms[concave[0]].map(&xi)
                }
            })
            .collect();
        let bad: Vec<String> = points
            .par_iter()
            .flat_map_iter(|p| {
                geoms.iter().zip(&oracles).enumerate().filter_map(move |(e, (g, o))| {
                    let lib = invert_trilinear(g, p, 1e-12 * g.scale()).ok()?;
                    let mut got: Vec<(Vector3<f64>, i8)> = lib.roots.iter().map(|r| (r.xi, r.sign)).collect();
                    got.sort_by(|a, b| a.0.x.total_cmp(&b.0.x).then(a.0.y.total_cmp(&b.0.y)));
                    let want = o.roots(p);
                    let same = got.len() == want.len()
                        && got.iter().zip(&want).all(|(a, b)| a.1 == b.1 && (a.0 - b.0).amax() <= 1e-6);
                    (!same).then(|| format!("{family} d={d} e={e} p={:?}: {} vs {} roots", p.as_slice(), got.len(), want.len()))
                })
            })
            .collect();
        checked += points.len() * geoms.len();
        mismatches.extend(bad);
    }
    Outcome {
        pass: mismatches.is_empty(),
        detail: format!(
            "{} mismatches over {checked} point-element pairs{}",
            mismatches.len(),
            mismatches.first().map(|s| format!("; first {s}")).unwrap_or_default()
        ),
    }
}

fn constraint_annihilation() -> Outcome {
    let mut worst = 0.0f64;
    let mut rows = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for (_, _, m) in sweep_meshes() {
        let samples: Vec<_> = concave_elements(&m)
            .unwrap()
            .into_iter()
            .map(|e| fold_sample_points(&m, e, 32, 7).unwrap())
            .collect();
        let c = assemble_constraints(&m, &samples, 1e-10).unwrap();
        rows += c.m();
        for _ in 0..10 {
            let ex = ExactSolution::new(
                Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                rng.random_range(-1.0..1.0),
            );
            let r = c.apply(&ex.nodal_values(&m));
            worst = worst.max(r.iter().fold(0.0, |a, v| a.max(v.abs())));
        }
    }
    Outcome {
        pass: worst <= 1e-9 && rows > 0,
        detail: format!("max |C u_linear| {worst:.1e} over {rows} retained rows"),
    }
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn main() -> ExitCode {
    // keep the error metric honest: exact nodal values give zero error
    let m = gen_two_element(0.3).unwrap();
    let ex = ExactSolution::benchmark();
    assert_eq!(compute_error(&ex.nodal_values(&m), &m, &ex), (0.0, 0.0));

    type Check = (&'static str, Duration, fn() -> Outcome);
    let checks: [Check; 8] = [
        ("1 untangled reduction", Duration::from_secs(1), untangled_reduction),
        ("2 two-element sweep", Duration::from_secs(60), || sweep(Family::TwoElement, &TWO_SWEEP)),
        ("3 eight-element sweep", Duration::from_secs(60), || sweep(Family::EightElement, &EIGHT_SWEEP)),
        ("4 depth convergence", Duration::from_secs(120), depth_convergence),
        ("5 oriented cover", Duration::from_secs(60), oriented_cover),
        ("6 signed-volume identity", Duration::MAX, signed_volume_identity),
        ("7 root-finding oracle", Duration::from_secs(120), root_oracle),
        ("8 constraint annihilation", Duration::MAX, constraint_annihilation),
    ];
    let mut failed = 0;
    for (name, budget, check) in checks {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < budget;
        let pass = outcome.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = if budget == Duration::MAX { String::new() } else { format!(" / {} s", budget.as_secs()) };
        println!(
            "criterion {name}: {} | {} | {:.2} s{budget}{}",
            if pass { "PASS" } else { "FAIL" },
            outcome.detail,
            elapsed.as_secs_f64(),
            if in_time { "" } else { " (over budget)" }
        );
    }
    println!("{} of 8 criteria passed", 8 - failed);
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
