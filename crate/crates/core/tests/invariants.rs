use nalgebra::Vector3;
use proptest::prelude::*;

use tfem_core::assembly::{assemble_tfem, solve_system, TfemOptions};
use tfem_core::basis::{shape_eval, ParametricPoint};
use tfem_core::mesh::{gen_eight_element, gen_two_element, mesh_from_json, mesh_to_json};
use tfem_core::tangle::{concave_elements, fold_sample_points, oriented_count};
use tfem_core::{BoundarySpec, ExactSolution, Family, Mesh};

fn family_mesh(eight: bool, d: f64) -> Mesh {
    if eight {
        gen_eight_element(d).unwrap()
    } else {
        gen_two_element(d).unwrap()
    }
}

fn d_strategy() -> impl Strategy<Value = (bool, f64)> {
    prop_oneof![
        (Just(false), 0.1f64..0.45),
        (Just(true), 0.1f64..0.4),
    ]
}

fn linear_field() -> impl Strategy<Value = ExactSolution> {
    (-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0)
        .prop_map(|(a, b, c, o)| ExactSolution::new(Vector3::new(a, b, c), o))
}

fn opts() -> TfemOptions {
    TfemOptions {
        depth: 4,
        ..TfemOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tfem_stiffness_has_constant_null_space((eight, d) in d_strategy()) {
        let m = family_mesh(eight, d);
        let bc = BoundarySpec::left_dirichlet(&m);
        let sys = assemble_tfem(&m, &bc, &ExactSolution::benchmark(), &opts()).unwrap();
        let k1 = sys.stiffness.mul_vec(&vec![1.0; m.nodes.len()]);
        let norm = k1.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(norm <= 1e-10 * sys.stiffness.frobenius_norm(), "{norm}");
        prop_assert!(!sys.concave.is_empty());
    }

    #[test]
    fn constraints_annihilate_linear_fields((eight, d) in d_strategy(), ex in linear_field(), seed in 0u64..1000) {
        let m = family_mesh(eight, d);
        let samples: Vec<_> = concave_elements(&m)
            .unwrap()
            .into_iter()
            .map(|e| fold_sample_points(&m, e, 32, seed).unwrap())
            .collect();
        let c = tfem_core::assembly::assemble_constraints(&m, &samples, 1e-10).unwrap();
        prop_assert!(c.m() > 0);
        for r in c.apply(&ex.nodal_values(&m)) {
            prop_assert!(r.abs() <= 1e-9);
        }
    }

    #[test]
    fn fold_branches_agree_on_linear_fields((eight, d) in d_strategy(), ex in linear_field()) {
        let m = family_mesh(eight, d);
        for e in concave_elements(&m).unwrap() {
            let nodes = m.elements[e].nodes;
            let u: Vec<f64> = nodes.iter().map(|&i| ex.value(&m.coords(i))).collect();
            let eval = |xi: &ParametricPoint| shape_eval(xi).n.iter().zip(&u).map(|(n, v)| n * v).sum::<f64>();
            for s in fold_sample_points(&m, e, 16, 3).unwrap().samples {
                prop_assert!((eval(&s.xi_plus) - eval(&s.xi_minus)).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn load_shift_in_constraint_row_space_only_moves_multipliers(
        (eight, d) in d_strategy(),
        lambda in prop::collection::vec(-1.0f64..1.0, 1..=8),
    ) {
        let m = family_mesh(eight, d);
        let bc = BoundarySpec::left_dirichlet(&m);
        let ex = ExactSolution::benchmark();
        let sys = assemble_tfem(&m, &bc, &ex, &opts()).unwrap();
        let mut shifted = sys.clone();
        for (row, l) in sys.constraints.rows.iter().zip(lambda.iter().cycle()) {
            for (&i, c) in row.nodes.iter().zip(&row.coeffs) {
                shifted.load.values[i] += l * c;
            }
        }
        let a = solve_system(&sys, &m, &bc, &ex).unwrap();
        let b = solve_system(&shifted, &m, &bc, &ex).unwrap();
        let scale = a.u_hat.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        for (x, y) in a.u_hat.iter().zip(&b.u_hat) {
            prop_assert!((x - y).abs() <= 1e-9 * scale, "{x} {y}");
        }
    }

    #[test]
    fn oriented_count_is_one_inside_the_domain(
        (eight, d) in d_strategy(),
        p in (0.001f64..0.999, 0.001f64..0.999, 0.001f64..0.999),
    ) {
        let m = family_mesh(eight, d);
        let c = oriented_count(&m, &Vector3::new(p.0, p.1, p.2)).unwrap();
        if !c.ambiguous {
            prop_assert_eq!(c.net, 1);
        }
    }

    #[test]
    fn mesh_json_round_trip((eight, d) in d_strategy()) {
        let m = family_mesh(eight, d);
        let back = mesh_from_json(&mesh_to_json(&m).unwrap()).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn generated_meshes_have_one_concave_element((eight, d) in d_strategy()) {
        let m = family_mesh(eight, d);
        prop_assert_eq!(concave_elements(&m).unwrap().len(), 1);
        let family = if eight { Family::EightElement } else { Family::TwoElement };
        prop_assert_eq!(family.generate(d).unwrap(), m);
    }
}
