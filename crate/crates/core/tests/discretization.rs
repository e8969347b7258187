use crackfem::assembly::{LoadKind, LoadProfile, Problem};
use crackfem::config::{CaseId, RunConfig};
use crackfem::constitutive::{FiberAxis, MaterialModel};
use crackfem::mesh::{build_plate_mesh, QuadMesh};
use crackfem::oracle::dense_check;
use crackfem::picard::{fixed_point_defect, run_picard, run_picard_problem, warm_start, PicardConfig, PicardStatus};
use crackfem::postprocess::{crack_opening_profile, quadrature_fields, recover_fields};
use crackfem::solver::{solve_detailed, Preconditioner, SolverConfig};
use crackfem::sparse::{dot, norm2};
use crackfem::tensor::frob_norm;
use crackfem::Error;
use proptest::prelude::*;

const BENCHMARK: [CaseId; 4] = [CaseId::Case1a, CaseId::Case1b, CaseId::Case2a, CaseId::Case2b];

fn small_mesh(nx: usize, ny: usize) -> QuadMesh {
    build_plate_mesh(2.0, 1.0, 1.0, nx, ny, 4.0).unwrap()
}

fn linear_solve(problem: &Problem, cfg: &SolverConfig) -> Vec<f64> {
    solve_detailed(&problem.assemble(None).unwrap(), cfg, None).unwrap().x
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn assembled_matrix_is_symmetric(seed in 0u64..1000, case in 0usize..4, beta in 0.0..2.0f64) {
        let cfg = RunConfig::for_case(BENCHMARK[case]);
        let mesh = small_mesh(8, 4);
        let m = cfg.material.with_beta(beta).unwrap();
        let problem = Problem::benchmark(&mesh, m, cfg.load);
        let prev: Vec<f64> = (0..mesh.num_dofs())
            .map(|i| 0.05 * (((i as u64 + 1) * (seed + 7)) % 97) as f64 / 97.0)
            .collect();
        let sys = problem.assemble(Some(&prev)).unwrap();
        prop_assert!(sys.matrix.max_asymmetry() <= 1e-14 * sys.matrix.max_abs());
    }
}

#[test]
fn assembled_matrix_is_positive_definite() {
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        for (nx, ny) in [(2, 2), (4, 2), (8, 4), (8, 8)] {
            let mesh = small_mesh(nx, ny);
            let problem = Problem::benchmark(&mesh, cfg.material, cfg.load);
            let u0 = linear_solve(&problem, &SolverConfig::direct());
            let a = problem.assemble(Some(&u0)).unwrap().matrix.to_dense();
            let ev = a.symmetric_eigenvalues();
            assert!(ev.min() > 0.0, "{case} {nx}x{ny}: min eigenvalue {}", ev.min());
        }
    }
}

#[test]
fn patch_test_uniform_stress() {
    for fiber in [FiberAxis::X, FiberAxis::Y] {
        let mesh = build_plate_mesh(2.0, 1.0, 0.0, 10, 5, 3.0).unwrap();
        let m = MaterialModel::new(1.0, 1.0, 0.0, fiber, 1.0, 0.0).unwrap();
        let s = 0.1;
        let problem = Problem::benchmark(&mesh, m, LoadProfile::new(LoadKind::Uniform, s));
        let u = linear_solve(&problem, &SolverConfig::direct());
        for q in quadrature_fields(&mesh, &m, &u).unwrap() {
            assert!((q.stress.yy - s).abs() <= 1e-10);
            assert!(q.stress.xy.abs() <= 1e-10);
            assert!(q.stress.xx.abs() <= 1e-10);
        }
    }
}

#[test]
fn slope_load_resultant_on_graded_mesh() {
    let mesh = small_mesh(16, 8);
    let problem = Problem::benchmark(&mesh, MaterialModel::default(), LoadProfile::new(LoadKind::Slope, 0.1));
    let f = problem.load_vector();
    let fy: f64 = f.iter().skip(1).step_by(2).sum();
    // ∫_0^2 0.1 (0.1 + 0.1 x) dx
    assert!((fy - 0.04).abs() <= 1e-14);
    let moment: f64 = (0..mesh.num_nodes()).map(|n| mesh.nodes[n][0] * f[2 * n + 1]).sum();
    // linear traction, so the 2-point rule is exact for the first moment too
    assert!((moment - 0.1 * (0.1 * 2.0 + 0.1 * 8.0 / 3.0)).abs() <= 1e-14);
}

#[test]
fn linear_solution_satisfies_galerkin_orthogonality() {
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        let mesh = small_mesh(16, 8);
        let problem = Problem::benchmark(&mesh, cfg.material.linearized(), cfg.load);
        let u = linear_solve(&problem, &SolverConfig::direct());
        let (r, norm, _) = problem.residual(&u).unwrap();
        let scale = norm2(&problem.load_vector());
        assert!(norm <= 1e-12 * scale, "{case}: {norm:e}");
        // orthogonal to every admissible test function
        let w: Vec<f64> = problem
            .constrained_mask()
            .iter()
            .enumerate()
            .map(|(i, &c)| if c { 0.0 } else { ((i * 37) % 11) as f64 - 5.0 })
            .collect();
        assert!(dot(&r, &w).abs() <= 1e-12 * scale * norm2(&w));
    }
}

#[test]
fn direct_and_cg_agree() {
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        let mesh = small_mesh(32, 16);
        let problem = Problem::benchmark(&mesh, cfg.material, cfg.load);
        let u0 = warm_start(&problem, &SolverConfig::direct()).unwrap();
        let sys = problem.assemble(Some(&u0)).unwrap();
        let xd = solve_detailed(&sys, &SolverConfig::direct(), None).unwrap().x;
        for pc in [Preconditioner::None, Preconditioner::Jacobi, Preconditioner::IncompleteCholesky] {
            let cg = SolverConfig { preconditioner: pc, ..Default::default() };
            let xc = solve_detailed(&sys, &cg, None).unwrap().x;
            let diff: Vec<f64> = xd.iter().zip(&xc).map(|(a, b)| a - b).collect();
            assert!(norm2(&diff) <= 1e-8 * norm2(&xd), "{case} {pc:?}");
        }
    }
}

#[test]
fn jacobi_needs_no_more_iterations_on_graded_meshes() {
    for grading in [2.0, 4.0, 8.0] {
        let cfg = RunConfig::for_case(CaseId::Case1a);
        let mesh = build_plate_mesh(2.0, 1.0, 1.0, 32, 16, grading).unwrap();
        let sys = Problem::benchmark(&mesh, cfg.material, cfg.load).assemble(None).unwrap();
        let plain = SolverConfig { preconditioner: Preconditioner::None, ..Default::default() };
        let n_plain = solve_detailed(&sys, &plain, None).unwrap().iterations;
        let n_jac = solve_detailed(&sys, &SolverConfig::default(), None).unwrap().iterations;
        assert!(n_jac <= n_plain, "grading {grading}: {n_jac} > {n_plain}");
    }
}

#[test]
fn dense_check_flags_corrupted_symmetric_entry() {
    let cfg = RunConfig::for_case(CaseId::Case2a);
    let mesh = small_mesh(8, 4);
    let mut sys = Problem::benchmark(&mesh, cfg.material, cfg.load).assemble(None).unwrap();
    assert!(dense_check(&sys, &SolverConfig::default()).unwrap() <= 1e-8);
    // perturb one off-diagonal entry without its mirror
    let row = (0..sys.dim())
        .find(|&i| sys.matrix.row(i).any(|(j, v)| j != i && v != 0.0))
        .unwrap();
    let (col, _) = sys.matrix.row(row).find(|&(j, v)| j != row && v != 0.0).unwrap();
    let pos = sys.matrix.position(row, col).unwrap();
    sys.matrix.values[pos] *= 1.5;
    assert!(matches!(dense_check(&sys, &SolverConfig::default()), Err(Error::Breakdown(_))));
}

#[test]
fn picard_history_is_monotone_at_defaults() {
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        let mesh = QuadMesh::from_geometry(&cfg.mesh).unwrap();
        let s = run_picard(&mesh, &cfg.material, cfg.load, &cfg.solver, &cfg.picard).unwrap();
        assert_eq!(s.status, PicardStatus::ConvergedTol, "{case}");
        let h = s.residual_norms();
        let k = h.len().min(4);
        assert!(h[..k].windows(2).all(|w| w[1] < w[0]), "{case}: {h:?}");
        assert!(s.history.iter().all(|r| r.clamp_events == 0));
    }
}

#[test]
fn converged_iterate_is_a_fixed_point() {
    let solver = SolverConfig::default();
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        let mesh = small_mesh(32, 16);
        let problem = Problem::benchmark(&mesh, cfg.material, cfg.load);
        let tight = PicardConfig { tol: 1e-12, max_iter: 40, ..Default::default() };
        let s = run_picard_problem(&problem, &solver, &tight).unwrap();
        assert!(s.status.is_success());
        assert!(fixed_point_defect(&problem, &solver, &s.u).unwrap() <= 1e-9, "{case}");
    }
}

#[test]
fn relaxation_keeps_the_fixed_point() {
    let cfg = RunConfig::for_case(CaseId::Case1a);
    let mesh = small_mesh(32, 16);
    let problem = Problem::benchmark(&mesh, cfg.material, cfg.load);
    let solver = SolverConfig::default();
    let plain = PicardConfig { tol: 1e-12, max_iter: 60, ..Default::default() };
    let relaxed = PicardConfig { relaxation: 0.6, ..plain };
    let a = run_picard_problem(&problem, &solver, &plain).unwrap();
    let b = run_picard_problem(&problem, &solver, &relaxed).unwrap();
    assert!(b.iterations() > a.iterations());
    let diff: Vec<f64> = a.u.iter().zip(&b.u).map(|(x, y)| x - y).collect();
    assert!(norm2(&diff) <= 1e-9 * norm2(&a.u));
}

#[test]
fn tiny_beta_stays_at_the_warm_start() {
    let solver = SolverConfig::default();
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        let mesh = small_mesh(16, 8);
        for beta in [1e-6, 1e-8, 0.0] {
            let problem = Problem::benchmark(&mesh, cfg.material.with_beta(beta).unwrap(), cfg.load);
            let u0 = warm_start(&problem, &solver).unwrap();
            let s = run_picard_problem(&problem, &solver, &PicardConfig::default()).unwrap();
            let diff: Vec<f64> = u0.iter().zip(&s.u).map(|(a, b)| a - b).collect();
            assert!(norm2(&diff) <= 1e-5 * norm2(&u0), "{case} beta {beta}");
            if beta == 0.0 {
                assert_eq!(s.iterations(), 1);
            }
        }
    }
}

#[test]
fn recovered_fields_respect_physical_bounds() {
    for case in BENCHMARK {
        let cfg = RunConfig::for_case(case);
        let mesh = small_mesh(32, 16);
        for beta in [0.5, 1.0, 2.0] {
            let m = cfg.material.with_beta(beta).unwrap();
            let s = run_picard(&mesh, &m, cfg.load, &cfg.solver, &cfg.picard).unwrap();
            for q in quadrature_fields(&mesh, &m, &s.u).unwrap() {
                assert!(q.energy >= 0.0);
                assert!(frob_norm(&m.strain_from_stress(&q.stress)) <= 1.0 / beta + 1e-9);
            }
            let f = recover_fields(&mesh, &m, &s.u).unwrap();
            assert!(f.energy.iter().all(|&w| w >= 0.0));
            let open = crack_opening_profile(&mesh, &s.u);
            assert!(open.iter().all(|p| p.1 >= -1e-12));
            assert_eq!(open.last().unwrap().1, 0.0);
            assert!(open[0].1 > 0.0);
        }
    }
}

#[test]
fn beta_zero_matches_linear_elasticity() {
    let cfg = RunConfig::for_case(CaseId::Case2b);
    let mesh = small_mesh(16, 8);
    let m = cfg.material.with_beta(0.0).unwrap();
    let s = run_picard(&mesh, &m, cfg.load, &SolverConfig::direct(), &PicardConfig::default()).unwrap();
    let u = linear_solve(&Problem::benchmark(&mesh, m, cfg.load), &SolverConfig::direct());
    let diff: Vec<f64> = u.iter().zip(&s.u).map(|(a, b)| a - b).collect();
    assert!(norm2(&diff) <= 1e-12 * norm2(&u));
    for q in quadrature_fields(&mesh, &m, &u).unwrap() {
        let lin = m.stiffness_apply(&q.strain);
        assert!(frob_norm(&(lin - q.stress)) <= 1e-14 * (1.0 + frob_norm(&lin)));
    }
}
