//! Property tests over randomised inputs on small grids.

use ablm::advection::{advect, mc_limited};
use ablm::bc::{fill_ghost, fill_ghost_vector, ScalarBc, VectorBc};
use ablm::case::temperature_perturbation;
use ablm::elliptic::{MgSettings, NodeMultigrid};
use ablm::field::{plane_average, CellField, CellVector, FaceVelocitySet, NodeField};
use ablm::io::{parse_config_str, serialize_config, Checkpoint};
use ablm::perf::{parallel_efficiency, ScalingRecord};
use ablm::se::fdm::dense_separable;
use ablm::se::{AxOperator, ElementBatch, FdmOperator, Kernel, KernelReport};
use ablm::sgs::{fluctuating_strain, smagorinsky_nut, strain_rate};
use ablm::wall::{compute_surface_state, friction_velocity, moeng_stress, MostParams};
use ablm::{build_grid, Axis, CaseConfig, GridSpec, State, StepConfig, Stepper};
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_cells(g: &GridSpec, seed: u64, lo: f64, hi: f64) -> CellField<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v: Vec<f64> = (0..g.cells()).map(|_| rng.random_range(lo..hi)).collect();
    CellField::from_interior(g, &v)
}

fn random_vector(g: &GridSpec, seed: u64) -> CellVector<f64> {
    CellVector {
        comps: [0, 1, 2].map(|c| random_cells(g, seed.wrapping_mul(3).wrapping_add(c), -1.0, 1.0)),
    }
}

fn random_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn random_nodes(g: &GridSpec, seed: u64) -> NodeField<f64> {
    let v = random_vec((g.nx + 1) * (g.ny + 1) * (g.nz + 1), seed);
    let mut f = NodeField::from_fn(g, |i, j, k| v[i + (g.nx + 1) * (j + (g.ny + 1) * k)]);
    f.sync_periodic();
    f
}

fn dims() -> impl Strategy<Value = (usize, usize, usize)> {
    (4usize..9, 4usize..9, 4usize..9)
}

fn grid((nx, ny, nz): (usize, usize, usize)) -> GridSpec {
    build_grid(nx, ny, nz, nx as f64, ny as f64 * 0.75, nz as f64 * 1.25, true, true).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn plane_average_of_a_constant_is_that_constant(
        c in -300.0f64..300.0,
        ex in 2u32..4,
        ey in 2u32..4,
        nz in 4usize..7,
    ) {
        let g = build_grid(1 << ex, 1 << ey, nz, 1.0, 1.0, 1.0, true, true).unwrap();
        let p = plane_average(&CellField::constant(&g, c));
        prop_assert!(p.values.iter().all(|&v| v == c));
    }

    #[test]
    fn plane_average_ignores_horizontal_shifts(d in dims(), sx in 0usize..8, sy in 0usize..8, seed in any::<u64>()) {
        let g = grid(d);
        let f = random_cells(&g, seed, -5.0, 5.0);
        let shifted = CellField::from_fn(&g, |i, j, k| f.get((i + sx) % g.nx, (j + sy) % g.ny, k));
        let (a, b) = (plane_average(&f), plane_average(&shifted));
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= 1e-13, "{x} {y}");
        }
    }

    #[test]
    fn limited_slope_vanishes_at_extrema_and_is_exact_on_lines(a in -10.0f64..10.0, b in -10.0f64..10.0) {
        if a * b <= 0.0 {
            prop_assert_eq!(mc_limited(a, b), 0.0);
        }
        prop_assert_eq!(mc_limited(a, a), a);
    }

    #[test]
    fn advective_tendency_is_conservative(d in dims(), seed in any::<u64>()) {
        let g = grid(d);
        let mut c = random_cells(&g, seed, 0.0, 3.0);
        fill_ghost(&mut c, &ScalarBc::neumann(&g)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let faces: Vec<f64> = (0..3 * (g.nx + 1) * (g.ny + 1) * (g.nz + 1)).map(|_| rng.random_range(-0.4..0.4)).collect();
        let mut mac = FaceVelocitySet::from_fn(&g, |a, i, j, k| faces[a.index() + 3 * (i + (g.nx + 1) * (j + (g.ny + 1) * k))]);
        mac.sync_periodic();
        mac.enforce_walls();
        let t = advect(&c, &mac, 0.2, None).interior();
        let total: f64 = t.iter().sum();
        let scale: f64 = t.iter().map(|v| v.abs()).sum();
        prop_assert!(total.abs() <= 1e-12 * scale.max(1.0), "{total} of {scale}");
    }

    #[test]
    fn uniform_scalar_in_uniform_flow_has_no_tendency(
        d in dims(),
        c0 in -300.0f64..300.0,
        ux in -2.0f64..2.0,
        uy in -2.0f64..2.0,
    ) {
        let g = grid(d);
        let mut c = CellField::constant(&g, c0);
        fill_ghost(&mut c, &ScalarBc::neumann(&g)).unwrap();
        let mac = FaceVelocitySet::from_fn(&g, |a, _, _, _| match a {
            Axis::X => ux,
            Axis::Y => uy,
            Axis::Z => 0.0,
        });
        let t = advect(&c, &mac, 0.1, None);
        prop_assert!(t.max_abs() <= 1e-12 * c0.abs().max(1.0));
    }

    #[test]
    fn nodal_operator_is_symmetric(d in dims(), coef in 0.1f64..10.0, seed in any::<u64>()) {
        let g = grid((d.0 & !1, d.1 & !1, d.2 & !1));
        let mut mg = NodeMultigrid::<f64>::new(&g, coef, MgSettings::default());
        let (v, w) = (random_nodes(&g, seed), random_nodes(&g, seed ^ 1));
        let (av, aw) = (mg.apply(&v), mg.apply(&w));
        // each periodic node counted once
        let dot = |a: &NodeField<f64>, b: &NodeField<f64>| {
            let mut s = 0.0;
            for k in 0..=g.nz {
                for j in 0..g.ny {
                    for i in 0..g.nx {
                        s += a.get(i, j, k) * b.get(i, j, k);
                    }
                }
            }
            s
        };
        let (x, y) = (dot(&av, &w), dot(&v, &aw));
        prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1.0), "{x} {y}");
        let ones = NodeField::from_fn(&g, |_, _, _| 1.0);
        let a1 = mg.apply(&ones);
        prop_assert!((0..=g.nz).all(|k| a1.get(0, 0, k).abs() <= 1e-12));
        prop_assert!(dot(&av, &v) >= -1e-12);
    }

    #[test]
    fn eddy_viscosity_is_nonnegative(d in dims(), cs in 0.05f64..0.3, seed in any::<u64>()) {
        let g = grid(d);
        let mut u = random_vector(&g, seed);
        fill_ghost_vector(&mut u, &VectorBc::free_slip(&g)).unwrap();
        let s = strain_rate(&u);
        let fl = fluctuating_strain(&s);
        let nut = smagorinsky_nut(&fl, cs, g.filter_width());
        prop_assert!(nut.interior().iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn neutral_log_law_is_exact(sbar in 0.1f64..25.0, z1 in 0.5f64..20.0, z0 in 0.001f64..0.4) {
        let p = MostParams { z0, ..MostParams::default() };
        let s = friction_velocity(sbar, 0.0, z1, &p).unwrap();
        let exact = p.kappa * sbar / (z1 / z0).ln();
        prop_assert!((s.u_tau - exact).abs() <= 1e-12 * exact);
    }

    #[test]
    fn stable_surface_layer_solution(sbar in 1.0f64..20.0, dtheta in 0.001f64..1.0, z1 in 1.0f64..10.0) {
        let p = MostParams::default();
        if let Ok(s) = friction_velocity(sbar, dtheta, z1, &p) {
            let (r1, r2) = s.residuals(sbar, dtheta, z1, &p);
            prop_assert!(r1.abs() <= 1e-8 && r2.abs() <= 1e-8, "{r1} {r2}");
            prop_assert!(s.u_tau >= 0.0 && s.l_obukhov > 0.0);
            prop_assert!(-s.u_tau * s.theta_star <= 0.0);
        }
    }

    #[test]
    fn homogeneous_wall_stress_is_the_drag_law(u0 in -10.0f64..10.0, v0 in -10.0f64..10.0, dth in 0.0f64..0.5) {
        prop_assume!(u0.hypot(v0) > 0.1);
        let g = build_grid(4, 4, 4, 100.0, 100.0, 100.0, true, true).unwrap();
        let (u, v) = (CellField::constant(&g, u0), CellField::constant(&g, v0));
        let th = CellField::constant(&g, 265.0 + dth);
        let sf = compute_surface_state(&u, &v, &th, 265.0, &MostParams::default()).unwrap();
        let [tx, ty] = moeng_stress(&u, &v, &sf);
        let s = u0.hypot(v0);
        for (a, b) in tx.iter().zip(&ty) {
            prop_assert!((a - sf.u_tau.powi(2) * u0 / s).abs() <= 1e-12 * sf.u_tau.powi(2));
            prop_assert!((b - sf.u_tau.powi(2) * v0 / s).abs() <= 1e-12 * sf.u_tau.powi(2));
            // parallel to the mean wind
            prop_assert!((a * v0 - b * u0).abs() <= 1e-12 * sf.u_tau.powi(2) * s);
        }
    }

    #[test]
    fn perturbation_has_zero_plane_mean(seed in any::<u64>(), amp in 0.01f64..1.0) {
        let cfg = CaseConfig { nx: 8, ny: 8, nz: 16, seed, perturbation_amplitude: amp, ..CaseConfig::default() };
        let g = cfg.grid().unwrap();
        let d = temperature_perturbation(&cfg, &g);
        let plane = g.nx * g.ny;
        for k in 0..g.nz {
            let row = &d[k * plane..(k + 1) * plane];
            let m: f64 = row.iter().sum::<f64>() / plane as f64;
            prop_assert!(m.abs() <= 1e-15 * plane as f64);
            prop_assert!(row.iter().all(|v| v.abs() <= amp));
            if g.z_center(k) > cfg.perturbation_height {
                prop_assert!(row.iter().all(|&v| v == 0.0));
            }
        }
        let below = cfg.theta_profile(cfg.inversion_height - 1e-9);
        prop_assert!((below - cfg.theta_profile(cfg.inversion_height + 1e-9)).abs() < 1e-9);
    }

    #[test]
    fn efficiency_is_one_at_the_base_count(t0 in 0.01f64..10.0, t1 in 0.01f64..10.0, p0 in 1usize..8, extra in 1usize..8) {
        let p1 = p0 + extra;
        let mut recs = vec![ScalingRecord::new(p1, 100, t1, 0.5), ScalingRecord::new(p0, 100, t0, 0.5)];
        parallel_efficiency(&mut recs);
        prop_assert_eq!(recs[1].p_eff, 1.0);
        prop_assert_eq!(recs[0].p_eff, t0 * p0 as f64 / (t1 * p1 as f64));
        prop_assert_eq!(recs[0].r_t, t1 / 0.5);
    }

    #[test]
    fn config_round_trips(
        n in (4usize..200, 4usize..200, 4usize..200),
        ug in 0.5f64..20.0,
        cooling in 0.0f64..2.0,
        cs in 0.01f64..0.5,
        dt in proptest::option::of(0.01f64..2.0),
        seed in any::<u64>(),
        sgs in any::<bool>(),
        init in 0usize..6,
    ) {
        let mut cfg = CaseConfig {
            nx: n.0, ny: n.1, nz: n.2, ug, cooling_rate: cooling, dt, seed, init_iterations: init,
            ..CaseConfig::default()
        };
        cfg.sgs.cs = cs;
        cfg.sgs.enabled = sgs;
        let back = parse_config_str(&serialize_config(&cfg)).unwrap();
        prop_assert_eq!(back, cfg);
    }

    #[test]
    fn checkpoint_round_trips(d in dims(), seed in any::<u64>(), t in 0.0f64..1e5, dt in 0.01f64..2.0) {
        let g = grid(d);
        let mut s = State::<f64>::rest(&g, 265.0);
        s.u = random_vector(&g, seed);
        s.gp = random_vector(&g, seed ^ 1);
        s.theta = random_cells(&g, seed ^ 2, 260.0, 270.0);
        s.p = random_nodes(&g, seed ^ 3);
        s.t = t;
        let bytes = Checkpoint::from_state(&s, dt).to_bytes();
        let back = Checkpoint::from_bytes(&bytes).unwrap();
        prop_assert_eq!(back.to_bytes(), bytes);
        prop_assert_eq!(back.dt.to_bits(), dt.to_bits());
        let r = back.into_state(&g).unwrap();
        prop_assert_eq!(r.t.to_bits(), t.to_bits());
        prop_assert_eq!(r.theta.interior(), s.theta.interior());
        prop_assert_eq!(&r.p, &s.p);
        for a in Axis::ALL {
            prop_assert_eq!(r.u.comp(a).interior(), s.u.comp(a).interior());
            prop_assert_eq!(r.gp.comp(a).interior(), s.gp.comp(a).interior());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn stiffness_operator_is_symmetric(order in 1usize..7, elements in 1usize..4, seed in any::<u64>()) {
        let b = ElementBatch::new(elements, order).unwrap();
        let op = AxOperator::<f64>::new(b);
        let (u, v) = (random_vec(b.len(), seed), random_vec(b.len(), seed ^ 1));
        let (mut au, mut av) = (vec![0.0; b.len()], vec![0.0; b.len()]);
        op.apply(&u, &mut au).unwrap();
        op.apply(&v, &mut av).unwrap();
        let x: f64 = au.iter().zip(&v).map(|(a, b)| a * b).sum();
        let y: f64 = av.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!((x - y).abs() <= 1e-11 * x.abs().max(1.0), "{x} {y}");
        let uu: f64 = au.iter().zip(&u).map(|(a, b)| a * b).sum();
        prop_assert!(uu >= -1e-12);
    }

    #[test]
    fn fdm_inverts_the_separable_operator(order in 1usize..6, seed in any::<u64>()) {
        let op = FdmOperator::<f64>::new(ElementBatch::new(1, order).unwrap());
        let x = random_vec(op.len(), seed);
        let r = dense_separable(order, 1.0) * DVector::from_column_slice(&x);
        let mut y = vec![0.0; op.len()];
        op.apply(r.as_slice(), &mut y).unwrap();
        let err = x.iter().zip(&y).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        prop_assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn model_flops_grow_with_the_batch(order in 1usize..12, e in 1usize..1000, more in 0usize..1000) {
        for k in Kernel::ALL {
            let small = KernelReport::new(k, ElementBatch::new(e, order).unwrap(), 8, 1e-3);
            let big = KernelReport::new(k, ElementBatch::new(e + more, order).unwrap(), 8, 1e-3);
            prop_assert!(big.model_flops >= small.model_flops);
            prop_assert!((small.gflops() - small.model_flops / 1e-3 / 1e9).abs() <= 1e-9 * small.gflops());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn scalar_mass_is_conserved_by_a_step(seed in any::<u64>()) {
        let g = build_grid(8, 8, 8, 1.0, 1.0, 1.0, true, true).unwrap();
        let mut s = State::<f64>::rest(&g, 265.0);
        s.u = random_vector(&g, seed);
        s.theta = random_cells(&g, seed ^ 7, 264.0, 266.0);
        let mass = |s: &State<f64>| s.theta.interior().iter().sum::<f64>();
        let m0 = mass(&s);
        let mut st = Stepper::new(&g, StepConfig::viscous(&g, 0.02, 1e-3));
        st.step(&mut s).unwrap();
        st.step(&mut s).unwrap();
        prop_assert!((mass(&s) - m0).abs() <= 1e-12 * m0, "{} vs {m0}", mass(&s));
    }

    #[test]
    fn steps_are_bitwise_repeatable(seed in any::<u64>()) {
        let cfg = CaseConfig { nx: 8, ny: 8, nz: 8, seed, dt: Some(1.0), ..CaseConfig::default() };
        let run = || {
            let (mut s, mut st) = ablm::prepare::<f64>(&cfg).unwrap();
            for _ in 0..3 {
                st.step(&mut s).unwrap();
            }
            Checkpoint::from_state(&s, 1.0).to_bytes()
        };
        prop_assert_eq!(run(), run());
    }
}
