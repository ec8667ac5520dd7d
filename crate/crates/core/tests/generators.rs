use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qme::bath::{BathKind, BathModel, Horizon};
use qme::generators::*;
use qme::hilbert::{commutator, dagger, hermiticity_defect, trace, zeros, CMat, EigenSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    Array2::from_shape_fn((n, n), |_| rand_c(rng))
}

fn random_hermitian(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = random_matrix(n, rng);
    (&a + &dagger(&a)) * C64::new(0.5, 0.0)
}

fn random_density(n: usize, rng: &mut ChaCha8Rng) -> CMat {
    let a = random_matrix(n, rng);
    let p = a.dot(&dagger(&a));
    let t = trace(&p);
    p / t
}

fn random_spectrum(n: usize, rng: &mut ChaCha8Rng) -> EigenSystem {
    let mut e: Vec<f64> = (0..n).map(|_| 3.0 * rng.gen::<f64>()).collect();
    e.sort_by(|a, b| a.total_cmp(b));
    EigenSystem::from_energies(Array1::from(e))
}

fn ohmic(g: f64) -> BathModel {
    BathModel::new(BathKind::OhmicExp, g, 1.0).unwrap()
}

fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    let d = (a - b).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let s = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1e-300);
    d / s
}

fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().fold(0.0, |m, z| m.max(z.norm()))
}

fn jc3() -> (EigenSystem, CMat, BathModel) {
    let es = EigenSystem::from_energies(Array1::from(vec![0.0, 0.095, 0.105]));
    let mut c = zeros(3);
    c[[1, 0]] = C64::new(1.0, 0.0);
    c[[2, 0]] = C64::new(1.0, 0.0);
    (es, c, ohmic(0.001))
}

#[test]
fn redfield_filtered_and_kernel_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for hermitian in [true, false] {
        let es = random_spectrum(5, &mut rng);
        let a = if hermitian { random_hermitian(5, &mut rng) } else { random_matrix(5, &mut rng) };
        let mut cs = CouplingSet::single(a, ohmic(0.05));
        cs.push(random_hermitian(5, &mut rng), BathModel::new(BathKind::OhmicDrudeLorentz, 0.02, 2.0).unwrap());
        let f = redfield_generator(&es, &cs, Horizon::Infinite).unwrap();
        let k = redfield_kernel_form(&es, &cs).unwrap();
        for _ in 0..20 {
            let rho = random_matrix(5, &mut rng);
            let d = rel_diff(&f.apply(0.0, &rho).unwrap(), &k.apply(0.0, &rho).unwrap());
            assert!(d < 1e-12, "relative difference {d:e}");
        }
    }
}

#[test]
fn game_lindblad_and_kernel_forms_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let es = random_spectrum(5, &mut rng);
    let cs = CouplingSet::single(random_hermitian(5, &mut rng), ohmic(0.05));
    let l = game_generator(&es, &cs, Horizon::Infinite).unwrap();
    let k = game_kernel_form(&es, &cs).unwrap();
    for _ in 0..10 {
        let rho = random_matrix(5, &mut rng);
        assert!(rel_diff(&l.apply(0.0, &rho).unwrap(), &k.apply(0.0, &rho).unwrap()) < 1e-12);
    }
}

#[test]
fn filtered_operator_three_level() {
    let (es, c, bath) = jc3();
    let f = filtered_operator(&c, &es, &bath, Horizon::Infinite).unwrap();
    for (i, j) in [(1, 0), (2, 0)] {
        let w = es.energies[i] - es.energies[j];
        let expect = C64::new(bath.spectral_density(w) / 2.0, -bath.principal_density(w));
        assert!((f[[i, j]] - expect).norm() < 1e-14);
    }
    assert_eq!(f.iter().filter(|z| z.norm() > 0.0).count(), 2);

    let mut d = zeros(3);
    d[[1, 1]] = C64::new(2.0, 0.0);
    let fd = filtered_operator(&d, &es, &bath, Horizon::Infinite).unwrap();
    assert!((fd[[1, 1]] - d[[1, 1]] * bath.half_fourier(0.0, Horizon::Infinite).unwrap().conj()).norm() < 1e-15);
}

#[test]
fn three_level_lamb_shift_matches_hand_assembly() {
    let (es, c, bath) = jc3();
    let cs = CouplingSet::single(c, bath);
    let h = lamb_shift(&cs, &es, LambVariant::Redfield).unwrap() + es.hamiltonian();
    let (e1, e2) = (es.energies[1], es.energies[2]);
    let (g1, g2) = (bath.spectral_density(e1), bath.spectral_density(e2));
    let (s1, s2) = (bath.principal_density(e1), bath.principal_density(e2));
    let sbar = 0.5 * (s1 + s2);
    let dg = g2 - g1;
    let mut expect = zeros(3);
    expect[[1, 1]] = C64::new(e1 + s1, 0.0);
    expect[[2, 2]] = C64::new(e2 + s2, 0.0);
    expect[[1, 2]] = C64::new(sbar, -dg / 4.0);
    expect[[2, 1]] = C64::new(sbar, dg / 4.0);
    assert!(max_diff(&h, &expect) < 1e-10, "{h:?}");
    assert!(hermiticity_defect(h.view()) < 1e-15);
}

#[test]
fn rwa_shift_is_diagonal_for_nondegenerate_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let es = random_spectrum(4, &mut rng);
    let a = random_hermitian(4, &mut rng);
    let bath = ohmic(0.1);
    let h = lamb_shift(&CouplingSet::single(a.clone(), bath), &es, LambVariant::Rwa).unwrap();
    for n in 0..4 {
        for m in 0..4 {
            let expect = if n == m {
                (0..4).map(|i| a[[n, i]].norm_sqr() * bath.principal_density(es.bohr[[n, i]])).sum::<f64>()
            } else {
                0.0
            };
            assert!((h[[n, m]] - expect).norm() < 1e-14);
        }
    }
}

#[test]
fn ule_and_game_shift_diagonals_agree() {
    let (es, c, bath) = jc3();
    let cs = CouplingSet::single(&c + &dagger(&c), bath.with_coupling(0.05));
    let u = lamb_shift(&cs, &es, LambVariant::Ule).unwrap();
    let r = lamb_shift(&cs, &es, LambVariant::Redfield).unwrap();
    for i in 0..3 {
        assert!((u[[i, i]] - r[[i, i]]).norm() < 1e-6, "{} vs {}", u[[i, i]], r[[i, i]]);
    }
    assert!(hermiticity_defect(u.view()) < 1e-14);
}

#[test]
fn game_operators_three_level() {
    let (es, c, bath) = jc3();
    let g = game_generator(&es, &CouplingSet::single(c.clone(), bath), Horizon::Infinite).unwrap();
    assert_eq!(g.lindblad_ops().len(), 1);
    let l = &g.lindblad_ops()[0];
    for n in 0..3 {
        for m in 0..3 {
            let expect = c[[n, m]] * bath.spectral_density(es.bohr[[n, m]]).sqrt();
            assert!((l[[n, m]] - expect).norm() < 1e-15);
        }
    }
    assert!(l[[1, 0]].norm() > 0.0 && l[[2, 0]].norm() > 0.0);
}

#[test]
fn zero_temperature_game_ops_vanish_on_nonnegative_frequencies() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let es = random_spectrum(5, &mut rng);
    let g = game_generator(&es, &CouplingSet::single(random_hermitian(5, &mut rng), ohmic(0.1)), Horizon::Infinite).unwrap();
    let l = &g.lindblad_ops()[0];
    for n in 0..5 {
        for m in 0..5 {
            if es.bohr[[n, m]] <= 0.0 {
                assert_eq!(l[[n, m]], C64::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn game_without_shift_is_perlind() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let es = random_spectrum(4, &mut rng);
    let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1));
    let game = game_generator(&es, &cs, Horizon::Infinite).unwrap();
    let per = perlind_generator(&es, &cs).unwrap();
    assert_eq!(game.lindblad_ops(), per.lindblad_ops());
    assert!(max_diff(per.h_eff(), &es.hamiltonian()) == 0.0);
    let rho = random_density(4, &mut rng);
    let shift = game.h_eff() - &es.hamiltonian();
    let lhs = game.apply(0.0, &rho).unwrap() - per.apply(0.0, &rho).unwrap();
    let rhs = commutator(&shift, &rho) * C64::new(0.0, -1.0);
    assert!(max_diff(&lhs, &rhs) < 1e-14);
}

#[test]
fn zero_coupling_is_pure_commutator() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    let es = random_spectrum(4, &mut rng);
    let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.0));
    let r = redfield_generator(&es, &cs, Horizon::Infinite).unwrap();
    let rho = random_density(4, &mut rng);
    let expect = commutator(&es.hamiltonian(), &rho) * C64::new(0.0, -1.0);
    assert!(max_diff(&r.apply(0.0, &rho).unwrap(), &expect) < 1e-15);
    let d = r.apply(0.0, &rho).unwrap();
    for i in 0..4 {
        assert!(d[[i, i]].norm() < 1e-15);
    }
}

/// S_x, S_y couplings equal S_+, S_- couplings at half the bath strength.
#[test]
fn ladder_couplings_reproduce_cartesian_couplings() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let es = random_spectrum(5, &mut rng);
    let p = random_matrix(5, &mut rng);
    let m = dagger(&p);
    let x = (&p + &m) * C64::new(0.5, 0.0);
    let y = (&p - &m) * C64::new(0.0, -0.5);
    let bath = ohmic(0.08);
    let mut cart = CouplingSet::single(x, bath);
    cart.push(y, bath);
    let mut ladder = CouplingSet::single(p, bath.with_coupling(0.04));
    ladder.push(m, bath.with_coupling(0.04));
    let rho = random_density(5, &mut rng);

    let pairs: Vec<(Box<dyn Generator>, Box<dyn Generator>)> = vec![
        (
            Box::new(redfield_generator(&es, &cart, Horizon::Infinite).unwrap()),
            Box::new(redfield_generator(&es, &ladder, Horizon::Infinite).unwrap()),
        ),
        (
            Box::new(game_generator(&es, &cart, Horizon::Infinite).unwrap()),
            Box::new(game_generator(&es, &ladder, Horizon::Infinite).unwrap()),
        ),
        (Box::new(rwa_generator(&es, &cart).unwrap()), Box::new(rwa_generator(&es, &ladder).unwrap())),
        (Box::new(prwa_generator(&es, &cart, 4).unwrap()), Box::new(prwa_generator(&es, &ladder, 4).unwrap())),
        (
            Box::new(TdcGenerator::new(TdcKind::Game, &es, &cart).unwrap()),
            Box::new(TdcGenerator::new(TdcKind::Game, &es, &ladder).unwrap()),
        ),
    ];
    for (a, b) in pairs {
        let d = rel_diff(&a.apply(2.0, &rho).unwrap(), &b.apply(2.0, &rho).unwrap());
        assert!(d < 1e-12, "{d:e}");
    }
}

#[test]
fn equally_spaced_prwa_dissipator_is_rwa() {
    let mut rng = ChaCha8Rng::seed_from_u64(18);
    let es = EigenSystem::from_energies(Array1::from(vec![0.0, 0.5, 1.0, 1.5]));
    let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1));
    // Bohr frequencies −1.5..1.5 in steps of 0.5: seven distinct values, one per bin
    let prwa = prwa_generator(&es, &cs, 7).unwrap();
    let rwa = rwa_generator(&es, &cs).unwrap();
    let rho = random_density(4, &mut rng);
    let unitary = |h: &CMat| commutator(h, &rho) * C64::new(0.0, -1.0);
    let dp = prwa.apply(0.0, &rho).unwrap() - unitary(prwa.h_eff());
    let dr = rwa.apply(0.0, &rho).unwrap() - unitary(rwa.h_eff());
    assert!(rel_diff(&dp, &dr) < 1e-12);
}

#[test]
fn single_bin_prwa() {
    let mut rng = ChaCha8Rng::seed_from_u64(19);
    let es = random_spectrum(4, &mut rng);
    let a = random_hermitian(4, &mut rng);
    let bath = ohmic(0.1);
    let p = prwa_generator(&es, &CouplingSet::single(a.clone(), bath), 1).unwrap();
    // Bohr frequencies come in ± pairs, so the single bin sits at ω = 0 where γ vanishes
    let mean = es.bohr.sum() / 16.0;
    assert!(mean.abs() < 1e-15);
    assert!(p.lindblad_ops().is_empty());
    let b = Binning::new(&es, 1).unwrap();
    assert_eq!(b.centers.len(), 1);
    assert!(b.centers[0].abs() < 1e-15);
    let rho = random_density(4, &mut rng);
    assert!(trace(&p.apply(0.0, &rho).unwrap()).norm() < 1e-12);
}

#[test]
fn coarse_grained_redfield_limits() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let es = random_spectrum(4, &mut rng);
    let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1));
    let red = redfield_generator(&es, &cs, Horizon::Infinite).unwrap();
    let rwa = rwa_generator(&es, &cs).unwrap();
    let cg0 = cg_redfield_generator(&es, &cs, 0.0).unwrap();
    // sinc vanishes exactly at multiples of π; choose T0 so every nonzero Bohr-frequency difference is far past the Heisenberg time
    let cg_inf = cg_redfield_generator(&es, &cs, 1e12).unwrap();
    let cg_mid = cg_redfield_generator(&es, &cs, 3.0).unwrap();
    for _ in 0..5 {
        let rho = random_density(4, &mut rng);
        let r = red.apply(0.0, &rho).unwrap();
        assert!(max_diff(&cg0.apply(0.0, &rho).unwrap(), &r) < 1e-12 * (1.0 + r.iter().fold(0.0f64, |m, z| m.max(z.norm()))));
        assert!(max_diff(&cg_inf.apply(0.0, &rho).unwrap(), &rwa.apply(0.0, &rho).unwrap()) < 1e-8);
        assert!(trace(&cg_mid.apply(0.0, &rho).unwrap()).norm() < 1e-10);
    }
}

#[test]
fn rwa_kernel_form_matches_class_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    // degenerate frequency pairs: 0→1 and 2→3 share a Bohr frequency
    let es = EigenSystem::from_energies(Array1::from(vec![0.0, 0.7, 1.1, 1.8, 2.9]));
    let cs = CouplingSet::single(random_hermitian(5, &mut rng), ohmic(0.1));
    let a = rwa_generator(&es, &cs).unwrap();
    let b = rwa_kernel_form(&es, &cs).unwrap();
    for _ in 0..5 {
        let rho = random_matrix(5, &mut rng);
        assert!(rel_diff(&a.apply(0.0, &rho).unwrap(), &b.apply(0.0, &rho).unwrap()) < 1e-12);
    }
}

#[test]
fn rwa_populations_decouple_from_coherences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let es = random_spectrum(4, &mut rng);
    let rwa = rwa_generator(&es, &CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1))).unwrap();
    let mut coh = zeros(4);
    coh[[0, 2]] = C64::new(0.3, 0.1);
    coh[[2, 0]] = C64::new(0.3, -0.1);
    let d = rwa.apply(0.0, &coh).unwrap();
    for i in 0..4 {
        assert!(d[[i, i]].norm() < 1e-15);
    }
}

#[test]
fn flat_spectrum_game_equals_redfield() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let es = random_spectrum(4, &mut rng);
    let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1));
    let (g0, s0) = (0.3, -0.2);
    let h = es.hamiltonian();
    let red = Superoperator::from_kernels(&es, &cs, &h, &|_b: &BathModel| {
        Ok(Box::new(move |w: f64, wp: f64| C64::new(0.5 * (g0 + g0), -(s0 - s0)) + C64::new(0.0, 0.0 * (w - wp))) as Box<dyn PairKernel>)
    })
    .unwrap();
    let game = Superoperator::from_kernels(&es, &cs, &h, &|_b: &BathModel| {
        Ok(Box::new(move |_w: f64, _wp: f64| C64::new((g0 * g0).sqrt(), 0.0)) as Box<dyn PairKernel>)
    })
    .unwrap();
    assert!(max_diff(&red.mat, &game.mat) < 1e-15);
}

#[test]
fn tdc_generators_approach_asymptotic_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let es = random_spectrum(4, &mut rng);
    let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1));
    let rho = random_density(4, &mut rng);
    for kind in [TdcKind::Redfield, TdcKind::Game] {
        let tdc = TdcGenerator::new(kind, &es, &cs).unwrap();
        assert!(tdc.is_time_dependent());
        let inf: Box<dyn Generator> = match kind {
            TdcKind::Redfield => Box::new(redfield_generator(&es, &cs, Horizon::Infinite).unwrap()),
            TdcKind::Game => Box::new(game_generator(&es, &cs, Horizon::Infinite).unwrap()),
        };
        let target = inf.apply(0.0, &rho).unwrap();
        let errs: Vec<f64> = [1.0, 10.0, 100.0, 1000.0]
            .iter()
            .map(|&t| max_diff(&tdc.apply(t, &rho).unwrap(), &target))
            .collect();
        // Γ_t approaches Γ with an oscillating algebraic tail
        assert!(errs.windows(2).all(|w| w[1] < w[0]), "{errs:?}");
        assert!(errs[3] < 0.05 * errs[0], "{errs:?}");
        // t = 0: no dissipation yet
        let zero = tdc.apply(0.0, &rho).unwrap();
        let free = commutator(&es.hamiltonian(), &rho) * C64::new(0.0, -1.0);
        assert!(max_diff(&zero, &free) < 1e-15);
    }
}

fn dcg_oracle(bath: &BathModel, w: f64, wp: f64, tau: f64) -> C64 {
    // composite Simpson over Ω ∈ [0, 80ω_c]; γ vanishes for Ω < 0
    let f = |x: f64| {
        let s1 = if x == w { 1.0 } else { ((x - w) * tau / 2.0).sin() / ((x - w) * tau / 2.0) };
        let s2 = if x == wp { 1.0 } else { ((x - wp) * tau / 2.0).sin() / ((x - wp) * tau / 2.0) };
        bath.spectral_density(x) * s1 * s2
    };
    let (a, b, n) = (0.0, 80.0 * bath.omega_c, 400_000usize);
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for k in 1..n {
        acc += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    let integral = acc * h / 3.0;
    C64::from_polar(1.0, -(w - wp) * tau / 2.0) * (tau / (2.0 * std::f64::consts::PI) * integral)
}

#[test]
fn dcg_coefficients_match_brute_force_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(25);
    let es = random_spectrum(5, &mut rng);
    let bath = ohmic(0.1);
    let tau = 2.5;
    let tuples: Vec<(usize, usize, usize, usize)> =
        (0..10).map(|_| (rng.gen_range(0..5), rng.gen_range(0..5), rng.gen_range(0..5), rng.gen_range(0..5))).collect();
    let got = dcg_coefficients(&es, &bath, tau, &tuples).unwrap();
    for (&(i, n, j, m), g) in tuples.iter().zip(got) {
        let o = dcg_oracle(&bath, es.bohr[[i, n]], es.bohr[[j, m]], tau);
        assert!((g - o).norm() < 1e-6, "{g} vs {o}");
    }
}

#[test]
fn dcg_kernel_superoperator_matches_tuple_route() {
    let mut rng = ChaCha8Rng::seed_from_u64(26);
    let es = random_spectrum(4, &mut rng);
    let a = random_hermitian(4, &mut rng);
    let bath = ohmic(0.1);
    let tau = 1.7;
    let cs = CouplingSet::single(a.clone(), bath);
    let dcg = dcg_generator(&es, &cs, tau).unwrap();
    let rho = random_density(4, &mut rng);
    // gain part assembled tuple by tuple
    let mut tuples = Vec::new();
    for n in 0..4 {
        for m in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    tuples.push((i, n, j, m));
                }
            }
        }
    }
    let coef = dcg_coefficients(&es, &bath, tau, &tuples).unwrap();
    let mut gain = zeros(4);
    for (&(i, n, j, m), k) in tuples.iter().zip(coef) {
        gain[[n, m]] += a[[i, n]].conj() * a[[j, m]] * k * rho[[i, j]];
    }
    let mut q = zeros(4);
    let mut hl = zeros(4);
    for n in 0..4 {
        for m in 0..4 {
            for i in 0..4 {
                let (g, hk) = qme::kernels::dcg_kernels(&bath, es.bohr[[m, i]], es.bohr[[n, i]], tau).unwrap();
                q[[n, m]] += a[[n, i]] * a[[m, i]].conj() * g;
                let (_, hk2) = qme::kernels::dcg_kernels(&bath, es.bohr[[n, i]], es.bohr[[m, i]], tau).unwrap();
                let _ = hk;
                hl[[n, m]] += a[[n, i]] * a[[m, i]].conj() * hk2;
            }
        }
    }
    let h = es.hamiltonian() + hl;
    let half = C64::new(0.5, 0.0);
    let expect = gain - (q.dot(&rho) + rho.dot(&q)) * half + commutator(&h, &rho) * C64::new(0.0, -1.0);
    assert!(rel_diff(&dcg.apply(0.0, &rho).unwrap(), &expect) < 1e-12);
    let out = dcg.apply(0.0, &rho).unwrap();
    assert!(trace(&out).norm() < 1e-10);
    assert!(hermiticity_defect(out.view()) < 1e-10);
}

#[test]
fn lamb_shift_rejects_bad_parameters() {
    let (es, c, bath) = jc3();
    let cs = CouplingSet::single(c, bath);
    assert!(lamb_shift(&cs, &es, LambVariant::Dcg(0.0)).is_err());
    assert!(lamb_shift(&cs, &es, LambVariant::Tdc(-1.0)).is_err());
    assert!(cg_redfield_generator(&es, &cs, -1.0).is_err());
    let wrong = EigenSystem::from_energies(Array1::from(vec![0.0, 1.0]));
    assert!(redfield_generator(&wrong, &cs, Horizon::Infinite).is_err());
}

fn all_generators(es: &EigenSystem, cs: &CouplingSet) -> Vec<(&'static str, Box<dyn Generator>)> {
    vec![
        ("redfield", Box::new(redfield_generator(es, cs, Horizon::Infinite).unwrap())),
        ("tdc-redfield", Box::new(TdcGenerator::new(TdcKind::Redfield, es, cs).unwrap())),
        ("game", Box::new(game_generator(es, cs, Horizon::Infinite).unwrap())),
        ("tdc-game", Box::new(TdcGenerator::new(TdcKind::Game, es, cs).unwrap())),
        ("rwa", Box::new(rwa_generator(es, cs).unwrap())),
        ("prwa", Box::new(prwa_generator(es, cs, 3).unwrap())),
        ("cg-redfield", Box::new(cg_redfield_generator(es, cs, 2.0).unwrap())),
        ("dcg", Box::new(dcg_generator(es, cs, 2.0).unwrap())),
        ("perlind", Box::new(perlind_generator(es, cs).unwrap())),
        ("perlind-rwa-ls", Box::new(perlind_rwa_shift_generator(es, cs).unwrap())),
        ("ule", Box::new(ule_generator(es, cs).unwrap())),
    ]
}

#[test]
fn every_generator_is_traceless_and_hermiticity_preserving() {
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let es = random_spectrum(4, &mut rng);
    let mut cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.1));
    cs.push(random_matrix(4, &mut rng), BathModel::new(BathKind::SuperOhmicExp, 0.05, 1.5).unwrap());
    let gens = all_generators(&es, &cs);
    for _ in 0..50 {
        let rho = random_density(4, &mut rng);
        for (name, g) in &gens {
            let d = g.apply(0.7, &rho).unwrap();
            assert!(trace(&d).norm() < 1e-10, "{name}");
            assert!(hermiticity_defect(d.view()) < 1e-10, "{name}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn redfield_forms_agree_on_random_systems(seed in 0u64..10_000, g in 0.0f64..0.5, non_hermitian in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let es = random_spectrum(3, &mut rng);
        let a = if non_hermitian { random_matrix(3, &mut rng) } else { random_hermitian(3, &mut rng) };
        let cs = CouplingSet::single(a, ohmic(g));
        let f = redfield_generator(&es, &cs, Horizon::Infinite).unwrap();
        let k = redfield_kernel_form(&es, &cs).unwrap();
        let rho = random_matrix(3, &mut rng);
        prop_assert!(rel_diff(&f.apply(0.0, &rho).unwrap(), &k.apply(0.0, &rho).unwrap()) < 1e-12);
    }

    #[test]
    fn lindblad_forms_preserve_trace(seed in 0u64..10_000, bins in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let es = random_spectrum(4, &mut rng);
        let cs = CouplingSet::single(random_hermitian(4, &mut rng), ohmic(0.2));
        let rho = random_hermitian(4, &mut rng);
        for g in [game_generator(&es, &cs, Horizon::Infinite).unwrap(), prwa_generator(&es, &cs, bins).unwrap()] {
            prop_assert!(hermiticity_defect(g.h_eff().view()) < 1e-10);
            prop_assert!(trace(&g.apply(0.0, &rho).unwrap()).norm() < 1e-10);
        }
    }
}
