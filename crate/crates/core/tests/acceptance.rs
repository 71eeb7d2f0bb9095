//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Tolerances and runtime budgets are pinned below. The process exits with
//! status 0 so that the report is always produced; set
//! `ACCEPTANCE_STRICT=1` to turn any FAIL into a non-zero exit.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rustfft::FftPlanner;

use tdscf::classical::{mixed_step, Ensemble, PhaseParticle, Side};
use tdscf::harness::sweep::fit_order;
use tdscf::harness::{converge, limit_compare, preset, ExperimentConfig, ReferencePolicy, Vary};
use tdscf::observables::{current_density, l2_error, position_momentum, wigner};
use tdscf::potential::SeparablePotential;
use tdscf::ssp2::{run_tdscf, TdscfConfig};
use tdscf::svsp2::{run_ehrenfest, EhrenfestState, Svsp2};
use tdscf::{Grid1D, PotentialSpec, Result, WaveField};

const MASS_TOL: f64 = 1e-12;
const ENERGY_RATIO: (f64, f64) = (3.0, 5.0);
const ORDER_RANGE: (f64, f64) = (1.7, 2.3);
const FIT_RESIDUAL_MAX: f64 = 0.1;
const SPECTRAL_FACTOR: f64 = 100.0;
const SPECTRAL_FLOOR: f64 = 1e-10;
const UNRESOLVED_MIN: f64 = 0.1;
const EPS_FLATNESS: f64 = 3.0;
const WF_OVER_RHO: f64 = 10.0;
const DECOUPLING_TOL: f64 = 1e-10;
const FREE_TOL: f64 = 1e-10;
const MIXED_TOL: f64 = 1e-12;
const MARGINAL_TOL: f64 = 1e-8;
const MOMENT_TOL: f64 = 1e-6;
const BRUTE_TOL: f64 = 1e-10;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { pass, detail })
}

fn within(v: f64, (lo, hi): (f64, f64)) -> bool {
    (lo..=hi).contains(&v)
}

// ---------------------------------------------------------------- oracles

/// Exact free flight `exp(i scale t d^2/dx^2 / 2)` by a direct FFT.
fn free_flight(values: &[Complex64], length: f64, scale: f64, t: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut buf = values.to_vec();
    fwd.process(&mut buf);
    for (i, c) in buf.iter_mut().enumerate() {
        let l = if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
        let mu = 2.0 * PI * l / length;
        *c *= Complex64::from_polar(1.0 / n as f64, -scale * t * mu * mu / 2.0);
    }
    inv.process(&mut buf);
    buf
}

/// Single-equation Strang splitting with a fixed potential.
fn single_split_step(init: &[Complex64], grid: &Grid1D, scale: f64, v: &[f64], dt: f64, steps: usize) -> Vec<f64> {
    let mut f = init.to_vec();
    for _ in 0..steps {
        f = free_flight(&f, grid.length(), scale, dt / 2.0);
        for (z, vj) in f.iter_mut().zip(v) {
            *z *= Complex64::from_polar(1.0, -dt * vj / scale);
        }
        f = free_flight(&f, grid.length(), scale, dt / 2.0);
    }
    f.iter().map(|z| z.norm_sqr()).collect()
}

/// `exp(m)` for a 4x4 matrix by scaled Taylor series and squaring.
fn expm4(m: [[f64; 4]; 4]) -> [[f64; 4]; 4] {
    let mul = |a: &[[f64; 4]; 4], b: &[[f64; 4]; 4]| {
        let mut c = [[0.0; 4]; 4];
        for i in 0..4 {
            for j in 0..4 {
                c[i][j] = (0..4).map(|k| a[i][k] * b[k][j]).sum();
            }
        }
        c
    };
    let squarings = 6;
    let s = 0.5f64.powi(squarings);
    let a: [[f64; 4]; 4] = m.map(|r| r.map(|x| x * s));
    let mut sum = [[0.0; 4]; 4];
    let mut term = [[0.0; 4]; 4];
    for i in 0..4 {
        sum[i][i] = 1.0;
        term[i][i] = 1.0;
    }
    for k in 1..30 {
        term = mul(&term, &a).map(|r| r.map(|x| x / k as f64));
        for i in 0..4 {
            for j in 0..4 {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum);
    }
    sum
}

fn brute_wigner(f: &WaveField) -> Vec<f64> {
    let g = f.grid();
    let n = g.n() as i64;
    let dz = 2.0 * g.dx() / f.scale();
    let dxi = PI * f.scale() / g.length();
    let mut out = Vec::new();
    for j in 0..n {
        for k in -n / 2..n / 2 {
            let mut s = Complex64::new(0.0, 0.0);
            for m in -n / 2..n / 2 {
                let lo = (j - m).rem_euclid(n) as usize;
                let hi = (j + m).rem_euclid(n) as usize;
                s += f.values[lo] * f.values[hi].conj() * Complex64::from_polar(1.0, m as f64 * dz * k as f64 * dxi);
            }
            out.push(s.re * dz / (2.0 * PI));
        }
    }
    out
}

fn sci(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.2e}")).collect::<Vec<_>>().join(", ")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

// ------------------------------------------------------------- criteria

fn example1_small() -> Result<ExperimentConfig> {
    let mut c = preset("example1", false)?;
    c.epsilon = 1.0 / 64.0;
    c.delta = 1.0;
    c.kx = 9;
    c.ky = 9;
    c.dt = 0.4 / 256.0;
    c.t_final = 0.4;
    Ok(c)
}

fn mass_conservation() -> Result<Verdict> {
    let mut c = example1_small()?;
    c.record_every = 1;
    let run = run_tdscf(&c.tdscf()?)?;
    let d1 = run.records.iter().map(|r| (r.m1 - 1.0).abs()).fold(0.0, f64::max);
    let d2 = run.records.iter().map(|r| (r.m2 - 1.0).abs()).fold(0.0, f64::max);
    verdict(
        d1 <= MASS_TOL && d2 <= MASS_TOL,
        format!("max |m1-1| = {d1:.2e}, max |m2-1| = {d2:.2e} (tol {MASS_TOL:.0e})"),
    )
}

fn energy_drift() -> Result<Verdict> {
    let mut drifts = Vec::new();
    for steps in [256.0, 512.0, 1024.0] {
        let mut c = example1_small()?;
        c.dt = 0.4 / steps;
        c.record_every = 1;
        let run = run_tdscf(&c.tdscf()?)?;
        let e0 = run.records[0].energy;
        drifts.push(run.records.iter().map(|r| (r.energy - e0).abs()).fold(0.0, f64::max));
    }
    let ratios = [drifts[0] / drifts[1], drifts[1] / drifts[2]];
    verdict(
        ratios.iter().all(|r| within(*r, ENERGY_RATIO)),
        format!("drifts [{}], halving ratios {ratios:.3?} (want {ENERGY_RATIO:?})", sci(&drifts)),
    )
}

fn dt_order() -> Result<Verdict> {
    let mut c = preset("example3", false)?;
    c.epsilon = 1.0 / 64.0;
    c.delta = 1.0 / 64.0;
    c.kx = 10;
    c.ky = 10;
    let mut reference = c.clone();
    reference.dt = 0.4 / 4096.0;
    let values: Vec<f64> = [32.0, 64.0, 128.0, 256.0, 512.0].iter().map(|s| 0.4 / s).collect();
    let r = converge(&c, Vary::Dt, &values, &ReferencePolicy::Config(Box::new(reference)), None)?;
    let (wf, rho) = (r.fit_wf.expect("fit"), r.fit_rho.expect("fit"));
    let ok = |f: tdscf::harness::OrderFit| within(f.order, ORDER_RANGE) && f.residual < FIT_RESIDUAL_MAX;
    verdict(
        ok(wf) && ok(rho),
        format!(
            "order wf {:.3} (res {:.3}), rho {:.3} (res {:.3})",
            wf.order, wf.residual, rho.order, rho.residual
        ),
    )
}

fn spectral_dx() -> Result<Verdict> {
    let c = example1_small()?;
    let eps = c.epsilon;
    let values: Vec<f64> = [16.0, 32.0, 64.0, 128.0, 256.0, 512.0].iter().map(|n| 2.0 * PI / n).collect();
    let r = converge(&c, Vary::Dy, &values, &ReferencePolicy::Refined, None)?;
    let mut ok = true;
    let mut notes = Vec::new();
    for w in r.rows.windows(2) {
        let (coarse, fine) = (&w[0], &w[1]);
        if coarse.param <= 2.0 * PI * eps * (1.0 + 1e-12) {
            if coarse.err_rho > SPECTRAL_FLOOR {
                let factor = coarse.err_rho / fine.err_rho;
                ok &= factor > SPECTRAL_FACTOR;
                notes.push(format!("x{factor:.3e} from n={:.0}", 2.0 * PI / coarse.param));
            }
        } else {
            ok &= coarse.err_rho >= UNRESOLVED_MIN && coarse.err_rho.is_finite();
        }
    }
    let unresolved: Vec<String> = r
        .rows
        .iter()
        .filter(|row| row.param > 2.0 * PI * eps * (1.0 + 1e-12))
        .map(|row| format!("{:.2}", row.err_rho))
        .collect();
    verdict(
        ok,
        format!(
            "resolved halvings {} (want > {SPECTRAL_FACTOR}); unresolved errors [{}]",
            notes.join(", "),
            unresolved.join(", ")
        ),
    )
}

fn eps_independence() -> Result<Verdict> {
    let values = [1.0 / 64.0, 1.0 / 128.0, 1.0 / 256.0];
    let spread = |v: &[f64]| {
        let max = v.iter().copied().fold(0.0, f64::max);
        let min = v.iter().copied().fold(f64::INFINITY, f64::min);
        max / min
    };
    let mut detail = Vec::new();
    let mut ok = true;
    for name in ["example1", "example4"] {
        let mut c = preset(name, false)?;
        c.dt = 0.4 / 8.0;
        let r = converge(&c, Vary::Epsilon, &values, &ReferencePolicy::Refined, None)?;
        let rho: Vec<f64> = r.rows.iter().map(|x| x.err_rho).collect();
        let last = r.rows.last().expect("rows");
        let (s, gap) = (spread(&rho), last.err_wf / last.err_rho);
        ok &= s < EPS_FLATNESS && gap >= WF_OVER_RHO;
        let mut line = format!("{name}: rho spread {s:.3}, wf/rho at 1/256 = {gap:.1}");
        if let Some(cl) = r.rows.iter().map(|x| x.err_classical).collect::<Option<Vec<f64>>>() {
            let sc = spread(&cl);
            ok &= sc < EPS_FLATNESS;
            line += &format!(", (y,eta) spread {sc:.3}");
        }
        detail.push(line);
    }
    verdict(ok, detail.join("; "))
}

fn decoupling() -> Result<Verdict> {
    let c = example1_small()?;
    let (xg, yg) = (c.x_grid()?, c.y_grid()?);
    let sep = SeparablePotential::from_fns(&xg, f64::cos, &yg, f64::sin)?;
    let (psi0, phi0) = (c.psi_data()?, c.phi_data()?);
    let cfg = TdscfConfig {
        potential: PotentialSpec::Separable(sep),
        psi_init: psi0.clone(),
        phi_init: phi0.clone(),
        dt: c.dt,
        t_final: c.t_final,
        record_every: 0,
        options: Default::default(),
    };
    let fin = run_tdscf(&cfg)?.final_state;
    let steps = (c.t_final / c.dt).round() as usize;
    let v1: Vec<f64> = xg.nodes().into_iter().map(f64::cos).collect();
    let v2: Vec<f64> = yg.nodes().into_iter().map(f64::sin).collect();
    let rho_x = single_split_step(&psi0.to_field()?.values, &xg, c.delta, &v1, c.dt, steps);
    let rho_y = single_split_step(&phi0.to_field()?.values, &yg, c.epsilon, &v2, c.dt, steps);
    let ex = l2_error(&fin.psi.density(), &rho_x, &xg)?;
    let ey = l2_error(&fin.phi.density(), &rho_y, &yg)?;
    verdict(
        ex <= DECOUPLING_TOL && ey <= DECOUPLING_TOL,
        format!("l2 density error psi {ex:.2e}, phi {ey:.2e} (tol {DECOUPLING_TOL:.0e})"),
    )
}

fn constant_potential() -> Result<Verdict> {
    let mut c = preset("example2", false)?;
    c.epsilon = 1.0 / 512.0;
    c.delta = 1.0 / 512.0;
    c.kx = 12;
    c.ky = 12;
    let (xg, yg) = (c.x_grid()?, c.y_grid()?);
    let exact_x: Vec<f64> = free_flight(&c.psi_data()?.to_field()?.values, xg.length(), c.delta, c.t_final)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let exact_y: Vec<f64> = free_flight(&c.phi_data()?.to_field()?.values, yg.length(), c.epsilon, c.t_final)
        .iter()
        .map(|z| z.norm_sqr())
        .collect();
    let mut worst: f64 = 0.0;
    for steps in [1.0, 7.0, 64.0] {
        c.dt = c.t_final / steps;
        let fin = run_tdscf(&c.tdscf()?)?.final_state;
        worst = worst
            .max(l2_error(&fin.psi.density(), &exact_x, &xg)?)
            .max(l2_error(&fin.phi.density(), &exact_y, &yg)?);
    }
    verdict(
        worst <= FREE_TOL,
        format!("max l2 density error over dt = T, T/7, T/64: {worst:.2e} (tol {FREE_TOL:.0e})"),
    )
}

fn ehrenfest_oracle() -> Result<Verdict> {
    let c = preset("example4", false)?;
    let psi0 = c.psi_data()?.to_field()?;
    let (x0, p0) = position_momentum(&psi0);
    let t = c.t_final;
    // d/dt (X, P, y, eta) = (P, -(X + y), eta, -(X + y))
    let a = [
        [0.0, t, 0.0, 0.0],
        [-t, 0.0, -t, 0.0],
        [0.0, 0.0, 0.0, t],
        [-t, 0.0, -t, 0.0],
    ];
    let e = expm4(a);
    let s0 = [x0, p0, c.y0, c.eta0];
    let exact: Vec<f64> = (0..4).map(|i| (0..4).map(|j| e[i][j] * s0[j]).sum()).collect();

    let values: Vec<f64> = [8.0, 16.0, 32.0, 64.0, 128.0].iter().map(|s| t / s).collect();
    let mut errors = Vec::new();
    for dt in &values {
        let mut cfg = c.ehrenfest()?;
        cfg.dt = *dt;
        let fin = run_ehrenfest(&cfg)?.final_state;
        let (x, p) = position_momentum(&fin.psi);
        let got = [x, p, fin.y, fin.eta];
        errors.push(got.iter().zip(&exact).map(|(g, e)| (g - e).abs()).fold(0.0, f64::max));
    }
    let fit = fit_order(&values, &errors).expect("fit");
    verdict(
        within(fit.order, ORDER_RANGE) && fit.residual < FIT_RESIDUAL_MAX,
        format!(
            "errors [{}], order {:.3} (res {:.3})",
            sci(&errors),
            fit.order,
            fit.residual
        ),
    )
}

fn mixed_reduction() -> Result<Verdict> {
    let c = preset("example4", false)?;
    let v = c.potential_spec()?;
    let psi0 = c.psi_data()?.to_field()?;
    let solver = Svsp2::new(v.clone());
    let mut ehr = EhrenfestState::new(psi0.clone(), c.y0, c.eta0);
    let mut psi = psi0;
    let mut ens = Ensemble::new(
        vec![PhaseParticle {
            q: c.y0,
            p: c.eta0,
            w: 1.0,
        }],
        Side::Y,
    )?;
    let steps = (c.t_final / c.dt).round() as usize;
    let (mut d_rho, mut d_y, mut d_eta): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..steps {
        solver.strang_step(&mut ehr, c.dt)?;
        mixed_step(&mut psi, &mut ens, &v, c.dt)?;
        let p = ens.particles()[0];
        d_rho = d_rho.max(max_abs_diff(&ehr.psi.density(), &psi.density()));
        d_y = d_y.max((p.q - ehr.y).abs());
        d_eta = d_eta.max((p.p - ehr.eta).abs());
    }
    verdict(
        d_rho <= MIXED_TOL && d_y <= MIXED_TOL && d_eta <= MIXED_TOL,
        format!("max over {steps} steps: density {d_rho:.2e}, y {d_y:.2e}, eta {d_eta:.2e} (tol {MIXED_TOL:.0e})"),
    )
}

fn classical_limit() -> Result<Verdict> {
    let base = preset("example2", false)?;
    let rows = limit_compare(&base, &[1.0 / 256.0, 1.0 / 512.0])?;
    let (a, b) = (&rows[0], &rows[1]);
    let pairs = [
        (a.rho_psi_fine, b.rho_psi_fine),
        (a.rho_phi_fine, b.rho_phi_fine),
        (a.rho_psi_coarse, b.rho_psi_coarse),
        (a.rho_phi_coarse, b.rho_phi_coarse),
    ];
    let decreasing = pairs.iter().all(|(x, y)| y < x);
    let separated = rows.iter().all(|r| {
        let d = [r.rho_psi_fine, r.rho_phi_fine, r.rho_psi_coarse, r.rho_phi_coarse]
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        r.quantum_gap < 0.5 * d
    });
    verdict(
        decreasing && separated,
        format!(
            "L1 psi {:.4} -> {:.4}, phi {:.4} -> {:.4} (dt ~ eps); psi {:.4} -> {:.4}, phi {:.4} -> {:.4} (dt = T/64); quantum gaps {:.1e}, {:.1e}",
            a.rho_psi_fine,
            b.rho_psi_fine,
            a.rho_phi_fine,
            b.rho_phi_fine,
            a.rho_psi_coarse,
            b.rho_psi_coarse,
            a.rho_phi_coarse,
            b.rho_phi_coarse,
            a.quantum_gap,
            b.quantum_gap
        ),
    )
}

fn random_field(rng: &mut StdRng, grid: &Grid1D, scale: f64, band: i64) -> Result<WaveField> {
    let coeffs: Vec<(i64, Complex64)> = (-band..=band)
        .map(|l| (l, Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
        .collect();
    let mut f = WaveField::from_fn(grid, scale, |x| {
        coeffs
            .iter()
            .map(|(l, c)| c * Complex64::from_polar(1.0, 2.0 * PI * *l as f64 * (x - grid.a()) / grid.length()))
            .sum()
    })?;
    f.normalize()?;
    Ok(f)
}

fn wigner_identities() -> Result<Verdict> {
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let grid = Grid1D::new(-PI, PI, 8)?;
    let (mut marg, mut moment): (f64, f64) = (0.0, 0.0);
    for _ in 0..10 {
        let scale = rng.gen_range(1.0 / 64.0..1.0 / 4.0);
        let f = random_field(&mut rng, &grid, scale, 30)?;
        let w = wigner(&f);
        marg = marg.max(max_abs_diff(&w.position_marginal(), &f.density()));
        moment = moment.max(max_abs_diff(&w.first_moment(), &current_density(&f)));
    }
    let small = Grid1D::new(-PI, PI, 5)?;
    let f = random_field(&mut rng, &small, 0.3, 6)?;
    let brute = max_abs_diff(&wigner(&f).values, &brute_wigner(&f));
    verdict(
        marg <= MARGINAL_TOL && moment <= MOMENT_TOL && brute <= BRUTE_TOL,
        format!("marginal {marg:.2e}, first moment {moment:.2e}, brute force n=32 {brute:.2e}"),
    )
}

type Criterion = (u32, &'static str, u64, fn() -> Result<Verdict>);

const CRITERIA: [Criterion; 11] = [
    (1, "mass conservation", 5, mass_conservation),
    (2, "energy drift under dt halving", 30, energy_drift),
    (3, "second-order convergence in dt", 120, dt_order),
    (4, "spectral convergence in dx", 120, spectral_dx),
    (5, "epsilon-independent time steps", 300, eps_independence),
    (6, "decoupled potential oracle", 10, decoupling),
    (7, "constant potential exactness", 10, constant_potential),
    (8, "Ehrenfest quadratic oracle", 60, ehrenfest_oracle),
    (9, "mixed step reduces to Ehrenfest", 30, mixed_reduction),
    (10, "classical limit past caustics", 300, classical_limit),
    (11, "Wigner moment identities", 30, wigner_identities),
];

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, budget, check) in CRITERIA {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed < Duration::from_secs(budget);
        let (pass, detail) = match outcome {
            Ok(v) => (v.pass && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !pass {
            failed += 1;
        }
        println!(
            "{} criterion {id:>2} {name}: {detail} [{:.2} s, budget {budget} s]",
            if pass { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("acceptance: {}/{ran} criteria passed", ran - failed);
    if failed > 0 && std::env::var_os("ACCEPTANCE_STRICT").is_some() {
        std::process::exit(1);
    }
}
