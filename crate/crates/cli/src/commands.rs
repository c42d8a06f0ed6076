//! The experiments behind each subcommand.

use ergolab::cones::{
    bisect_perturbation, check_joint_cone, check_joint_cone_with_grid, check_perturbed_cones, eigen_analysis,
    search_cone_certificate, Eigenvalues, ProjectiveCone,
};
use ergolab::lyapunov::{
    default_epsilon0, mixed_projective_exponent, nonrandomness_score, slope_check, stopping_time_closed_form,
    stopping_times, top_exponent_seeds, NormLogData, OseledecFrame,
};
use ergolab::stationary::{
    atom_detect, classify, fourier_spectrum, sample_stationary_sharded, stationarity_residual, EmpiricalMeasure,
    Evidence,
};
use ergolab::unstable::{
    affine_parameter, cantor_sample, conditional_slice, dimension_estimate, unstable_curve, Slice,
};
use ergolab::{sample_word, DrivingMeasure, MapSpec, TorusPoint};

use crate::config::{real, with_epsilon, ConeExpectation, Config, DimensionSource, SliceConfig};
use crate::output::{num, Check, Plot, RunDir};

#[derive(Debug)]
pub struct CmdError(pub String);

impl From<ergolab::Error> for CmdError {
    fn from(e: ergolab::Error) -> Self {
        CmdError(e.to_string())
    }
}

impl From<std::io::Error> for CmdError {
    fn from(e: std::io::Error) -> Self {
        CmdError(format!("writing output: {e}"))
    }
}

impl From<crate::config::ConfigError> for CmdError {
    fn from(e: crate::config::ConfigError) -> Self {
        CmdError(e.0)
    }
}

/// Metrics and checks produced by a command.
#[derive(Default)]
pub struct Outcome {
    pub metrics: Vec<(String, f64)>,
    pub checks: Vec<Check>,
}

impl Outcome {
    fn metric(&mut self, name: &str, v: f64) {
        self.metrics.push((name.into(), v));
    }
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(Check::new(name, pass, detail));
    }
}

type CmdResult = Result<Outcome, CmdError>;

pub fn exponents(cfg: &Config, run: &RunDir) -> CmdResult {
    let c = &cfg.exponents;
    let family = cfg.family()?;
    let nu = cfg.measure()?;
    let x0 = cfg.start_point()?;
    let mut out = Outcome::default();

    let (runs, merged) = top_exponent_seeds(&family, &nu, x0, c.steps, &cfg.seeds)?;
    let mut rows = Vec::new();
    let mut worst_identity = 0.0f64;
    for (seed, e) in cfg.seeds.iter().zip(&runs) {
        worst_identity = worst_identity.max((e.lambda_u + e.lambda_s - e.mean_log_det).abs());
        rows.push(vec![
            seed.to_string(),
            num(e.lambda_u),
            num(e.lambda_s),
            num(e.stderr_u),
            num(e.mean_log_det),
            e.n_steps.to_string(),
        ]);
    }
    rows.push(vec![
        "merged".into(),
        num(merged.lambda_u),
        num(merged.lambda_s),
        num(merged.stderr_u),
        num(merged.mean_log_det),
        merged.n_steps.to_string(),
    ]);
    run.write_csv("exponents.csv", &["seed", "lambda_u", "lambda_s", "stderr_u", "mean_log_det", "n_steps"], &rows)?;
    out.metric("lambda_u", merged.lambda_u);
    out.metric("lambda_s", merged.lambda_s);
    out.metric("stderr_u", merged.stderr_u);
    out.check(
        "determinant_identity",
        worst_identity <= 1e-9,
        format!("max |λu + λs − mean log|det|| = {worst_identity:.2e}"),
    );
    if let Some(expect) = c.expect_lambda_u {
        let err = (merged.lambda_u - expect).abs();
        out.check(
            "expected_lambda_u",
            err <= c.tolerance,
            format!("|λu − {expect}| = {err:.2e} (tolerance {:.1e})", c.tolerance),
        );
    }

    if !c.tv_shifts.is_empty() {
        let base: Vec<(usize, f64)> = nu.atoms().to_vec();
        if base.len() < 2 {
            return Err(CmdError("tv_shifts need at least two weighted maps".into()));
        }
        let mut scan = Vec::new();
        for &shift in &c.tv_shifts {
            let mut atoms = base.clone();
            let last = atoms.len() - 1;
            atoms[0].1 += shift;
            atoms[last].1 -= shift;
            let shifted = DrivingMeasure::new(atoms)?;
            let (_, m) = top_exponent_seeds(&family, &shifted, x0, c.steps, &cfg.seeds)?;
            let positive = m.lambda_u - 3.0 * m.stderr_u > 0.0;
            out.check(
                &format!("positive_at_shift_{shift}"),
                positive,
                format!("λu = {:.5} ± {:.1e}", m.lambda_u, m.stderr_u),
            );
            scan.push(vec![num(shift), num(m.lambda_u), num(m.stderr_u)]);
        }
        run.write_csv("tv_scan.csv", &["shift", "lambda_u", "stderr_u"], &scan)?;
    }
    Ok(out)
}

pub fn cones(cfg: &Config, run: &RunDir) -> CmdResult {
    let c = &cfg.cones;
    let family = cfg.family()?;
    let mats: Vec<_> = family.iter().map(|f| f.linear_part().to_real()).collect();
    let mut out = Outcome::default();

    let mut eig = Vec::new();
    for (i, f) in family.iter().enumerate() {
        let m = f.linear_part();
        let r = eigen_analysis(&m);
        let (l1, l2) = match r.eigenvalues {
            Eigenvalues::Real(a, b) => (num(a), num(b)),
            Eigenvalues::Complex { re, im } => (format!("{re:?}+{im:?}i"), format!("{re:?}-{im:?}i")),
        };
        eig.push(vec![
            i.to_string(),
            m.to_string(),
            m.trace().to_string(),
            m.det().to_string(),
            r.is_hyperbolic.to_string(),
            l1,
            l2,
        ]);
    }
    run.write_csv("eigen.csv", &["map", "matrix", "trace", "det", "hyperbolic", "lambda_1", "lambda_2"], &eig)?;

    let cert = search_cone_certificate(&mats);
    let got = match &cert {
        Some(cert) => {
            run.write_json("certificate.json", cert)?;
            out.metric("kappa", cert.kappa);
            out.metric("margin", cert.margin);
            let fine = check_joint_cone_with_grid(&mats, cert.cone_u, cert.cone_s, c.grid * 10);
            let (ok, detail) = match &fine {
                Ok(f) => (f.kappa > 1.0, format!("κ = {:.4} at grid {}", f.kappa, c.grid * 10)),
                Err(e) => (false, format!("fails at grid {}: {e:?}", c.grid * 10)),
            };
            out.check("refinement", ok, detail);
            ConeExpectation::Certificate
        }
        None => {
            // report why the standard quadrant cones fail
            let q = std::f64::consts::FRAC_PI_4;
            let cu = ProjectiveCone::new(q, q * 0.999).expect("valid cone");
            let cs = ProjectiveCone::new(3.0 * q, q * 0.999).expect("valid cone");
            let failure = check_joint_cone(&mats, cu, cs).err();
            #[derive(serde::Serialize)]
            struct Report {
                certificate: Option<()>,
                quadrant_cone_failure: Option<ergolab::cones::ConeFailure>,
            }
            run.write_json("failure.json", &Report { certificate: None, quadrant_cone_failure: failure })?;
            ConeExpectation::Failure
        }
    };
    if let Some(expect) = c.expect {
        out.check("expected_outcome", expect == got, format!("expected {expect:?}, got {got:?}"));
    }

    if let (Some(b), Some(cert)) = (&c.bisect, &cert) {
        let family_at = |eps: f64| family.iter().map(|f| with_epsilon(f, eps)).collect::<Option<Vec<MapSpec>>>();
        let mut rows = Vec::new();
        for i in 0..b.scan_points.max(2) {
            let eps = b.lo + (b.hi - b.lo) * i as f64 / (b.scan_points.max(2) - 1) as f64;
            match family_at(eps) {
                Some(fam) => {
                    let r = check_perturbed_cones(&fam, cert, b.grid);
                    rows.push(vec![
                        num(eps),
                        "valid".into(),
                        r.pass.to_string(),
                        num(r.worst_margin),
                        num(r.worst_kappa),
                    ]);
                }
                None => rows.push(vec![num(eps), "invalid_spec".into(), "false".into(), String::new(), String::new()]),
            }
        }
        run.write_csv("epsilon_scan.csv", &["epsilon", "spec", "pass", "worst_margin", "worst_kappa"], &rows)?;
        match bisect_perturbation(family_at, cert, b.grid, b.lo, b.hi, b.iterations) {
            Some((lo, hi, r)) => {
                run.write_csv(
                    "bisection.csv",
                    &["epsilon_pass", "epsilon_fail", "fail_margin", "fail_kappa"],
                    &[vec![num(lo), num(hi), num(r.worst_margin), num(r.worst_kappa)]],
                )?;
                out.metric("epsilon_pass", lo);
                out.metric("epsilon_fail", hi);
                out.check("bisection", true, format!("cones persist up to ε = {lo:.4e}, fail by {hi:.4e}"));
            }
            None => out.check("bisection", false, "the perturbed check fails at the lower end".into()),
        }
    }
    Ok(out)
}

fn slice_for(
    cfg: &Config,
    family: &[MapSpec],
    nu: &DrivingMeasure,
    mu: &EmpiricalMeasure,
    s: &SliceConfig,
    run: &RunDir,
) -> Result<Slice, CmdError> {
    let base = match s.base {
        Some([x, y]) => TorusPoint::new(x, y),
        None => cfg.start_point()?,
    };
    let word = sample_word(nu, s.at + 1, cfg.seeds[0] ^ 0x5eed);
    let curve = unstable_curve(family, &word, s.at, base, s.radius, s.n_back, s.points)?;
    let chart = affine_parameter(&curve, s.k)?;
    let rows: Vec<Vec<String>> = (0..curve.len())
        .map(|i| {
            let p = curve.points[i];
            vec![i.to_string(), num(p.x()), num(p.y()), num(chart.rho[i]), num(chart.h[i])]
        })
        .collect();
    run.write_csv("curve.csv", &["arc_index", "x", "y", "rho", "H"], &rows)?;
    Ok(conditional_slice(mu, &curve, &chart, s.tube)?)
}

pub fn trichotomy(cfg: &Config, run: &RunDir) -> CmdResult {
    let c = &cfg.trichotomy;
    let family = cfg.family()?;
    let nu = cfg.measure()?;
    let start = cfg.start()?;
    let x0 = cfg.start_point()?;
    let mut out = Outcome::default();

    let mu = sample_stationary_sharded(&family, &nu, start, c.burn_in, c.samples, &cfg.seeds)?;
    let spectrum = fourier_spectrum(&mu, c.fourier_cutoff);
    let atoms = atom_detect(&mu, c.atom_radius, c.atom_threshold)?;
    let (_, est) = top_exponent_seeds(&family, &nu, x0, c.exponent_steps, &cfg.seeds)?;
    // too many unreliable stable directions means no evidence either way
    let nonrandom = match nonrandomness_score(&family, &nu, x0, c.nonrandom_words, c.nonrandom_horizon, cfg.seeds[0]) {
        Ok(r) => Some(r.score),
        Err(ergolab::Error::Unreliable(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let residual = stationarity_residual(&mu, &family, &nu, ergolab::stationary::DEFAULT_GRID)?;
    let dim_u = match &c.slice {
        Some(s) => {
            let slice = slice_for(cfg, &family, &nu, &mu, s, run)?;
            let d = dimension_estimate(&slice.coords)?;
            out.metric("slice_points", slice.count as f64);
            Some(d.dim)
        }
        None => None,
    };
    let evidence = Evidence {
        exponents: Some(est),
        atoms: Some(atoms.clone()),
        fourier: Some(spectrum.clone()),
        nonrandomness: nonrandom,
        dim_u,
    };
    let verdict = classify(&evidence, &c.thresholds);
    run.write_json("verdict.json", &verdict)?;

    let rows: Vec<Vec<String>> =
        spectrum.magnitudes.iter().map(|(k, m)| vec![k[0].to_string(), k[1].to_string(), num(*m)]).collect();
    run.write_csv("fourier.csv", &["k1", "k2", "magnitude"], &rows)?;
    let rows: Vec<Vec<String>> = atoms
        .clusters
        .iter()
        .map(|a| vec![num(a.center.x()), num(a.center.y()), a.count.to_string(), num(a.mass), num(a.radius)])
        .collect();
    run.write_csv("atoms.csv", &["x", "y", "count", "mass", "radius"], &rows)?;

    let flat = c.thresholds.fourier_factor / (mu.len() as f64).sqrt();
    let kmax = c.fourier_cutoff as f64;
    let pts: Vec<(f64, f64)> =
        spectrum.magnitudes.iter().map(|(k, m)| (k[0].abs().max(k[1].abs()) as f64, *m)).collect();
    let plot = Plot::new("Fourier magnitudes of the empirical measure", "|k|_inf", "|mu^(k)|")
        .scatter("|mu^(k)|", pts)
        .line("flatness threshold", vec![(1.0, flat), (kmax, flat)]);
    run.write_svg("fourier.svg", &plot)?;
    let step = (mu.len() / c.plot_points.max(1)).max(1);
    let sample_pts: Vec<(f64, f64)> = mu.samples().iter().step_by(step).map(|p| (p.x(), p.y())).collect();
    run.write_svg("samples.svg", &Plot::new("Stationary samples", "x", "y").scatter("samples", sample_pts))?;

    out.metric("max_fourier", spectrum.max_magnitude());
    out.metric("clusters", atoms.clusters.len() as f64);
    out.metric("residual_mass", atoms.residual_mass);
    out.metric("lambda_u", est.lambda_u);
    if let Some(s) = nonrandom {
        out.metric("nonrandomness", s);
    }
    out.metric("stationarity_l1", residual.l1);
    if let Some(d) = dim_u {
        out.metric("dim_u", d);
    }
    if let Some(expect) = &c.expect {
        let got = format!("{:?}", verdict.tag);
        out.check(
            "expected_verdict",
            got.eq_ignore_ascii_case(expect),
            format!("expected {expect}, got {got}; {}", verdict.reasons.join("; ")),
        );
    }
    Ok(out)
}

pub fn stopping_times_cmd(cfg: &Config, run: &RunDir) -> CmdResult {
    let c = &cfg.stopping_times;
    let family = cfg.family()?;
    let nu = cfg.measure()?;
    let x0 = cfg.start_point()?;
    let mut out = Outcome::default();
    if c.deltas.is_empty() {
        return Err(CmdError("stopping_times.deltas is empty".into()));
    }
    let (_, est) = top_exponent_seeds(&family, &nu, x0, c.exponent_steps, &cfg.seeds)?;
    let eps0 = c.epsilon0.unwrap_or_else(|| default_epsilon0(est.lambda_u, est.lambda_s));
    let span_fwd = c.m_max.max(c.j_max) + c.window + 50;
    let span_back = c.window + 10;
    let warm = 100;
    let at = span_back + warm;
    let word = sample_word(&nu, at + span_fwd + warm + 1, cfg.seeds[0]);
    let frame = OseledecFrame::new(&family, &word, at, x0, est.lambda_u, est.lambda_s, span_back, span_fwd, warm)?;
    let data = NormLogData::from_frame(&frame, c.m_max, c.j_max, c.window, eps0)?;

    let mut rows = Vec::new();
    let mut tau0 = Vec::new();
    let mut all_pass = true;
    let mut detail = Vec::new();
    for &delta in &c.deltas {
        let t = stopping_times(&data, delta, c.epsilon, 0..=c.m_max)?;
        let rep = slope_check(&t, est.lambda_u, est.lambda_s, eps0);
        all_pass &= rep.pass;
        detail.push(format!(
            "δ={delta:e}: steps [{}, {}] vs [{:.3}, {:.3}]",
            rep.min_step, rep.max_step, rep.lower, rep.upper
        ));
        tau0.push(t.tau[0]);
        for k in 0..t.m.len() {
            rows.push(vec![num(delta), t.m[k].to_string(), t.tau[k].to_string(), t.l[k].to_string()]);
        }
    }
    run.write_csv("stopping_times.csv", &["delta", "m", "tau", "l"], &rows)?;
    out.metric("lambda_u", est.lambda_u);
    out.metric("epsilon0", eps0);
    out.check("slope_bounds", all_pass, detail.join("; "));
    let monotone = tau0.windows(2).all(|p| p[1] >= p[0]) && tau0.last() > tau0.first();
    out.check("tau0_diverges", monotone, format!("τ(0) along the δ grid: {tau0:?}"));

    // single hyperbolic linear map: compare with the closed form
    if let [(id, _)] = nu.atoms() {
        let f = &family[*id];
        if let (true, Eigenvalues::Real(big, small)) = (f.is_linear(), eigen_analysis(&f.linear_part()).eigenvalues) {
            let (lu, ls) = (big.abs().ln(), small.abs().ln());
            if lu > 0.0 && ls < 0.0 {
                let n = c.m_max + c.j_max + 10;
                let exact = NormLogData::from_steps(&vec![ls; n], &vec![lu; n]);
                let mut ok = true;
                for &delta in &c.deltas {
                    let t = stopping_times(&exact, delta, c.epsilon, 0..=c.m_max)?;
                    ok &=
                        t.m.iter()
                            .zip(&t.tau)
                            .all(|(&m, &tau)| tau == stopping_time_closed_form(lu, ls, delta, c.epsilon, m));
                }
                out.check("closed_form", ok, "single-map stopping times against the closed form".into());
            }
        }
    }
    Ok(out)
}

pub fn mixed_cocycle(cfg: &Config, run: &RunDir) -> CmdResult {
    let c = &cfg.mixed_cocycle;
    let (f, g) = (real(c.f), real(c.g));
    let mut out = Outcome::default();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut curve = Vec::new();
    let mut sim = Vec::new();
    for &t in &c.t {
        let r = mixed_projective_exponent(&f, &g, t, c.steps, cfg.seeds[0])?;
        let d = (r.closed_form - r.simulated).abs();
        worst = worst.max(d);
        rows.push(vec![num(t), num(r.closed_form), num(r.simulated), num(d)]);
        curve.push((t, r.closed_form));
        sim.push((t, r.simulated));
    }
    run.write_csv("mixed_cocycle.csv", &["t", "closed_form", "simulated", "abs_diff"], &rows)?;
    run.write_svg(
        "mixed_cocycle.svg",
        &Plot::new("Projective exponent of the mixed cocycle", "t", "exponent")
            .line("closed form", curve)
            .scatter("simulated", sim),
    )?;
    out.metric("max_abs_diff", worst);
    out.check(
        "closed_form_agreement",
        worst <= c.tolerance,
        format!("max |closed − simulated| = {worst:.2e} (tolerance {:.1e})", c.tolerance),
    );
    Ok(out)
}

pub fn dimension(cfg: &Config, run: &RunDir) -> CmdResult {
    let c = &cfg.dimension;
    let mut out = Outcome::default();
    let coords: Vec<f64> = match c.source {
        DimensionSource::Uniform => {
            EmpiricalMeasure::uniform(c.samples, cfg.seeds[0]).samples().iter().map(|p| p.x()).collect()
        }
        DimensionSource::Cantor => cantor_sample(c.samples, c.depth, cfg.seeds[0]),
        DimensionSource::Point => vec![0.5; c.samples],
        DimensionSource::Slice => {
            let family = cfg.family()?;
            let nu = cfg.measure()?;
            let mu = sample_stationary_sharded(&family, &nu, cfg.start()?, c.burn_in, c.samples, &cfg.seeds)?;
            let slice = slice_for(cfg, &family, &nu, &mu, &c.slice, run)?;
            out.metric("slice_points", slice.count as f64);
            slice.coords
        }
    };
    let d = dimension_estimate(&coords)?;
    let (lo, hi) = d.fit_range;
    let rows: Vec<Vec<String>> = d
        .correlation_sums
        .iter()
        .map(|&(r, cr)| vec![num(r), num(cr), (r >= lo && r <= hi && hi > 0.0).to_string()])
        .collect();
    run.write_csv("correlation.csv", &["r", "C_r", "fitted"], &rows)?;
    let pts: Vec<(f64, f64)> = d.correlation_sums.iter().copied().filter(|p| p.1 > 0.0).collect();
    run.write_svg(
        "correlation.svg",
        &Plot::new("Correlation sums", "r", "C(r)").log(true, true).line("C(r)", pts.clone()).scatter("", pts),
    )?;
    out.metric("dim", d.dim);
    out.metric("fit_residual", d.fit_residual);
    if let Some(expect) = c.expect {
        let err = (d.dim - expect).abs();
        out.check(
            "expected_dimension",
            err <= c.tolerance,
            format!("dim = {:.4}, expected {expect} ± {}", d.dim, c.tolerance),
        );
    }
    Ok(out)
}
