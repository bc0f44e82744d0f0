use std::fmt::Write as _;

use osc_core::algebra::{causal_class, causal_class_with_tol, causal_norm};
use osc_core::geodesic::{exp_closed_form, integrate_geodesic, Geodesic};
use osc_core::isometry::{
    aut_intersection_check, check_local_isometry, in_normalizer, in_normalizer_derived, is_fiber_preserving,
    isotropy_matrix, normalizer_conditions, normalizer_oracle, psi_decompose, structure_relations_check,
    verify_normalizer, FiberVerdict, NormalizerTable, TableKind, MATRIX_TOL,
};
use osc_core::lattice::LatticeSpec;
use osc_core::quotient::{
    classify_lightlike, closed_timelike_and_spacelike, product_line_lightlike, search_closed, search_closed_exact,
    ClosedGeodesicCertificate, LightlikeVerdict, ProductLineVerdict,
};
use osc_core::{Error, ExactElement, Result as CoreResult};
use serde_json::{json, Value};

use crate::cli::{Cli, Command, GeodesicCmd, IsometryCmd, LatticeCmd, QuotientCmd};
use crate::input::{
    parse_exact_element, parse_float_element, parse_freqs, parse_isometry, parse_lattice, parse_matrix, parse_range,
    parse_real, parse_real_list, parse_variant, parse_vector, split_blocks, InputError,
};
use crate::report::{
    certificate_json, clean, dvector_json, exact_element_json, exact_vector_json, float_element_json, freqs_json,
    lattice_json, matrix_json, rational_json, Report,
};

/// Largest number of CSV rows `geodesic eval` will write.
const MAX_ROWS: f64 = 1e7;
/// Bound on the closed-form/RK4 gap reported by `geodesic integrate`.
const INTEGRATION_TOL: f64 = 1e-6;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Core(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::CertificateVerificationFailed(_)) => 3,
            _ => 2,
        }
    }

    pub fn to_json(&self) -> Value {
        let (kind, pointer) = match self {
            CliError::Input(e) => ("validation", Some(e.pointer.clone())),
            CliError::Core(Error::CertificateVerificationFailed(_)) => ("verification", None),
            CliError::Core(_) => ("validation", None),
        };
        let message = match self {
            CliError::Input(e) => e.message.clone(),
            CliError::Core(e) => e.to_string(),
        };
        json!({ "error": { "kind": kind, "pointer": pointer, "message": message } })
    }
}

pub enum Output {
    Report(Report),
    Csv(String),
}

/// Which arithmetic a command runs in, given what it supports and the flags.
struct Arithmetic {
    exact_ok: bool,
    float_ok: bool,
    default_exact: bool,
}

impl Arithmetic {
    const EXACT_ONLY: Self = Self { exact_ok: true, float_ok: false, default_exact: true };
    const FLOAT_ONLY: Self = Self { exact_ok: false, float_ok: true, default_exact: false };
    const EITHER: Self = Self { exact_ok: true, float_ok: true, default_exact: true };

    fn resolve(&self, cli: &Cli) -> Result<bool, InputError> {
        if cli.exact && !self.exact_ok {
            return Err(InputError::new("--exact", "this command only runs in floating point"));
        }
        if cli.float && !self.float_ok {
            return Err(InputError::new("--float", "this command needs exact arithmetic"));
        }
        Ok(if cli.exact {
            true
        } else if cli.float {
            false
        } else {
            self.default_exact
        })
    }
}

pub fn dispatch(cli: &Cli, tol: f64) -> Result<Output, CliError> {
    match &cli.command {
        Command::Geodesic(cmd) => geodesic(cli, cmd, tol),
        Command::Lattice(cmd) => lattice(cli, cmd, tol),
        Command::Quotient(cmd) => quotient(cli, cmd, tol),
        Command::Isometry(cmd) => isometry(cli, cmd, tol),
    }
}

fn num(x: f64) -> String {
    format!("{}", x + 0.0)
}

fn geodesic(cli: &Cli, cmd: &GeodesicCmd, tol: f64) -> Result<Output, CliError> {
    match cmd {
        GeodesicCmd::Eval { vector, s, base } => {
            Arithmetic::FLOAT_ONLY.resolve(cli)?;
            let freqs = parse_freqs(&vector.freqs, "--freqs")?;
            let n = freqs.n();
            let x = parse_vector(&vector.x, n, "--X")?.to_f64();
            let (a, b, h) = parse_range(s, "--s")?;
            let h = h.unwrap_or(1.0);
            let count = ((b - a) / h + 1e-9).floor();
            if count > MAX_ROWS {
                return Err(InputError::new("--s", format!("range asks for more than {MAX_ROWS} rows")).into());
            }
            let mut geo = Geodesic::new(x, freqs)?;
            if let Some(base) = base {
                geo = geo.through(parse_float_element(base, n, "--base")?)?;
            }
            let mut csv = String::from("s,z");
            for i in 1..=n {
                let _ = write!(csv, ",x{i},y{i}");
            }
            csv.push_str(",t\n");
            for i in 0..=(count as u64) {
                let s = a + i as f64 * h;
                let row: Vec<String> = std::iter::once(num(s)).chain(geo.eval(s).to_coords().into_iter().map(num)).collect();
                csv.push_str(&row.join(","));
                csv.push('\n');
            }
            Ok(Output::Csv(csv))
        }
        GeodesicCmd::Integrate { vector, s_end, step } => {
            let exact = Arithmetic::FLOAT_ONLY.resolve(cli)?;
            let freqs = parse_freqs(&vector.freqs, "--freqs")?;
            let x = parse_vector(&vector.x, freqs.n(), "--X")?.to_f64();
            if !(s_end.is_finite() && *s_end > 0.0) {
                return Err(InputError::new("--s-end", "must be a positive number").into());
            }
            if !(step.is_finite() && *step > 0.0) {
                return Err(InputError::new("--step", "must be a positive number").into());
            }
            let closed = exp_closed_form(&x, *s_end, &freqs);
            let numeric = integrate_geodesic(&x, *s_end, *step, &freqs)?;
            let gap = closed.max_abs_diff(&numeric);
            let mut r = Report::new("geodesic integrate", cli.seed, exact, tol);
            r.input("X", vector.x.as_str()).input("freqs", freqs_json(&freqs));
            r.input("s_end", clean(*s_end)).input("step", clean(*step));
            r.verdict(
                "closed_form_vs_rk4",
                exact,
                json!({
                    "closed_form": float_element_json(&closed),
                    "rk4": float_element_json(&numeric),
                    "max_abs_diff": clean(gap),
                    "tolerance": INTEGRATION_TOL,
                    "agree": gap <= INTEGRATION_TOL,
                }),
            );
            r.verification_failed = !(gap <= INTEGRATION_TOL);
            Ok(Output::Report(r))
        }
        GeodesicCmd::Character { vector } => {
            let exact = Arithmetic::EITHER.resolve(cli)?;
            let freqs = parse_freqs(&vector.freqs, "--freqs")?;
            let x = parse_vector(&vector.x, freqs.n(), "--X")?;
            let mut r = Report::new("geodesic character", cli.seed, exact, tol);
            r.input("X", vector.x.as_str()).input("freqs", freqs_json(&freqs));
            let body = if exact {
                json!({
                    "causal": format!("{:?}", causal_class(&x, &freqs)?),
                    "norm": rational_json(&causal_norm(&x, &freqs)?),
                })
            } else {
                let xf = x.to_f64();
                json!({
                    "causal": format!("{:?}", causal_class_with_tol(&xf, &freqs, tol)?),
                    "norm": clean(causal_norm(&xf, &freqs)?),
                })
            };
            r.verdict("causal_character", exact, body);
            Ok(Output::Report(r))
        }
    }
}

fn lattice(cli: &Cli, cmd: &LatticeCmd, tol: f64) -> Result<Output, CliError> {
    let exact = Arithmetic::EXACT_ONLY.resolve(cli)?;
    match cmd {
        LatticeCmd::Info { lattice } => {
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let mut r = Report::new("lattice info", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec));
            let profile = spec.profile()?;
            r.verdict(
                "profile",
                exact,
                json!({
                    "t0": profile.t0.to_string(),
                    "K0": profile.k0,
                    "central_step": profile.central_w.to_string(),
                    "has_pure_t_element": profile.has_pure_t,
                }),
            );
            let generators: Vec<Value> = spec.generators()?.iter().map(exact_element_json).collect();
            r.tables.push(json!({ "name": "generators", "rows": generators }));
            match spec.product_form() {
                Ok(pf) => {
                    r.tables.push(json!({
                        "name": "product_form",
                        "z_step": rational_json(&pf.z_step),
                        "t0": pf.t0.to_string(),
                        "shift": rational_json(&pf.shift),
                    }));
                }
                Err(e) => {
                    r.diagnostic(format!("no product form: {e}"));
                }
            }
            Ok(Output::Report(r))
        }
        LatticeCmd::Contains { lattice, element } => {
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let g = parse_exact_element(element, spec.n(), "--element")?;
            let member = spec.contains(&g)?;
            let mut r = Report::new("lattice contains", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec)).input("element", exact_element_json(&g));
            r.verdict("membership", exact, json!({ "member": member }));
            Ok(Output::Report(r))
        }
    }
}

fn certify(r: &mut Report, cert: &ClosedGeodesicCertificate, spec: &LatticeSpec) {
    let verified = match cert.verify(spec) {
        Ok(()) => true,
        Err(e) => {
            r.diagnostic(e.to_string());
            r.verification_failed = true;
            false
        }
    };
    r.certificates.push(certificate_json(cert, verified));
}

fn quotient(cli: &Cli, cmd: &QuotientCmd, tol: f64) -> Result<Output, CliError> {
    match cmd {
        QuotientCmd::Classify { lattice } => {
            let exact = Arithmetic::EXACT_ONLY.resolve(cli)?;
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let mut r = Report::new("quotient classify", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec));
            let body = match classify_lightlike(&spec)? {
                LightlikeVerdict::AllClosed { witness } => {
                    json!({ "kind": "AllClosed", "witness": exact_element_json(&witness) })
                }
                LightlikeVerdict::OnlyCentralDirection => json!({ "kind": "OnlyCentralDirection" }),
            };
            r.verdict("lightlike", exact, body);
            Ok(Output::Report(r))
        }
        QuotientCmd::ClosedSearch { lattice, x, r_max } => {
            let exact = Arithmetic::EITHER.resolve(cli)?;
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let xv = parse_vector(x, spec.n(), "--X")?;
            if *r_max == 0 {
                return Err(InputError::new("--r-max", "must be positive").into());
            }
            let found = if exact {
                search_closed_exact(&xv, &spec, *r_max)?
            } else {
                search_closed(&xv.to_f64(), &spec, *r_max)?
            };
            let mut r = Report::new("quotient closed-search", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec)).input("X", exact_vector_json(&xv)).input("r_max", *r_max);
            r.verdict("closed", exact, json!({ "found": found.is_some() }));
            if let Some(cert) = &found {
                certify(&mut r, cert, &spec);
            }
            Ok(Output::Report(r))
        }
        QuotientCmd::CertifyCausal { lattice } => {
            let exact = Arithmetic::EXACT_ONLY.resolve(cli)?;
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let (timelike, spacelike) = closed_timelike_and_spacelike(&spec)?;
            let mut r = Report::new("quotient certify-causal", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec));
            certify(&mut r, &timelike, &spec);
            certify(&mut r, &spacelike, &spec);
            r.verdict(
                "closed_causal_geodesics",
                exact,
                json!({
                    "timelike": format!("{:?}", timelike.causal),
                    "spacelike": format!("{:?}", spacelike.causal),
                    "verified": !r.verification_failed,
                }),
            );
            Ok(Output::Report(r))
        }
        QuotientCmd::ProductLine { lattice } => {
            let exact = Arithmetic::EXACT_ONLY.resolve(cli)?;
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let mut r = Report::new("quotient product-line", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec));
            let body = match product_line_lightlike(&spec)? {
                ProductLineVerdict::SomeClosedPossible { k, m, z } => {
                    json!({ "kind": "SomeClosedPossible", "k": k.to_string(), "m": m.to_string(), "z": z.to_string() })
                }
                ProductLineVerdict::NeverClosed { reason } => json!({ "kind": "NeverClosed", "reason": reason }),
            };
            r.verdict("lightlike", exact, body);
            Ok(Output::Report(r))
        }
    }
}

type Evaluator = fn(&ExactElement, &LatticeSpec) -> CoreResult<bool>;

fn evaluator(name: &str) -> Result<Evaluator, InputError> {
    match name {
        "printed" => Ok(in_normalizer),
        "derived" => Ok(in_normalizer_derived),
        "conditions" => Ok(normalizer_conditions),
        other => Err(InputError::new("--table", format!("unknown table '{other}', expected printed, derived or conditions"))),
    }
}

fn isometry(cli: &Cli, cmd: &IsometryCmd, tol: f64) -> Result<Output, CliError> {
    match cmd {
        IsometryCmd::CheckMatrix { matrix } => {
            let exact = Arithmetic::FLOAT_ONLY.resolve(cli)?;
            let freqs = parse_freqs(&matrix.freqs, "--freqs")?;
            let a = parse_matrix(&matrix.matrix, "--matrix")?;
            if a.nrows() != freqs.dim() || a.ncols() != freqs.dim() {
                return Err(InputError::new(
                    "--matrix",
                    format!("expected a {0}x{0} matrix, got {1}x{2}", freqs.dim(), a.nrows(), a.ncols()),
                )
                .into());
            }
            let mut r = Report::new("isometry check-matrix", cli.seed, exact, tol);
            r.input("matrix", matrix_json(&a)).input("freqs", freqs_json(&freqs));
            let ok = check_local_isometry(&a, &freqs);
            r.verdict("local_isometry", exact, json!({ "passes": ok, "tolerance": MATRIX_TOL }));
            if let Err(e) = psi_decompose(&a, &freqs) {
                r.diagnostic(e.to_string());
            }
            Ok(Output::Report(r))
        }
        IsometryCmd::Decompose { matrix } => {
            let exact = Arithmetic::FLOAT_ONLY.resolve(cli)?;
            let freqs = parse_freqs(&matrix.freqs, "--freqs")?;
            let a = parse_matrix(&matrix.matrix, "--matrix")?;
            let el = psi_decompose(&a, &freqs).map_err(|e| InputError::new("--matrix", e.to_string()))?;
            let gap = (isotropy_matrix(&el, &freqs)? - &a).amax();
            let mut r = Report::new("isometry decompose", cli.seed, exact, tol);
            r.input("matrix", matrix_json(&a)).input("freqs", freqs_json(&freqs));
            r.verdict(
                "decomposition",
                exact,
                json!({
                    "eps": el.eps,
                    "blocks": el.blocks.iter().map(matrix_json).collect::<Vec<_>>(),
                    "c": el.c.iter().map(dvector_json).collect::<Vec<_>>(),
                    "round_trip_defect": clean(gap),
                    "in_automorphism_group": aut_intersection_check(&el),
                }),
            );
            r.verification_failed = !(gap <= MATRIX_TOL);
            Ok(Output::Report(r))
        }
        IsometryCmd::Normalizer { lattice, grid, table, element } => {
            let exact = Arithmetic::EXACT_ONLY.resolve(cli)?;
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let eval = evaluator(table)?;
            if let Some(g) = grid {
                if g != "default" {
                    return Err(InputError::new("--grid", format!("unknown grid '{g}', only 'default' exists")).into());
                }
            }
            let mut r = Report::new("isometry normalizer", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec)).input("table", table.as_str());
            for kind in [TableKind::Printed, TableKind::Derived] {
                match NormalizerTable::new(&spec, kind) {
                    Ok(t) => r.tables.push(json!({
                        "name": format!("{kind:?}").to_lowercase(),
                        "condition": t.condition,
                        "product_set": t.product_set(),
                    })),
                    Err(e) => {
                        r.diagnostic(format!("{kind:?} table: {e}"));
                    }
                }
            }
            if let Some(src) = element {
                let g = parse_exact_element(src, spec.n(), "--element")?;
                r.input("element", exact_element_json(&g));
                let truth = normalizer_oracle(&g, &spec)?;
                let claim = eval(&g, &spec)?;
                r.verdict("membership", exact, json!({ "table": claim, "oracle": truth, "agree": claim == truth }));
                r.verification_failed |= claim != truth;
            }
            if grid.is_some() || element.is_none() {
                let agreement = verify_normalizer(&spec, eval)?;
                let disagreements: Vec<Value> = agreement
                    .disagreements
                    .iter()
                    .map(|(g, claim, truth)| json!({ "element": exact_element_json(g), "table": claim, "oracle": truth }))
                    .collect();
                r.verdict(
                    "grid_agreement",
                    exact,
                    json!({
                        "grid": "default",
                        "points": agreement.points,
                        "agree": agreement.agree,
                        "members": agreement.members,
                        "agreement_percent": clean(100.0 * agreement.rate()),
                        "disagreement_count": agreement.disagreement_count,
                        "first_disagreements": disagreements,
                    }),
                );
                r.verification_failed |= !agreement.all_agree();
            }
            Ok(Output::Report(r))
        }
        IsometryCmd::Fiber { lattice, isometry, samples } => {
            let exact = Arithmetic::EXACT_ONLY.resolve(cli)?;
            let spec = parse_lattice(&lattice.lattice, "--lattice")?;
            let f = parse_isometry(isometry, &spec.freqs, "--isometry")?;
            let verdict = is_fiber_preserving(&f, &spec, *samples, cli.seed)?;
            let mut r = Report::new("isometry fiber", cli.seed, exact, tol);
            r.input("lattice", lattice_json(&spec)).input("isometry", f.name()).input("samples", *samples);
            let body = match verdict {
                FiberVerdict::Preserving { checked, skipped } => {
                    json!({ "kind": "Preserving", "checked": checked, "skipped": skipped })
                }
                FiberVerdict::Counterexample { g, lambda, defect } => json!({
                    "kind": "Counterexample",
                    "g": exact_element_json(&g),
                    "lambda": exact_element_json(&lambda),
                    "defect": exact_element_json(&defect),
                }),
                FiberVerdict::Inconclusive { skipped } => json!({ "kind": "Inconclusive", "skipped": skipped }),
            };
            r.verdict("fiber_preserving", exact, body);
            Ok(Output::Report(r))
        }
        IsometryCmd::Relations { b, v, t, freqs, variant } => {
            let exact = Arithmetic::FLOAT_ONLY.resolve(cli)?;
            let freqs = parse_freqs(freqs, "--freqs")?;
            let bm = parse_matrix(b, "--B")?;
            let blocks = split_blocks(&bm, &freqs, "--B")?;
            let vv = parse_real_list(v, "--v")?;
            if vv.len() != 2 * freqs.n() {
                return Err(InputError::new("--v", format!("expected {} entries, found {}", 2 * freqs.n(), vv.len())).into());
            }
            let tt = parse_real(t, "--t")?;
            let var = parse_variant(variant).map_err(|m| InputError::new("--variant", m))?;
            let report = structure_relations_check(&blocks, &vv, tt, &freqs, var)?;
            let mut r = Report::new("isometry relations", cli.seed, exact, tol);
            r.input("B", matrix_json(&bm)).input("v", vv.iter().map(|x| clean(*x)).collect::<Vec<_>>());
            r.input("t", clean(tt)).input("freqs", freqs_json(&freqs)).input("variant", variant.as_str());
            for (name, outcome) in ["theta_conjugates_inner", "inversion_commutes_with_inner", "inversion_commutes_with_theta"]
                .iter()
                .zip(&report.relations)
            {
                r.verdict(
                    name,
                    exact,
                    json!({
                        "holds": outcome.holds,
                        "max_deviation": clean(outcome.max_deviation),
                        "witness": outcome.witness.as_ref().map(float_element_json),
                    }),
                );
            }
            r.verification_failed = !report.all_hold();
            Ok(Output::Report(r))
        }
    }
}
