use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use rayon::prelude::*;

use cmdeg_core::acceptance::run_suite;
use cmdeg_core::delta::{
    alpha_delta_bounds_check, alpha_p1, classify_from_upper_bound, classify_stability, delta_q_p1,
    nef_threshold_coefficient, pseff_threshold, ratio_a_over_s, s_infinity, s_q, volume_bound_check,
    PolarizedModel, ValuationKind, ValuationModel,
};
use cmdeg_core::family::{bundled, BUNDLED};
use cmdeg_core::family::{DivisorClass, FamilyDescriptor};
use cmdeg_core::hn::{
    chebyshev_lower_bound, clt_estimate, gg_fraction_with_threshold, min_m_for_fraction, sym_fraction, HNProfile,
};
use cmdeg_core::intersect::{cm_degree, cm_ledger, mu_from_intersections, nef_test, self_intersection};
use cmdeg_core::numeric::{parse_rational, to_integer, Rational};
use cmdeg_core::sections::{
    fiber_hilbert_for, h0, h1_vanishes, km_expansion, plane_system_dim, pushforward_splitting, volume_estimate,
    HomogeneousPoly, PlanePoint,
};
use cmdeg_core::Error;

use crate::report::{DescriptorRef, Inputs, Outputs, Table};
use crate::{BoundsCommand, ClassArgs, Command};

type Runner = Box<dyn FnOnce(bool) -> Result<Outputs>>;

/// A resolved command: its identity for caching and the work to do.
pub struct Job {
    pub name: String,
    pub inputs: Inputs,
    pub cacheable: bool,
    pub run: Runner,
}

/// Reads a descriptor from a path, `path.json`, or the bundled set by name.
pub fn load_descriptor(arg: &str) -> Result<FamilyDescriptor> {
    let path = Path::new(arg);
    let with_ext = path.with_extension("json");
    for candidate in [path, with_ext.as_path()] {
        if candidate.is_file() {
            let text = fs::read_to_string(candidate)
                .with_context(|| format!("reading {}", candidate.display()))?;
            return FamilyDescriptor::from_json(&text)
                .with_context(|| format!("descriptor {}", candidate.display()));
        }
    }
    let name = arg.trim_start_matches("examples/").trim_end_matches(".json");
    bundled(name).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "no descriptor file {arg:?} and no bundled descriptor named {name:?} (see `cmdeg descriptors`)"
        ))
        .into()
    })
}

/// `1..20` and `1..=20` are inclusive; also `7` and `1,2,5`.
pub fn parse_range(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Parse(format!("bad range {s:?}; expected a..b, a, or a,b,c"));
    let s = s.trim();
    if let Some((lo, hi)) = s.split_once("..") {
        let hi = hi.strip_prefix('=').unwrap_or(hi);
        let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
        if lo > hi {
            return Err(bad().into());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|p| p.trim().parse().map_err(|_| bad().into()))
        .collect()
}

fn rational(s: &str) -> Result<Rational> {
    Ok(parse_rational(s.trim())?)
}

fn class_for(fam: &FamilyDescriptor, args: &ClassArgs) -> Result<DivisorClass> {
    let class = DivisorClass::parse(&args.class, fam)?;
    Ok(class.plus_fibers(&rational(&args.plus_fibers)?))
}

fn descriptor_ref(fam: &FamilyDescriptor) -> DescriptorRef {
    DescriptorRef {
        name: fam.name.clone(),
        hash: fam.hash(),
    }
}

fn params<const N: usize>(pairs: [(&str, String); N]) -> BTreeMap<String, String> {
    pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
}

fn sweep<T: Send>(xs: &[u64], parallel: bool, f: impl Fn(u64) -> Result<T> + Sync) -> Result<Vec<T>> {
    if parallel {
        xs.par_iter().map(|&x| f(x)).collect()
    } else {
        xs.iter().map(|&x| f(x)).collect()
    }
}

fn job(name: &str, inputs: Inputs, cacheable: bool, run: impl FnOnce(bool) -> Result<Outputs> + 'static) -> Job {
    Job {
        name: name.into(),
        inputs,
        cacheable,
        run: Box::new(run),
    }
}

pub fn prepare(command: &Command) -> Result<Job> {
    Ok(match command.clone() {
        Command::CmDegree(f) => {
            let fam = load_descriptor(&f.descriptor)?;
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: BTreeMap::new(),
            };
            job("cm-degree", inputs, false, move |_| cm_degree_cmd(&fam))
        }
        Command::Sections { family, class, m_range } => {
            let fam = load_descriptor(&family.descriptor)?;
            let cls = class_for(&fam, &class)?;
            let ms = parse_range(&m_range)?;
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: params([("class", cls.to_string()), ("m", m_range)]),
            };
            job("sections", inputs, true, move |par| {
                let rows = sweep(&ms, par, |m| Ok((m, h0(&fam, &cls, m)?)))?;
                let mut out = Outputs::default();
                let mut table = Table::new("", &["m", "h0"]);
                for (m, h) in rows {
                    table.push(vec![m.to_string(), h.to_string()]);
                }
                out.tables.push(table);
                Ok(out)
            })
        }
        Command::Volume { family, class } => {
            let fam = load_descriptor(&family.descriptor)?;
            let cls = class_for(&fam, &class)?;
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: params([("class", cls.to_string())]),
            };
            job("volume", inputs, true, move |_| {
                let fit = volume_estimate(&fam, &cls)?;
                let mut out = Outputs::default();
                out.value("volume", &fit.volume);
                out.value("self_intersection", self_intersection(&fam, &cls));
                out.meta("h0_polynomial", &fit.polynomial);
                out.meta("sample_m", format!("{:?}", fit.sample_m));
                out.meta("validation_points", 3);
                if !fit.rejected.is_empty() {
                    out.meta("rejected_progressions", fit.rejected.join("; "));
                }
                Ok(out)
            })
        }
        Command::Splitting { family, class, m } => {
            let fam = load_descriptor(&family.descriptor)?;
            let cls = class_for(&fam, &class)?;
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: params([("class", cls.to_string()), ("m", m.to_string())]),
            };
            job("splitting", inputs, true, move |_| {
                let split = pushforward_splitting(&fam, &cls, m)?;
                let mut out = Outputs::default();
                out.value("rank", split.rank());
                out.value("total_degree", split.total_degree());
                out.value("h0", split.h0());
                out.value("h1_vanishes", h1_vanishes(&split));
                out.value(
                    "degrees",
                    split.to_vec().iter().map(|d| d.to_string()).collect::<Vec<_>>().join(","),
                );
                let mut table = Table::new("", &["degree", "multiplicity"]);
                for (d, c) in split.degrees.iter().rev() {
                    table.push(vec![d.to_string(), c.to_string()]);
                }
                out.tables.push(table);
                Ok(out)
            })
        }
        Command::FiberHilbert { family, class } => {
            let fam = load_descriptor(&family.descriptor)?;
            let cls = class_for(&fam, &class)?;
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: params([("class", cls.to_string())]),
            };
            job("fiber-hilbert", inputs, true, move |_| {
                let h = fiber_hilbert_for(&fam, &cls, 1)?;
                let mut out = Outputs::default();
                out.value("chi(q)", &h.polynomial);
                out.value("a0", &h.a0);
                out.value("a1", &h.a1);
                out.value("fiber_volume", &h.volume);
                out.value("mu", &h.mu);
                let mu_int = mu_from_intersections(&fam, &cls)?;
                out.value("mu_from_intersections", &mu_int);
                if mu_int != h.mu {
                    out.failures.push(format!("mu from counts {} != mu from intersections {mu_int}", h.mu));
                }
                out.meta("sample_q", format!("{:?}", h.sample_q));
                Ok(out)
            })
        }
        Command::HnFraction {
            profile,
            genus,
            m_range,
            threshold,
            clt,
            chebyshev,
            epsilon,
        } => {
            let p = HNProfile::parse(&profile, genus)?;
            let t = match &threshold {
                Some(t) => rational(t)?,
                None => p.gg_threshold(),
            };
            let eps = epsilon.as_deref().map(rational).transpose()?;
            let ms = parse_range(&m_range)?;
            let inputs = Inputs {
                descriptor: None,
                params: params([
                    ("profile", p.to_string()),
                    ("m", m_range),
                    ("threshold", t.to_string()),
                    ("clt", clt.to_string()),
                    ("chebyshev", chebyshev.to_string()),
                    ("epsilon", epsilon.unwrap_or_default()),
                ]),
            };
            job("hn-fraction", inputs, true, move |par| {
                let mut out = Outputs::default();
                out.value("degree", p.degree());
                out.value("slope", p.slope());
                out.value("variance", p.variance());
                out.meta("threshold", &t);
                let mut cols = vec!["m", "fraction"];
                if chebyshev {
                    cols.push("chebyshev_lower_bound");
                }
                if clt {
                    cols.push("clt_approx");
                }
                let rows = sweep(&ms, par, |m| {
                    let mut row = vec![m.to_string(), gg_fraction_with_threshold(&p, m, &t)?.to_string()];
                    if chebyshev {
                        row.push(chebyshev_lower_bound(&p, m, &t).to_string());
                    }
                    if clt {
                        row.push(format!("{:.6}", clt_estimate(&p, m, &t, true)));
                    }
                    Ok(row)
                })?;
                let mut table = Table::new("", &cols);
                rows.into_iter().for_each(|r| table.push(r));
                out.tables.push(table);
                if clt {
                    out.meta("clt_approx", "normal approximation with continuity correction; not exact");
                }
                if let Some(eps) = eps {
                    out.value("min_m_for_fraction", min_m_for_fraction(&p, &eps)?);
                    out.meta("min_m_threshold", "2g");
                }
                Ok(out)
            })
        }
        Command::SymFraction { degrees, m_range, threshold } => {
            let degs = degrees
                .split(',')
                .map(|d| d.trim().parse::<i64>().map_err(|_| Error::Parse(format!("bad degree {d:?}"))))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let t = rational(&threshold)?;
            let ms = parse_range(&m_range)?;
            let inputs = Inputs {
                descriptor: None,
                params: params([("degrees", degrees), ("m", m_range), ("threshold", t.to_string())]),
            };
            job("sym-fraction", inputs, true, move |par| {
                let rows = sweep(&ms, par, |m| Ok(vec![m.to_string(), sym_fraction(&degs, m, &t)?.to_string()]))?;
                let mut table = Table::new("", &["m", "fraction"]);
                rows.into_iter().for_each(|r| table.push(r));
                Ok(Outputs {
                    tables: vec![table],
                    ..Outputs::default()
                })
            })
        }
        Command::Delta { model, valuation, q_range } => {
            let m = PolarizedModel::parse(&model)?;
            let kind: ValuationKind = valuation.parse()?;
            let qs = parse_range(&q_range)?;
            let inputs = Inputs {
                descriptor: None,
                params: params([("model", m.to_string()), ("valuation", valuation), ("q", q_range)]),
            };
            job("delta", inputs, true, move |par| delta_cmd(&m, kind, &qs, par))
        }
        Command::KmCheck { family, s } => {
            let fam = load_descriptor(&family.descriptor)?;
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: params([("s", s.to_string())]),
            };
            job("km-check", inputs, true, move |_| {
                let km = km_expansion(&fam, s)?;
                let mut out = Outputs::default();
                for (i, d) in km.m_degrees.iter().enumerate() {
                    out.value(&format!("deg M_{i}"), d);
                }
                out.value("deg L_CM", &km.lcm_degree);
                out.value("mu_sL", &km.mu_sl);
                out.value("cm_degree", cm_degree(&fam));
                out.value("deg f_*O(qsL)", &km.pushforward_degree);
                let mut table = Table::new("", &["identity", "lhs", "rhs", "holds"]);
                for c in &km.checks {
                    table.push(vec![c.name.clone(), c.lhs.to_string(), c.rhs.to_string(), c.holds.to_string()]);
                    if !c.holds {
                        out.failures.push(format!("{}: {} != {}", c.name, c.lhs, c.rhs));
                    }
                }
                out.tables.push(table);
                out.meta("sample_q", format!("{:?}", km.sample_q));
                Ok(out)
            })
        }
        Command::NefCheck { family, class, plus_lambda } => {
            let fam = load_descriptor(&family.descriptor)?;
            let mut cls = class_for(&fam, &class)?;
            if let Some(a) = &plus_lambda {
                cls = cls.plus_fibers(&(rational(a)? * cm_degree(&fam)));
            }
            let inputs = Inputs {
                descriptor: Some(descriptor_ref(&fam)),
                params: params([("class", cls.to_string())]),
            };
            job("nef-check", inputs, false, move |_| {
                let cert = nef_test(&fam, &cls)?;
                let mut out = Outputs::default();
                out.value(
                    "verdict",
                    match cert.verdict {
                        cmdeg_core::intersect::NefVerdict::NotNef => "not_nef",
                        cmdeg_core::intersect::NefVerdict::PassesTestSet => "passes_test_set",
                    },
                );
                if let Some(w) = &cert.witness {
                    out.value("witness", &w.description);
                    out.value("witness_value", &w.value);
                }
                out.value("partial_test_set", cert.partial);
                let mut table = Table::new("", &["test", "value"]);
                for c in &cert.checks {
                    table.push(vec![c.description.clone(), c.value.to_string()]);
                }
                out.tables.push(table);
                out.meta("note", "not_nef is a proof; passes_test_set is not a nefness certificate");
                Ok(out)
            })
        }
        Command::PlaneSystem {
            degree,
            mult,
            divisor_degree,
            divisor_mult,
        } => {
            let inputs = Inputs {
                descriptor: None,
                params: params([
                    ("degree", degree.to_string()),
                    ("mult", mult.to_string()),
                    ("divisor_degree", divisor_degree.map(|d| d.to_string()).unwrap_or_default()),
                    ("divisor_mult", divisor_mult.to_string()),
                ]),
            };
            job("plane-system", inputs, true, move |_| {
                let points: Vec<_> = PlanePoint::standard_frame().into_iter().map(|p| (p, mult)).collect();
                let curve = divisor_degree.map(HomogeneousPoly::fermat);
                let dim = plane_system_dim(degree, &points, curve.as_ref().map(|c| (c, divisor_mult)))?;
                let mut out = Outputs::default();
                out.value("dimension", dim);
                out.meta("points", "(1:0:0), (0:1:0), (0:0:1), (1:1:1)");
                if let Some(d) = divisor_degree {
                    out.meta("divisor", format!("x^{d} + y^{d} + z^{d}"));
                }
                Ok(out)
            })
        }
        Command::Bounds(b) => bounds_job(b)?,
        Command::Descriptors { name } => {
            let inputs = Inputs {
                descriptor: None,
                params: params([("name", name.clone().unwrap_or_default())]),
            };
            job("descriptors", inputs, false, move |_| descriptors_cmd(name.as_deref()))
        }
        Command::ReproducePaper { descriptor_dir } => {
            // surface corrupt descriptor files before running anything
            let mut checked = Vec::new();
            if let Some(dir) = &descriptor_dir {
                let mut paths: Vec<_> = fs::read_dir(dir)
                    .with_context(|| format!("reading {}", dir.display()))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|p| p.extension().is_some_and(|x| x == "json"))
                    .collect();
                paths.sort();
                for p in paths {
                    let fam = load_descriptor(&p.to_string_lossy())?;
                    checked.push((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), fam.hash()));
                }
            }
            let inputs = Inputs {
                descriptor: None,
                params: params([(
                    "descriptor_dir",
                    descriptor_dir.map(|d| d.display().to_string()).unwrap_or_default(),
                )]),
            };
            job("reproduce-paper", inputs, false, move |_| reproduce_cmd(checked))
        }
    })
}

fn cm_degree_cmd(fam: &FamilyDescriptor) -> Result<Outputs> {
    let mut out = Outputs::default();
    let cm = cm_degree(fam);
    out.value("cm_degree", &cm);
    out.value("(-K)^r", -&cm);
    out.value("rank", fam.rank());
    out.value("deg_V", fam.deg_v());
    let mut table = Table::new("expansion of (-K)^r", &["monomial", "coefficient", "value", "contribution"]);
    for e in cm_ledger(fam) {
        table.push(vec![
            e.monomial.to_string(),
            e.coefficient.to_string(),
            e.value.to_string(),
            e.contribution().to_string(),
        ]);
    }
    out.tables.push(table);
    out.meta("convention", "cm_degree = -(-K_{X/T})^r; xi^r = deg V (quotient convention)");
    Ok(out)
}

fn delta_cmd(m: &PolarizedModel, kind: ValuationKind, qs: &[u64], par: bool) -> Result<Outputs> {
    let v = ValuationModel::on(kind, m.n);
    let mut out = Outputs::default();
    let s = s_infinity(m, kind);
    out.value("A", &v.log_discrepancy);
    out.value("S", &s);
    out.value("T", pseff_threshold(m, kind));
    let ratio = ratio_a_over_s(m, kind, None)?;
    out.value("A/S (upper bound for delta)", &ratio);
    let rows = sweep(qs, par, |q| {
        let sq = s_q(m, kind, q)?;
        let r = ratio_a_over_s(m, kind, Some(q))?;
        Ok(vec![q.to_string(), sq.to_string(), r.to_string()])
    })?;
    let mut table = Table::new("", &["q", "S_q", "A/S_q"]);
    rows.into_iter().for_each(|r| table.push(r));
    out.tables.push(table);
    let exact_p1 = (m.n == 1).then(|| to_integer(&m.d)).flatten().and_then(|d| u64::try_from(d).ok());
    if let Some(d) = exact_p1 {
        let delta = delta_q_p1(d, 1)?;
        out.value("delta (exact on P1)", &delta);
        out.value("alpha (exact on P1)", alpha_p1(d)?);
        let verdict = classify_stability(Some(&delta), None, 1)?;
        out.value("stability", verdict.classification);
        out.meta("stability_source", verdict.source);
    } else {
        let verdict = classify_from_upper_bound(&ratio);
        out.value("stability", verdict.classification);
        out.meta("stability_source", verdict.source);
    }
    Ok(out)
}

fn bounds_job(b: BoundsCommand) -> Result<Job> {
    let (name, ps, out) = match b {
        BoundsCommand::Volume { vol_x, dim, vol_f } => {
            let c = volume_bound_check(&rational(&vol_x)?, dim, &rational(&vol_f)?)?;
            let mut out = Outputs::default();
            out.value("fiber_bound_holds", c.fiber_bound_holds);
            out.value("fiber_margin", &c.fiber_margin);
            out.value("absolute_bound_holds", c.absolute_bound_holds);
            out.value("absolute_margin", &c.absolute_margin);
            ("bounds volume", params([("vol_x", vol_x), ("dim", dim.to_string()), ("vol_f", vol_f)]), out)
        }
        BoundsCommand::AlphaDelta { alpha, delta, n } => {
            let c = alpha_delta_bounds_check(&rational(&alpha)?, &rational(&delta)?, n)?;
            let mut out = Outputs::default();
            out.value("lower_holds", c.lower_holds);
            out.value("lower_margin", &c.lower_margin);
            out.value("upper_holds", c.upper_holds);
            out.value("upper_margin", &c.upper_margin);
            ("bounds alpha-delta", params([("alpha", alpha), ("delta", delta), ("n", n.to_string())]), out)
        }
        BoundsCommand::NefThreshold { delta, v, n } => {
            let c = nef_threshold_coefficient(&rational(&delta)?, &rational(&v)?, n)?;
            let mut out = Outputs::default();
            out.value("coefficient", c);
            ("bounds nef-threshold", params([("delta", delta), ("v", v), ("n", n.to_string())]), out)
        }
        BoundsCommand::Stability { delta, alpha, n } => {
            let d = delta.as_deref().map(rational).transpose()?;
            let a = alpha.as_deref().map(rational).transpose()?;
            let verdict = classify_stability(d.as_ref(), a.as_ref(), n)?;
            let mut out = Outputs::default();
            out.value("stability", verdict.classification);
            out.meta("source", verdict.source);
            let ps = params([
                ("delta", delta.unwrap_or_default()),
                ("alpha", alpha.unwrap_or_default()),
                ("n", n.to_string()),
            ]);
            ("bounds stability", ps, out)
        }
    };
    let inputs = Inputs {
        descriptor: None,
        params: ps,
    };
    Ok(job(name, inputs, false, move |_| Ok(out)))
}

fn descriptors_cmd(name: Option<&str>) -> Result<Outputs> {
    let mut out = Outputs::default();
    if let Some(name) = name {
        let fam = load_descriptor(name)?;
        out.value("json", fam.to_json());
        out.value("hash", fam.hash());
        return Ok(out);
    }
    let mut table = Table::new("", &["name", "twists", "centers", "cm_degree", "hash"]);
    for (n, _) in BUNDLED {
        let fam = bundled(n).expect("bundled descriptors are valid");
        table.push(vec![
            n.to_string(),
            format!("{:?}", fam.twists),
            fam.num_centers().to_string(),
            cm_degree(&fam).to_string(),
            fam.hash()[..12].to_string(),
        ]);
    }
    out.tables.push(table);
    Ok(out)
}

fn reproduce_cmd(checked: Vec<(String, String)>) -> Result<Outputs> {
    let mut out = Outputs::default();
    for (file, hash) in checked {
        out.meta(&format!("validated {file}"), hash);
    }
    let reports = run_suite();
    let mut table = Table::new("", &["criterion", "title", "status", "checks_passed", "checks"]);
    for r in &reports {
        let ok = r.checks.iter().filter(|c| c.passed).count();
        table.push(vec![
            r.id.to_string(),
            r.title.clone(),
            if r.passed { "PASS" } else { "FAIL" }.to_string(),
            ok.to_string(),
            r.checks.len().to_string(),
        ]);
        for c in r.failures() {
            out.failures.push(format!("criterion {}: {}: expected {}, got {}", r.id, c.label, c.expected, c.got));
        }
    }
    out.tables.push(table);
    let passed = reports.iter().filter(|r| r.passed).count();
    out.value("criteria_passed", format!("{passed}/{}", reports.len()));
    Ok(out)
}
