use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use phasefield::export::{round12, sig12, write_vtk};
use phasefield::field::SourceSpec;
use phasefield::optimizer::{
    mass_bound_check, mass_fraction_near, minimize as run_minimize, minimize_from, total_mass, Continuation,
    MinimizeResult,
};
use phasefield::recovery::{build_polyhedral_recovery, PolyhedralMeasure, RecoveryResult};
use phasefield::reduced::{cost_table as table, transition_energy, CostParams, Prefactor};
use phasefield::scenario::Scenario;
use phasefield::{Error, Result};
use serde_json::{json, Value};

use crate::{Cli, CompareArgs, CostArgs, CostTableArgs, PrefactorArg, ProfileArgs, ScenarioArgs};

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn write_json(dir: &Path, name: &str, value: &Value) -> Result<()> {
    let mut out = create(dir, name)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn params(cost: &CostArgs, a: f64) -> Result<CostParams<f64>> {
    let prefactor = match cost.prefactor {
        PrefactorArg::DOmega => Prefactor::DOmega,
        PrefactorArg::DMinusOneOmega => Prefactor::DMinusOneOmega,
    };
    Ok(CostParams::new(cost.d, cost.p, a)?.with_prefactor(prefactor))
}

pub fn cost_table(cli: &Cli, args: &CostTableArgs) -> Result<()> {
    let mut out = create(&cli.out, "cost_table.csv")?;
    writeln!(out, "a,m,f,r_star,q_inf")?;
    for &a in &args.a {
        let rows = table(&args.m, &params(&args.cost, a)?, cli.tol)?;
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                sig12(a),
                sig12(r.m),
                sig12(r.f_value),
                sig12(r.r_star),
                sig12(r.q_inf_at_r_star)
            )?;
            println!("a={} m={} f={}", sig12(a), sig12(r.m), sig12(r.f_value));
        }
    }
    out.flush()?;
    Ok(())
}

pub fn profile(cli: &Cli, args: &ProfileArgs) -> Result<()> {
    let p = params(&args.cost, 0.0)?;
    let prof = transition_energy(args.xi, args.r1, args.r2, &p, args.resolution)?;
    let mut out = create(&cli.out, "profile.csv")?;
    writeln!(out, "t,v")?;
    for (t, v) in prof.radii.iter().zip(&prof.values) {
        writeln!(out, "{},{}", sig12(*t), sig12(*v))?;
    }
    out.flush()?;
    println!("energy {}", sig12(prof.energy));
    Ok(())
}

fn energy_json(e: &phasefield::field::EnergyBreakdown<f64>) -> Value {
    json!({
        "gradient_term": round12(e.gradient_term),
        "potential_term": round12(e.potential_term),
        "mass_term": round12(e.mass_term),
        "total": round12(e.total),
    })
}

fn write_trace(dir: &Path, result: &MinimizeResult<f64>) -> Result<()> {
    let mut out = create(dir, "trace.jsonl")?;
    for t in &result.trace {
        let mut row = energy_json(&t.energy);
        row["iter"] = json!(t.iter);
        row["stage"] = json!(t.stage);
        row["residual"] = json!(round12(t.residual));
        serde_json::to_writer(&mut out, &row)?;
        writeln!(out)?;
    }
    out.flush()?;
    Ok(())
}

pub fn minimize(cli: &Cli, args: &ScenarioArgs) -> Result<()> {
    let sc = Scenario::load(&args.scenario)?;
    let result = run_minimize(&sc.sources, &sc.grid, &sc.optimizer)?;
    write_trace(&cli.out, &result)?;
    let mut vtk = create(&cli.out, "fields.vtk")?;
    write_vtk(&mut vtk, &result.u, Some(&result.sigma))?;
    vtk.flush()?;

    let e = result.final_energy();
    let eps = result.functional.eps;
    let segments = sc.source_segments();
    let mut summary = json!({
        "iterations": result.trace.len(),
        "converged": result.converged,
        "eps": round12(eps),
        "energy": energy_json(&e),
        "residual": round12(result.residual),
        "total_mass": round12(total_mass(&result.sigma)),
        "mass_fraction_within_3eps": round12(mass_fraction_near(&result.sigma, &segments, 3.0 * eps)),
    });
    if result.functional.a > 0.0 {
        let b = mass_bound_check(&result, e.total, result.functional.a, 0.5);
        summary["mass_bound"] = json!({"mass": round12(b.mass), "bound": round12(b.bound), "passed": b.passed});
    }
    write_json(&cli.out, "summary.json", &summary)?;
    println!(
        "energy {} after {} iterations (converged: {})",
        sig12(e.total),
        result.trace.len(),
        result.converged
    );
    Ok(())
}

fn measure_of(sc: &Scenario) -> Result<&PolyhedralMeasure<f64>> {
    sc.measure
        .as_ref()
        .ok_or_else(|| Error::invalid("measure", "the scenario needs a measure"))
}

fn recover(sc: &Scenario, eps: f64) -> Result<(SourceSpec<f64>, RecoveryResult<f64>)> {
    let spec = sc.sources.with_eps(eps);
    let rec = build_polyhedral_recovery(measure_of(sc)?, &spec, eps, sc.delta, &sc.cost_params()?, &sc.grid)?;
    Ok((spec, rec))
}

pub fn recovery_check(cli: &Cli, args: &ScenarioArgs) -> Result<()> {
    let sc = Scenario::load(&args.scenario)?;
    let (_, rec) = recover(&sc, sc.functional.eps)?;
    let s = rec.summary();
    write_json(
        &cli.out,
        "recovery_summary.json",
        &json!({
            "limit_energy": round12(s.limit_energy),
            "recovery_energy": round12(s.recovery_energy),
            "gap": round12(s.gap),
            "eps": round12(s.eps),
            "delta": round12(s.delta),
        }),
    )?;
    let mut vtk = create(&cli.out, "recovery.vtk")?;
    write_vtk(&mut vtk, &rec.u, Some(&rec.sigma))?;
    vtk.flush()?;
    println!(
        "recovery {} limit {} gap {} predicted bound {} raw residual {}",
        sig12(s.recovery_energy),
        sig12(s.limit_energy),
        sig12(s.gap),
        sig12(rec.predicted_bound),
        sig12(rec.raw_residual)
    );
    Ok(())
}

pub fn compare(cli: &Cli, args: &CompareArgs) -> Result<()> {
    let sc = Scenario::load(&args.scenario)?;
    let mut rows = Vec::new();
    let mut csv = create(&cli.out, "compare.csv")?;
    writeln!(csv, "eps,limit_energy,recovery_energy,optimized_energy,recovery_gap,optimized_gap")?;
    let mut limit = 0.0;
    for k in 0..=args.halvings {
        let eps = sc.functional.eps / 2f64.powi(k as i32);
        let (spec, rec) = recover(&sc, eps)?;
        let mut config = sc.optimizer.clone();
        config.functional = config.functional.with_eps(eps);
        config.continuation = Continuation::none();
        let opt = minimize_from(&spec, rec.u.clone(), &config)?;
        let optimized = opt.final_energy().total;
        let recovery = rec.energy.total;
        limit = rec.limit_energy;
        if optimized > recovery + cli.tol {
            return Err(Error::NonConvergence {
                what: "recovery-seeded descent",
                iterations: opt.trace.len(),
            });
        }
        writeln!(
            csv,
            "{},{},{},{},{},{}",
            sig12(eps),
            sig12(limit),
            sig12(recovery),
            sig12(optimized),
            sig12(recovery - limit),
            sig12(optimized - limit)
        )?;
        println!(
            "eps {} limit {} recovery {} optimized {}",
            sig12(eps),
            sig12(limit),
            sig12(recovery),
            sig12(optimized)
        );
        rows.push(json!({
            "eps": round12(eps),
            "recovery_energy": round12(recovery),
            "optimized_energy": round12(optimized),
            "gaps": {"recovery": round12(recovery - limit), "optimized": round12(optimized - limit)},
        }));
    }
    csv.flush()?;
    let first = rows[0].clone();
    write_json(
        &cli.out,
        "compare.json",
        &json!({
            "limit_energy": round12(limit),
            "recovery_energy": first["recovery_energy"],
            "optimized_energy": first["optimized_energy"],
            "gaps": first["gaps"],
            "delta": round12(sc.delta),
            "runs": rows,
        }),
    )
}
