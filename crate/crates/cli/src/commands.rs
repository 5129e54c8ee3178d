//! Subcommand drivers. Each writes CSV files into the output directory.

use std::fs;
use std::path::{Path, PathBuf};

use adasplit::analysis::{
    compute_m1_m2, dt_star_theory, leading_error_strang, local_error_sweep, measure_dt_star,
    reference_solve, reference_solve_at, ReferenceConfig,
};
use adasplit::models::kpp::{kpp_exact_front, Kpp, KppParams};
use adasplit::{monitored_err, run_adaptive, FieldState, Grid1D, StepRecord};
use anyhow::{bail, Context, Result};

use crate::config::{log_space, ModelName, RunConfig};

/// Floats in CSV files: scientific, 17 significant digits.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn opt(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// Files written so far, removed again if the command fails.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn csv<I, R>(&mut self, name: &str, header: &[&str], rows: I) -> Result<()>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = String>,
    {
        let path = self.dir.join(name);
        self.written.push(path.clone());
        let mut w = csv::Writer::from_path(&path)
            .with_context(|| format!("creating {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn discard(self) {
        for p in self.written {
            let _ = fs::remove_file(p);
        }
    }
}

fn write_state(
    out: &mut Outputs,
    name: &str,
    state: &FieldState,
    grid: &Grid1D,
    names: &[String],
) -> Result<()> {
    let mut header = vec!["x"];
    header.extend(names.iter().map(String::as_str));
    let rows = (0..grid.len()).map(|p| {
        let mut row = vec![num(grid.x(p))];
        row.extend((0..state.species_count()).map(|j| num(state.species(j)[p])));
        row
    });
    out.csv(name, &header, rows)
}

fn write_snapshots(
    out: &mut Outputs,
    snaps: &[FieldState],
    grid: &Grid1D,
    names: &[String],
) -> Result<()> {
    let mut index = Vec::new();
    for (i, s) in snaps.iter().enumerate() {
        let file = format!("snapshot_{i:03}.csv");
        write_state(out, &file, s, grid, names)?;
        index.push(vec![i.to_string(), num(s.t()), file]);
    }
    out.csv("snapshots.csv", &["index", "t", "file"], index)
}

fn step_row(r: &StepRecord) -> Vec<String> {
    vec![
        num(r.t),
        num(r.dt),
        num(r.eps),
        num(r.err),
        opt(r.dt_star),
        opt(r.c0),
        opt(r.omega),
        r.accepted.to_string(),
        r.reason.map(|r| r.as_str().to_string()).unwrap_or_default(),
    ]
}

pub fn run(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let p = cfg.problem()?;
    let sp = &p.splitter;
    let ctl = cfg.controller.to_config();
    let result =
        run_adaptive(sp, &p.u0, p.t_end, &ctl, &cfg.output.snapshots).context("adaptive run")?;
    out.csv(
        "steps.csv",
        &[
            "t", "dt", "eps", "err", "dt_star", "C0", "omega", "accepted", "reason",
        ],
        result.log.iter().map(step_row),
    )?;
    write_snapshots(out, &result.snapshots, sp.grid(), sp.model().names())?;
    write_state(
        out,
        "final.csv",
        &result.final_state,
        sp.grid(),
        sp.model().names(),
    )?;

    let global = if cfg.reference.enabled {
        let reference = reference_solve(
            sp.model(),
            sp.grid(),
            &p.u0,
            p.t_end,
            &cfg.reference.to_config(),
        )
        .context("reference solve")?;
        Some(monitored_err(
            &result.final_state,
            &reference,
            &reference,
            sp.model(),
            sp.norm(),
        )?)
    } else {
        None
    };
    let accepted = result.log.iter().filter(|r| r.accepted).count();
    out.csv(
        "summary.csv",
        &["t_end", "eta", "accepted", "rejected", "global_error"],
        [vec![
            num(p.t_end),
            num(ctl.eta),
            accepted.to_string(),
            (result.log.len() - accepted).to_string(),
            opt(global),
        ]],
    )
}

pub fn reference(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let p = cfg.problem()?;
    let sp = &p.splitter;
    let times = if cfg.output.snapshots.is_empty() {
        vec![p.t_end]
    } else {
        cfg.output.snapshots.clone()
    };
    let snaps = reference_solve_at(
        sp.model(),
        sp.grid(),
        &p.u0,
        &times,
        &cfg.reference.to_config(),
    )
    .context("reference solve")?;
    write_snapshots(out, &snaps, sp.grid(), sp.model().names())
}

fn sweep_reference(cfg: &RunConfig) -> ReferenceConfig {
    ReferenceConfig {
        rtol: cfg.study.reference_tol,
        atol: cfg.study.reference_tol,
        ..cfg.reference.to_config()
    }
}

fn sweep_rows(sweep: &adasplit::analysis::SweepResult) -> Vec<Vec<String>> {
    sweep
        .rows()
        .iter()
        .map(|r| {
            vec![
                num(r.dt),
                num(r.exact_strang),
                num(r.exact_shifted),
                num(r.strang_shifted),
            ]
        })
        .collect()
}

const SWEEP_HEADER: [&str; 4] = [
    "dt",
    "exact_minus_strang",
    "exact_minus_shifted",
    "strang_minus_shifted",
];

pub fn study_order(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    let dts = cfg.study.step_list();
    let refcfg = sweep_reference(cfg);
    if cfg.model.name == ModelName::Kpp {
        for &k in &cfg.study.k {
            let (p, _) = cfg.kpp_problem(k)?;
            for &eps in &cfg.study.eps {
                let s = local_error_sweep(&p.splitter, &p.u0, &dts, eps, &refcfg)
                    .with_context(|| format!("sweep k = {k}, eps = {eps}"))?;
                out.csv(
                    &format!("sweep_k{k:e}_eps{eps:e}.csv"),
                    &SWEEP_HEADER,
                    sweep_rows(&s),
                )?;
            }
        }
    } else {
        let p = cfg.problem()?;
        for &eps in &cfg.study.eps {
            let s = local_error_sweep(&p.splitter, &p.u0, &dts, eps, &refcfg)
                .with_context(|| format!("sweep eps = {eps}"))?;
            out.csv(
                &format!("sweep_eps{eps:e}.csv"),
                &SWEEP_HEADER,
                sweep_rows(&s),
            )?;
        }
    }
    Ok(())
}

/// `(M1, M2)` of the unit KPP front, which fix the predicted critical step
/// for every `(k, D)`.
fn kpp_constants(cfg: &RunConfig) -> Result<(f64, f64)> {
    let base = cfg.kpp()?;
    let p = KppParams {
        k: 1.0,
        d: 1.0,
        ..base
    };
    let grid = p.grid()?;
    let u: Vec<f64> = grid
        .points()
        .iter()
        .map(|&x| kpp_exact_front(x, 0.0, &p))
        .collect();
    Ok(compute_m1_m2(&u, grid.dx(), &Kpp { k: 1.0 })?)
}

fn require_kpp(cfg: &RunConfig, what: &str) -> Result<()> {
    if cfg.model.name != ModelName::Kpp {
        bail!("{what} needs model.name = \"kpp\"");
    }
    Ok(())
}

pub fn study_dtstar(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    require_kpp(cfg, "study-dtstar")?;
    let (m1, m2) = kpp_constants(cfg)?;
    let refcfg = sweep_reference(cfg);
    let [lo, hi] = cfg.study.dtstar_span;
    let mut rows = Vec::new();
    for &k in &cfg.study.k {
        let (p, _) = cfg.kpp_problem(k)?;
        for &eps in &cfg.study.eps {
            let theory = dt_star_theory(m1, m2, eps, k);
            if !theory.is_finite() {
                bail!("no predicted critical step for k = {k}, eps = {eps}");
            }
            let dts = log_space(theory * lo, theory * hi, cfg.study.dtstar_points);
            let s = local_error_sweep(&p.splitter, &p.u0, &dts, eps, &refcfg)
                .with_context(|| format!("sweep k = {k}, eps = {eps}"))?;
            out.csv(
                &format!("sweep_k{k:e}_eps{eps:e}.csv"),
                &SWEEP_HEADER,
                sweep_rows(&s),
            )?;
            rows.push(vec![
                num(k),
                num(eps),
                opt(measure_dt_star(&s)),
                num(theory),
            ]);
        }
    }
    out.csv(
        "table.csv",
        &["k", "eps", "dt_star_measured", "dt_star_theory"],
        rows,
    )
}

pub fn theory(cfg: &RunConfig, out: &mut Outputs) -> Result<()> {
    require_kpp(cfg, "theory")?;
    let (m1, m2) = kpp_constants(cfg)?;
    let t = cfg.study.theory_t;
    let mut rows = Vec::new();
    for &k in &cfg.study.k {
        let (p, params) = cfg.kpp_problem(k)?;
        let grid = p.splitter.grid();
        for &eps in &cfg.study.eps {
            rows.push(vec![
                num(k),
                num(eps),
                num(m1),
                num(m2),
                num(dt_star_theory(m1, m2, eps, k)),
            ]);
            let lead = leading_error_strang(
                p.u0.values(),
                grid.dx(),
                &Kpp { k: 1.0 },
                k,
                params.d,
                eps,
                t,
            )?;
            let profile =
                (0..grid.len()).map(|i| vec![num(grid.x(i)), num(p.u0.values()[i]), num(lead[i])]);
            out.csv(
                &format!("leading_k{k:e}_eps{eps:e}.csv"),
                &["x", "u0", "leading"],
                profile,
            )?;
        }
    }
    out.csv(
        "theory.csv",
        &["k", "eps", "M1", "M2", "dt_star_theory"],
        rows,
    )
}
