//! Command-line front end: subcommands over theory files and the built-in
//! corpus. [`run`] returns the exit code and the report text so that the
//! golden tests can drive it without spawning processes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use bvcov::aksz::{build_covariant_theory, project_f, twist};
use bvcov::curved::{
    antifield_rank, gauge_flow_series, normalize_b, pullback_series, verify_flow_endpoint, Curved, Flow, FlowMode,
    SubstitutionTable,
};
use bvcov::gravity::{couple_gravity, spinning_pipeline};
use bvcov::models::MODEL_NAMES;
use bvcov::report::{Check, Report};
use bvcov::syntax::{parse, parse_expr_with, TheoryFile};
use bvcov::tw::global_report;
use bvcov::{Error, Expr, Q};
use clap::{Args, Parser, Subcommand, ValueEnum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_TRUNCATED: i32 = 3;

/// Built-in theory files, addressable by name.
pub const CORPUS: &[(&str, &str)] = &[
    ("particle_flat", include_str!("../corpus/particle_flat.bv")),
    ("particle_twist", include_str!("../corpus/particle_twist.bv")),
    ("magnetic_particle", include_str!("../corpus/magnetic_particle.bv")),
    ("flat_spinning", include_str!("../corpus/flat_spinning.bv")),
    ("cylinder_flux", include_str!("../corpus/cylinder_flux.bv")),
    ("cylinder_three", include_str!("../corpus/cylinder_three.bv")),
    ("cylinder_broken", include_str!("../corpus/cylinder_broken.bv")),
];

#[derive(Parser, Debug)]
#[command(name = "bvcov", version, about = "Exact BV, AKSZ and Thom-Whitney checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Theory file, built-in corpus entry or library model name.
    pub file: String,
    /// Run the named entry of the file's [checks] section.
    #[arg(long)]
    pub check: Option<String>,
    #[arg(long, default_value_t = 8)]
    pub max_order: usize,
    /// Highest simplex dimension of the nerve.
    #[arg(long, default_value_t = 2)]
    pub dim_bound: usize,
    #[arg(long, value_enum, default_value_t = Toggle::On)]
    pub relations: Toggle,
    /// Metric diagonal for a bare model name, e.g. `-1,1`.
    #[arg(long, allow_hyphen_values = true)]
    pub metric: Option<String>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Toggle {
    On,
    Off,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Gauge,
    Pullback,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Maurer-Cartan residual `uD + d_u S + ½[S,S]` of a named expression.
    CheckMc {
        #[command(flatten)]
        common: Common,
        expr: Option<String>,
        /// Complete an element of F[[u]] by its ε-part first.
        #[arg(long)]
        lift: bool,
    },
    /// Soloviev bracket of two named expressions (`--b` for the bracket on B).
    Bracket {
        #[command(flatten)]
        common: Common,
        a: Option<String>,
        b: Option<String>,
        #[arg(long = "b")]
        on_b: bool,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Flow generated by a named expression: its table on generators, the
    /// pullback `exp(τ ad y) f` (`--apply-to`), or the gauge flow `x •τ y` (`--gauge`).
    Flow {
        #[command(flatten)]
        common: Common,
        generator: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        tau: Option<String>,
        #[arg(long)]
        apply_to: Option<String>,
        #[arg(long)]
        gauge: Option<String>,
        #[arg(long)]
        expect: Option<String>,
    },
    /// Certify a closed-form family against the flow equation.
    VerifyEndpoint {
        #[command(flatten)]
        common: Common,
        x: Option<String>,
        family: Option<String>,
        y: Option<String>,
        #[arg(long, value_enum, default_value_t = Mode::Gauge)]
        mode: Mode,
    },
    /// Twist `S • u⁻¹W`; `S` defaults to the covariant theory of the chart.
    Twist {
        #[command(flatten)]
        common: Common,
        w: Option<String>,
        #[arg(long)]
        s: Option<String>,
    },
    /// Covariant theory `S_0 + uS_1` of the chart and its MC residual.
    BuildAksz {
        #[command(flatten)]
        common: Common,
    },
    /// Couple the chart to world-line gravity.
    CoupleGravity {
        #[command(flatten)]
        common: Common,
    },
    /// Couple the chart to world-line supergravity through its supercharge.
    Spinning {
        #[command(flatten)]
        common: Common,
    },
    /// Global MC equation of the Thom-Whitney theory of the [cover] section.
    TwCheck {
        #[command(flatten)]
        common: Common,
    },
    /// Canonical form of a named expression.
    Normalize {
        #[command(flatten)]
        common: Common,
        expr: Option<String>,
    },
    /// Antifield rank of a named expression.
    Rank {
        #[command(flatten)]
        common: Common,
        expr: Option<String>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::CheckMc { .. } => "check-mc",
            Command::Bracket { .. } => "bracket",
            Command::Flow { .. } => "flow",
            Command::VerifyEndpoint { .. } => "verify-endpoint",
            Command::Twist { .. } => "twist",
            Command::BuildAksz { .. } => "build-aksz",
            Command::CoupleGravity { .. } => "couple-gravity",
            Command::Spinning { .. } => "spinning",
            Command::TwCheck { .. } => "tw-check",
            Command::Normalize { .. } => "normalize",
            Command::Rank { .. } => "rank",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::CheckMc { common, .. }
            | Command::Bracket { common, .. }
            | Command::Flow { common, .. }
            | Command::VerifyEndpoint { common, .. }
            | Command::Twist { common, .. }
            | Command::BuildAksz { common }
            | Command::CoupleGravity { common }
            | Command::Spinning { common }
            | Command::TwCheck { common }
            | Command::Normalize { common, .. }
            | Command::Rank { common, .. } => common,
        }
    }

    /// Whether the invocation names its operands (rather than deferring to [checks]).
    fn has_operands(&self) -> bool {
        match self {
            Command::CheckMc { expr, .. } | Command::Normalize { expr, .. } | Command::Rank { expr, .. } => {
                expr.is_some()
            }
            Command::Bracket { a, .. } => a.is_some(),
            Command::Flow { generator, .. } => generator.is_some(),
            Command::VerifyEndpoint { x, .. } => x.is_some(),
            Command::Twist { w, .. } => w.is_some(),
            _ => false,
        }
    }
}

/// Outcome of one invocation.
#[derive(Debug)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

enum Failure {
    Usage(String),
    Truncated(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Syntax { .. } | Error::SymbolUnknown(_) => Failure::Usage(e.to_string()),
            Error::CompletionRequired(_) => Failure::Truncated(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn load(c: &Common) -> Res<TheoryFile> {
    let src = if Path::new(&c.file).is_file() {
        std::fs::read_to_string(&c.file).map_err(|e| Failure::Usage(format!("{}: {e}", c.file)))?
    } else if let Some((_, s)) = CORPUS.iter().find(|(n, _)| *n == c.file) {
        s.to_string()
    } else if MODEL_NAMES.contains(&c.file.as_str()) {
        let metric = c.metric.clone().unwrap_or_else(|| "1".into());
        format!("[theory]\nname = {}\nmetric = {metric}\n[chart]\nmodel = {}\n", c.file, c.file)
    } else {
        return Err(Failure::Usage(format!("no theory file, corpus entry or model named `{}`", c.file)));
    };
    Ok(parse(&src)?)
}

struct Ctx<'a> {
    file: &'a TheoryFile,
    common: &'a Common,
    named: BTreeMap<String, Expr>,
}

impl<'a> Ctx<'a> {
    fn new(file: &'a TheoryFile, common: &'a Common) -> Self {
        let named = file.expressions.iter().cloned().collect();
        Ctx { file, common, named }
    }

    /// A named expression or an inline one.
    fn expr(&self, src: &str) -> Res<Expr> {
        let e = match self.named.get(src) {
            Some(e) => e.clone(),
            None => parse_expr_with(src, &self.file.theory, &self.named)?,
        };
        if self.common.relations == Toggle::On {
            Ok(self.file.theory.apply_relations(&e)?)
        } else {
            Ok(e)
        }
    }

    fn arg(&self, v: &Option<String>, what: &str) -> Res<Expr> {
        match v {
            Some(s) => self.expr(s),
            None => Err(Failure::Usage(format!("missing operand: {what}"))),
        }
    }

    fn rel(&self, e: &Expr) -> Res<Expr> {
        if self.common.relations == Toggle::On {
            Ok(self.file.theory.apply_relations(e)?)
        } else {
            Ok(e.clone())
        }
    }
}

fn parse_tau(s: &str) -> Res<Q> {
    let e = bvcov::syntax::parse_expr(s, &bvcov::theory::Theory::new("tau"))?;
    e.as_constant().ok_or_else(|| Failure::Usage(format!("--tau needs a rational, got `{s}`")))
}

fn value(r: &mut Report, name: &str, e: &Expr) {
    r.push(Check::value(name, e));
}

fn expect(r: &mut Report, ctx: &Ctx, got: &Expr, want: &Option<String>) -> Res<()> {
    if let Some(w) = want {
        r.push(Check::equal(&format!("expect {w}"), got, &ctx.expr(w)?));
    }
    Ok(())
}

fn execute(cmd: &Command, file: &TheoryFile) -> Res<Report> {
    let common = cmd.common();
    let ctx = Ctx::new(file, common);
    let th = &file.theory;
    let mut r = Report::new(&format!("{} {}", cmd.name(), file.name));
    match cmd {
        Command::CheckMc { expr, lift, .. } => {
            let name = expr.clone().unwrap_or_else(|| "S".into());
            let b = Curved::new(th);
            let mut s = ctx.expr(&name)?;
            if *lift {
                s = b.lift(&s)?;
                value(&mut r, "lifted", &s);
            }
            r.push(Check::zero("mc", &ctx.rel(&b.mc_residual(&s))?));
        }
        Command::Bracket { a, b, on_b, expect: want, .. } => {
            let (x, y) = (ctx.arg(a, "first expression")?, ctx.arg(b, "second expression")?);
            let v = if *on_b { Curved::new(th).b_bracket(&x, &y) } else { bvcov::varcalc::soloviev(th, &x, &y) };
            let v = ctx.rel(&v)?;
            value(&mut r, "bracket", &v);
            expect(&mut r, &ctx, &v, want)?;
        }
        Command::Flow { generator, tau, apply_to, gauge, expect: want, .. } => {
            let y = ctx.arg(generator, "generator")?;
            let at = tau.as_deref().map(parse_tau).transpose()?;
            let eval = |f: &Flow| -> Res<Expr> {
                if !f.terminated {
                    return Err(Failure::Truncated(format!("series not terminated after {} terms", f.order)));
                }
                Ok(match &at {
                    Some(t) => f.at(t)?,
                    None => f.family.clone(),
                })
            };
            if let Some(x) = gauge {
                let b = Curved::new(th);
                let f = gauge_flow_series(&b, &ctx.expr(x)?, &y, common.max_order);
                let v = ctx.rel(&eval(&f)?)?;
                value(&mut r, "gauge_flow", &v);
                expect(&mut r, &ctx, &v, want)?;
            } else {
                let alg = Curved::with_zero_differential(th);
                // Series first; generators with log(..) need the closed-form table.
                let table = || SubstitutionTable::for_generator(th, &y, 1, common.max_order);
                match apply_to {
                    Some(f) => {
                        let f = ctx.expr(f)?;
                        let fl = pullback_series(&alg, &f, &y, common.max_order);
                        let fl = if fl.terminated { fl } else { Flow { family: table()?.apply(&f)?, ..fl } .closed() };
                        let v = ctx.rel(&eval(&fl)?)?;
                        value(&mut r, "pullback", &v);
                        expect(&mut r, &ctx, &v, want)?;
                    }
                    None => {
                        let tab = table();
                        for g in th.fields().iter().chain(th.antifields()) {
                            let fl = pullback_series(&alg, &Expr::symbol(g), &y, common.max_order);
                            let fl = match (&tab, fl.terminated) {
                                (_, true) => fl,
                                (Ok(t), false) => Flow {
                                    family: t.images.get(g).cloned().unwrap_or_else(|| Expr::symbol(g)),
                                    ..fl
                                }
                                .closed(),
                                (Err(_), false) => fl,
                            };
                            let v = eval(&fl)?;
                            if v != Expr::symbol(g) {
                                value(&mut r, &g.to_string(), &v);
                            }
                        }
                    }
                }
            }
        }
        Command::VerifyEndpoint { x, family, y, mode, .. } => {
            let (x, f, y) = (ctx.arg(x, "x")?, ctx.arg(family, "family")?, ctx.arg(y, "generator")?);
            let (alg, m) = match mode {
                Mode::Gauge => (Curved::new(th), FlowMode::Gauge),
                Mode::Pullback => (Curved::with_zero_differential(th), FlowMode::Pullback),
            };
            let chk = verify_flow_endpoint(&alg, &x, &f, &y, m)?;
            r.push(Check::zero("flow_equation", &ctx.rel(&chk.ode_residual)?));
            r.push(Check::zero("initial_value", &chk.initial_residual));
        }
        Command::Twist { w, s, .. } => {
            let w = ctx.arg(w, "W")?;
            let s = match s {
                Some(s) => ctx.expr(s)?,
                None => build_covariant_theory(&file.target()?)?.s_u(),
            };
            let b = Curved::new(th);
            let out = twist(&b, &s, &w)?;
            value(&mut r, "twisted", &out);
            r.push(Check::zero("mc_input", &ctx.rel(&b.mc_residual(&s))?));
            r.push(Check::zero("mc_twisted", &ctx.rel(&b.mc_residual(&out))?));
        }
        Command::BuildAksz { .. } => {
            let t = file.target()?;
            let a = build_covariant_theory(&t)?;
            value(&mut r, "S0", &a.s0);
            value(&mut r, "S1", &a.s1);
            let mut jac = Vec::new();
            for (i, j, k, e) in a.poisson.jacobi_residuals() {
                if !ctx.rel(&e)?.is_zero_rational() {
                    jac.push(format!("({i},{j},{k})"));
                }
            }
            r.push(Check::flag("jacobi", jac.is_empty(), if jac.is_empty() { "Poisson tensor".into() } else { jac.join(" ") }));
            r.push(Check::zero("mc", &ctx.rel(&Curved::new(&t.theory).mc_residual(&a.s_u()))?));
        }
        Command::CoupleGravity { .. } => {
            let t = file.target()?;
            let cg = couple_gravity(&t, file.potential()?.as_ref())?;
            r.extend(cg.report);
            value(&mut r, "result", &cg.result);
        }
        Command::Spinning { .. } => {
            let t = file.target()?;
            let q = file
                .supercharge()?
                .ok_or_else(|| Failure::Usage("spinning needs a supercharge in [chart]".into()))?;
            let sp = spinning_pipeline(&t, &q, -1)?;
            r.extend(sp.report.clone());
            value(&mut r, "action", &sp.action);
        }
        Command::TwCheck { .. } => {
            let data = file.global_data(common.dim_bound)?;
            r.extend(global_report(&data)?);
        }
        Command::Normalize { expr, .. } => {
            let e = ctx.arg(expr, "expression")?;
            value(&mut r, "normal_form", &normalize_b(&e));
            value(&mut r, "f_part", &project_f(&e));
        }
        Command::Rank { expr, .. } => {
            let e = ctx.arg(expr, "expression")?;
            r.push(Check::value("rank", &Expr::int(antifield_rank(&e) as i64)));
        }
    }
    Ok(r)
}

/// Rebuild the command from a [checks] entry, keeping the global options.
fn from_check(cmd: &Command, name: &str, args: &[String]) -> Res<Command> {
    let c = cmd.common();
    let mut argv: Vec<String> = vec!["bvcov".into(), args[0].clone(), c.file.clone()];
    argv.extend(args[1..].iter().cloned());
    argv.extend(["--max-order".into(), c.max_order.to_string(), "--dim-bound".into(), c.dim_bound.to_string()]);
    argv.extend(["--relations".into(), if c.relations == Toggle::On { "on" } else { "off" }.into()]);
    if args[0] != cmd.name() {
        return Err(Failure::Usage(format!("check `{name}` is a `{}` check, not `{}`", args[0], cmd.name())));
    }
    Cli::try_parse_from(argv).map(|c| c.command).map_err(|e| Failure::Usage(format!("check `{name}`: {e}")))
}

fn run_command(cmd: &Command) -> Outcome {
    let mut out = String::new();
    let res = (|| -> Res<bool> {
        let file = load(cmd.common())?;
        let mut jobs: Vec<(Option<String>, Command)> = Vec::new();
        if let Some(name) = &cmd.common().check {
            let args = file.check(name).ok_or_else(|| Failure::Usage(format!("unknown check `{name}`")))?;
            jobs.push((Some(name.clone()), from_check(cmd, name, args)?));
        } else if !cmd.has_operands() && file.checks.iter().any(|(_, a)| a[0] == cmd.name()) {
            for (name, args) in file.checks.iter().filter(|(_, a)| a[0] == cmd.name()) {
                jobs.push((Some(name.clone()), from_check(cmd, name, args)?));
            }
        }
        if jobs.is_empty() {
            let r = execute(cmd, &file)?;
            write!(out, "{r}").unwrap();
            return Ok(r.ok());
        }
        let mut ok = true;
        for (name, job) in &jobs {
            let mut r = execute(job, &file)?;
            if let Some(n) = name {
                r.title = format!("{} [{n}]", r.title);
            }
            write!(out, "{r}").unwrap();
            ok &= r.ok();
        }
        Ok(ok)
    })();
    let code = match res {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_FAIL,
        Err(Failure::Usage(m)) => {
            writeln!(out, "error: {m}").unwrap();
            EXIT_USAGE
        }
        Err(Failure::Truncated(m)) => {
            writeln!(out, "TRUNCATED: {m}").unwrap();
            EXIT_TRUNCATED
        }
        Err(Failure::Other(m)) => {
            writeln!(out, "error: {m}").unwrap();
            EXIT_FAIL
        }
    };
    Outcome { code, output: out }
}

/// Parse `argv` (including the program name) and run it.
pub fn run<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(argv) {
        Ok(cli) => run_command(&cli.command),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            Outcome { code, output: e.to_string() }
        }
    }
}
