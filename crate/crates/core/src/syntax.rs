//! ASCII input language: expressions and theory files.
//!
//! Expressions are infix with `+ - * / ^`, rational literals, `d(x)` and
//! `d^k(x)` for jets, a `+` suffix for antifields (`x+`, `x+_1`), the
//! reserved generators `eps`, `u`, `tau`, `t_i`, `dt_i`, function symbols
//! by name with derivatives written `D[x_1,x_2](A_1)`, and `inv(..)`,
//! `log(..)`, `pow(base, r)` with `r` affine in `tau`. The canonical
//! rendering ([`Expr`]'s `Display`) parses back to the same expression.
//!
//! A `+` glued to an antifield-capable name is read as the antifield suffix
//! when it is followed by `_`, an operator, `)`, `,`, whitespace or the end
//! of input; write `x + y` (or `x+y` when `y` starts a name) for a sum.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;

use crate::aksz::Target;
use crate::error::{Error, Result};
use crate::expr::{q, Exponent, Expr, Q};
use crate::models::{model, MODEL_NAMES};
use crate::symbol::Symbol;
use crate::theory::Theory;
use crate::tw::{CechCochain, Cover, GlobalData};

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax { line, col, msg: msg.into() }
}

struct Parser<'a> {
    s: Vec<char>,
    pos: usize,
    line: usize,
    theory: &'a Theory,
    named: &'a BTreeMap<String, Expr>,
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> Error {
        syntax(self.line, self.pos + 1, msg)
    }

    fn peek(&self) -> Option<char> {
        self.s.get(self.pos).copied()
    }

    fn ws(&mut self) {
        while matches!(self.peek(), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> bool {
        self.ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        self.ws();
        let mut acc = if self.eat('-') { -self.term()? } else { self.term()? };
        loop {
            if self.eat('+') {
                acc = acc + self.term()?;
            } else if self.eat('-') {
                acc = acc - self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let at = self.pos;
                let d = self.unary()?;
                match d.as_constant() {
                    Some(c) if !c.is_zero() => acc = acc.scale(&c.recip()),
                    _ => return Err(syntax(self.line, at + 1, "only division by a nonzero rational; use inv(..)")),
                }
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        let (base, sym) = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let n = self.int()?;
        if n >= 0 {
            return Ok(base.pow_int(n as u32));
        }
        match sym {
            Some(s) if s == Symbol::u() => Ok(Expr::symbol_pow(&s, n as i32)),
            _ => Expr::pow(&base, &Exponent::int(n)).map_err(|e| self.err(e.to_string())),
        }
    }

    fn int(&mut self) -> Result<i64> {
        self.ws();
        let paren = self.eat('(');
        self.ws();
        let neg = self.eat('-');
        self.ws();
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected an integer exponent"));
        }
        let v: i64 = self.s[start..self.pos].iter().collect::<String>().parse().map_err(|_| self.err("exponent too large"))?;
        if paren {
            self.expect(')')?;
        }
        Ok(if neg { -v } else { v })
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let n: num_bigint::BigInt =
            self.s[start..self.pos].iter().collect::<String>().parse().map_err(|_| self.err("bad number"))?;
        Ok(Expr::constant(Q::from_integer(n)))
    }

    fn name(&mut self) -> Result<String> {
        self.ws();
        let start = self.pos;
        if !matches!(self.peek(), Some(c) if is_name_start(c)) {
            return Err(self.err("expected a name"));
        }
        while matches!(self.peek(), Some(c) if is_name_char(c)) {
            self.pos += 1;
        }
        let mut n: String = self.s[start..self.pos].iter().collect();
        // antifield suffix
        if self.peek() == Some('+') {
            let next = self.s.get(self.pos + 1).copied();
            let suffix = match next {
                None => true,
                Some(c) => c == '_' || c.is_whitespace() || "*/^),+-".contains(c),
            };
            let stem_ok = self.theory.fields().iter().any(|f| f.name() == n || f.name().starts_with(&format!("{n}_")));
            if suffix && stem_ok {
                self.pos += 1;
                n.push('+');
                while matches!(self.peek(), Some(c) if is_name_char(c)) {
                    self.pos += 1;
                    n.push(self.s[self.pos - 1]);
                }
            }
        }
        Ok(n)
    }

    fn symbol(&self, n: &str, at: usize) -> Result<Symbol> {
        match n {
            "eps" => return Ok(Symbol::epsilon()),
            "u" => return Ok(Symbol::u()),
            "tau" => return Ok(Symbol::tau()),
            _ => {}
        }
        if let Some(i) = n.strip_prefix("dt_").and_then(|i| i.parse().ok()) {
            return Ok(Symbol::simplex_dt(i));
        }
        if let Some(i) = n.strip_prefix("t_").and_then(|i| i.parse().ok()) {
            return Ok(Symbol::simplex_t(i));
        }
        self.theory.lookup(n).ok_or_else(|| syntax(self.line, at + 1, format!("unknown symbol `{n}`")))
    }

    /// An atom, plus the generator it is when it is a bare one.
    fn atom(&mut self) -> Result<(Expr, Option<Symbol>)> {
        self.ws();
        let at = self.pos;
        match self.peek() {
            None => return Err(self.err("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(')')?;
                return Ok((e, None));
            }
            Some(c) if c.is_ascii_digit() => return Ok((self.number()?, None)),
            Some(c) if !is_name_start(c) => return Err(self.err(format!("unexpected `{c}`"))),
            _ => {}
        }
        let n = self.name()?;
        let next = self.peek();
        match n.as_str() {
            "d" if matches!(next, Some('(' | '^')) => {
                let k = if self.eat('^') { self.int()? } else { 1 };
                if k < 1 {
                    return Err(self.err("jet order must be positive"));
                }
                self.expect('(')?;
                let at = self.pos;
                let inner = self.name()?;
                let s = self.symbol(&inner, at)?;
                self.expect(')')?;
                if !self.theory.contains(&s) {
                    return Err(syntax(self.line, at + 1, format!("`{inner}` has no jets")));
                }
                let j = s.with_jet(s.jet_order() + k as u32);
                Ok((Expr::symbol(&j), Some(j)))
            }
            "D" if next == Some('[') => {
                self.expect('[')?;
                let mut vars = Vec::new();
                loop {
                    vars.push(self.name()?);
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect(']')?;
                self.expect('(')?;
                let fat = self.pos;
                let fname = self.name()?;
                self.expect(')')?;
                let mut f = self
                    .theory
                    .function(&fname)
                    .cloned()
                    .ok_or_else(|| syntax(self.line, fat + 1, format!("unknown function `{fname}`")))?;
                for v in vars {
                    let i = f
                        .args()
                        .iter()
                        .position(|a| a.name() == v)
                        .ok_or_else(|| self.err(format!("`{fname}` does not depend on `{v}`")))?;
                    f = f.differentiate(i);
                }
                Ok((Expr::func(&f), None))
            }
            "inv" | "log" if next == Some('(') => {
                self.expect('(')?;
                let e = self.expr()?;
                self.expect(')')?;
                let r = if n == "inv" { Expr::inv(&e) } else { Expr::log(&e) };
                Ok((r.map_err(|e| syntax(self.line, at + 1, e.to_string()))?, None))
            }
            "pow" if next == Some('(') => {
                self.expect('(')?;
                let b = self.expr()?;
                self.expect(',')?;
                let rat = self.pos;
                let r = self.expr()?;
                self.expect(')')?;
                let mut co = r.coefficients_of(&Symbol::tau());
                let c0 = co.remove(&0).unwrap_or_else(Expr::zero).as_constant();
                let c1 = co.remove(&1).unwrap_or_else(Expr::zero).as_constant();
                let (Some(c0), Some(c1), true) = (c0, c1, co.is_empty()) else {
                    return Err(syntax(self.line, rat + 1, "exponent must be affine in tau"));
                };
                let e = Expr::pow(&b, &Exponent::affine(c1, c0)).map_err(|e| syntax(self.line, at + 1, e.to_string()))?;
                Ok((e, None))
            }
            _ => {
                if let Some(f) = self.theory.function(&n) {
                    return Ok((Expr::func(f), None));
                }
                if let Some(e) = self.named.get(&n) {
                    return Ok((e.clone(), None));
                }
                let s = self.symbol(&n, at)?;
                Ok((Expr::symbol(&s), Some(s)))
            }
        }
    }
}

fn parse_at(src: &str, line: usize, col0: usize, theory: &Theory, named: &BTreeMap<String, Expr>) -> Result<Expr> {
    if let Some(i) = src.chars().position(|c| !c.is_ascii()) {
        return Err(syntax(line, col0 + i + 1, "non-ASCII character"));
    }
    let mut p = Parser { s: src.chars().collect(), pos: 0, line, theory, named };
    let e = p.expr().map_err(|e| match e {
        Error::Syntax { line, col, msg } => Error::Syntax { line, col: col + col0, msg },
        other => other,
    })?;
    p.ws();
    if p.pos != p.s.len() {
        return Err(syntax(line, col0 + p.pos + 1, format!("unexpected `{}`", p.s[p.pos])));
    }
    Ok(e)
}

/// Parse one expression against the symbols of `theory`.
pub fn parse_expr(src: &str, theory: &Theory) -> Result<Expr> {
    parse_at(src, 1, 0, theory, &BTreeMap::new())
}

/// Parse with previously named expressions in scope.
pub fn parse_expr_with(src: &str, theory: &Theory, named: &BTreeMap<String, Expr>) -> Result<Expr> {
    parse_at(src, 1, 0, theory, named)
}

/// Per-chart data of a `[cover]` section.
#[derive(Clone, Debug, Default)]
pub struct CoverSpec {
    pub charts: Vec<String>,
    pub nu: Vec<(usize, Symbol, Expr)>,
    pub mu: Vec<(usize, usize, Expr)>,
}

/// A parsed theory file.
#[derive(Clone, Debug)]
pub struct TheoryFile {
    pub name: String,
    pub metric: Vec<Q>,
    pub model: Option<String>,
    pub theory: Theory,
    pub nu: Vec<(Symbol, Expr)>,
    pub potential: Option<Expr>,
    pub supercharge: Option<Expr>,
    pub expressions: Vec<(String, Expr)>,
    pub cover: Option<CoverSpec>,
    /// `name = subcommand args…`, whitespace-normalized.
    pub checks: Vec<(String, Vec<String>)>,
}

impl TheoryFile {
    pub fn expression(&self, name: &str) -> Result<&Expr> {
        self.expressions
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, e)| e)
            .ok_or_else(|| Error::SymbolUnknown(format!("expression `{name}`")))
    }

    pub fn check(&self, name: &str) -> Option<&[String]> {
        self.checks.iter().find(|(n, _)| n == name).map(|(_, a)| a.as_slice())
    }

    /// The target chart: the library model, overlaid with explicit `nu` lines.
    pub fn target(&self) -> Result<Target> {
        let mut t = match &self.model {
            Some(m) => model(m, &self.metric)?.target,
            None => Target::new(self.theory.clone()),
        };
        t.theory = self.theory.clone();
        for (s, e) in &self.nu {
            t.set_nu(s, e.clone());
        }
        if t.nu.is_empty() {
            return Err(Error::Precondition("no one-form given in [chart]".into()));
        }
        Ok(t)
    }

    pub fn potential(&self) -> Result<Option<Expr>> {
        Ok(match (&self.potential, &self.model) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(m)) => model(m, &self.metric)?.potential,
            _ => None,
        })
    }

    pub fn supercharge(&self) -> Result<Option<Expr>> {
        Ok(match (&self.supercharge, &self.model) {
            (Some(p), _) => Some(p.clone()),
            (None, Some(m)) => model(m, &self.metric)?.supercharge,
            _ => None,
        })
    }

    /// Global data of the `[cover]` section on a complete nerve up to `dim_bound`.
    pub fn global_data(&self, dim_bound: usize) -> Result<GlobalData> {
        let spec = self.cover.as_ref().ok_or_else(|| Error::Precondition("no [cover] section".into()))?;
        let names: Vec<&str> = spec.charts.iter().map(|s| s.as_str()).collect();
        let cover = Cover::complete(&names, dim_bound);
        let base = if self.nu.is_empty() && self.model.is_none() { None } else { Some(self.target()?) };
        let mut targets: Vec<Target> =
            (0..names.len()).map(|_| base.clone().unwrap_or_else(|| Target::new(self.theory.clone()))).collect();
        for (i, s, e) in &spec.nu {
            targets[*i].set_nu(s, e.clone());
        }
        let mut mu = CechCochain::new(1);
        for (i, j, e) in &spec.mu {
            if i < j {
                mu.set(&[*i, *j], e.clone());
            } else {
                mu.set(&[*j, *i], -e.clone());
            }
        }
        Ok(GlobalData { cover, targets, mu })
    }
}

fn parse_q(s: &str, line: usize) -> Result<Q> {
    let s = s.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(b) => (true, b.trim()),
        None => (false, s),
    };
    let v = match body.split_once('/') {
        Some((a, b)) => {
            let a: num_bigint::BigInt = a.trim().parse().map_err(|_| syntax(line, 1, format!("bad rational `{s}`")))?;
            let b: num_bigint::BigInt = b.trim().parse().map_err(|_| syntax(line, 1, format!("bad rational `{s}`")))?;
            if b == num_bigint::BigInt::from(0) {
                return Err(syntax(line, 1, "zero denominator"));
            }
            Q::new(a, b)
        }
        None => Q::from_integer(body.parse().map_err(|_| syntax(line, 1, format!("bad rational `{s}`")))?),
    };
    Ok(if neg { -v } else { v })
}

/// Expand `stem_1..n` to `stem_1, …, stem_n`.
fn expand_range(item: &str, n: usize) -> Vec<String> {
    match item.strip_suffix("_1..n") {
        Some(stem) => (1..=n).map(|i| format!("{stem}_{i}")).collect(),
        None => vec![item.to_string()],
    }
}

fn split_eq(rest: &str, line: usize) -> Result<(&str, &str, usize)> {
    let i = rest.find('=').ok_or_else(|| syntax(line, 1, "expected `name = …`"))?;
    Ok((rest[..i].trim(), &rest[i + 1..], i + 1))
}

/// Parse a theory file.
pub fn parse(src: &str) -> Result<TheoryFile> {
    let mut f = TheoryFile {
        name: "theory".into(),
        metric: vec![q(1)],
        model: None,
        theory: Theory::new("theory"),
        nu: Vec::new(),
        potential: None,
        supercharge: None,
        expressions: Vec::new(),
        cover: None,
        checks: Vec::new(),
    };
    let mut named: BTreeMap<String, Expr> = BTreeMap::new();
    let mut section = String::new();
    let mut declared = false;
    for (ln, raw) in src.lines().enumerate() {
        let line = ln + 1;
        let text = raw.split('#').next().unwrap_or("");
        let indent = text.len() - text.trim_start().len();
        let text = text.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(s) = text.strip_prefix('[') {
            section = s.strip_suffix(']').ok_or_else(|| syntax(line, text.len(), "expected `]`"))?.to_string();
            if !["theory", "fields", "functions", "relations", "chart", "expressions", "cover", "checks"]
                .contains(&section.as_str())
            {
                return Err(syntax(line, 2, format!("unknown section `{section}`")));
            }
            continue;
        }
        let expr_at = |body: &str, off: usize, th: &Theory, named: &BTreeMap<String, Expr>| {
            parse_at(body, line, indent + off, th, named)
        };
        match section.as_str() {
            "theory" => {
                let (k, v, _) = split_eq(text, line)?;
                match k {
                    "name" => {
                        f.name = v.trim().to_string();
                        f.theory.name = f.name.clone();
                    }
                    "metric" => {
                        if declared {
                            return Err(syntax(line, 1, "metric must precede declarations"));
                        }
                        f.metric = v.split(',').map(|x| parse_q(x, line)).collect::<Result<_>>()?;
                        if f.metric.is_empty() {
                            return Err(syntax(line, 1, "empty metric"));
                        }
                        f.theory.set_metric(f.metric.clone());
                    }
                    _ => return Err(syntax(line, indent + 1, format!("unknown key `{k}`"))),
                }
            }
            "fields" => {
                if f.model.is_some() {
                    return Err(syntax(line, 1, "fields come from the model"));
                }
                declared = true;
                let parts: Vec<&str> = text.split_whitespace().collect();
                let [name, ghost, parity] = parts.as_slice() else {
                    return Err(syntax(line, indent + 1, "expected `name ghost parity`"));
                };
                let ghost: i32 = ghost.parse().map_err(|_| syntax(line, indent + 1, "bad ghost number"))?;
                let parity = match *parity {
                    "even" | "0" => 0,
                    "odd" | "1" => 1,
                    p => return Err(syntax(line, indent + 1, format!("bad parity `{p}`"))),
                };
                for n in expand_range(name, f.theory.dim()) {
                    f.theory.add_field(&n, ghost, parity).map_err(|e| syntax(line, indent + 1, e.to_string()))?;
                }
            }
            "functions" => {
                if f.model.is_some() {
                    return Err(syntax(line, 1, "functions come from the model"));
                }
                declared = true;
                let (head, args) = text.split_once('(').ok_or_else(|| syntax(line, indent + 1, "expected `F(args)`"))?;
                let args = args.strip_suffix(')').ok_or_else(|| syntax(line, text.len(), "expected `)`"))?;
                let mut syms = Vec::new();
                for a in args.split(',').map(str::trim).filter(|a| !a.is_empty()) {
                    for n in expand_range(a, f.theory.dim()) {
                        syms.push(f.theory.field(&n).map_err(|e| syntax(line, indent + 1, e.to_string()))?);
                    }
                }
                for n in expand_range(head.trim(), f.theory.dim()) {
                    f.theory.add_function(&n, &syms).map_err(|e| syntax(line, indent + 1, e.to_string()))?;
                }
            }
            "relations" => {
                let (k, v, off) = split_eq(text, line)?;
                let e = expr_at(v, off, &f.theory, &named)?;
                f.theory.add_relation(k, e).map_err(|e| syntax(line, indent + 1, e.to_string()))?;
            }
            "chart" => {
                let (k, v, off) = split_eq(text, line)?;
                let words: Vec<&str> = k.split_whitespace().collect();
                match words.as_slice() {
                    ["model"] => {
                        if declared {
                            return Err(syntax(line, 1, "model must precede declarations"));
                        }
                        let m = v.trim();
                        if !MODEL_NAMES.contains(&m) {
                            return Err(syntax(line, indent + off + 1, format!("unknown model `{m}`")));
                        }
                        f.model = Some(m.to_string());
                        f.theory = model(m, &f.metric)?.target.theory;
                        f.theory.name = f.name.clone();
                        declared = true;
                    }
                    ["nu", s] => {
                        let at = indent + 1;
                        let sym = f.theory.field(s).map_err(|e| syntax(line, at, e.to_string()))?;
                        let e = expr_at(v, off, &f.theory, &named)?;
                        f.nu.push((sym, e));
                    }
                    ["potential"] => f.potential = Some(expr_at(v, off, &f.theory, &named)?),
                    ["supercharge"] => f.supercharge = Some(expr_at(v, off, &f.theory, &named)?),
                    _ => return Err(syntax(line, indent + 1, format!("unknown chart entry `{k}`"))),
                }
            }
            "expressions" => {
                let (k, v, off) = split_eq(text, line)?;
                if k.is_empty() || !k.chars().all(is_name_char) {
                    return Err(syntax(line, indent + 1, format!("bad expression name `{k}`")));
                }
                let e = expr_at(v, off, &f.theory, &named)?;
                named.insert(k.to_string(), e.clone());
                f.expressions.retain(|(n, _)| n != k);
                f.expressions.push((k.to_string(), e));
            }
            "cover" => {
                let spec = f.cover.get_or_insert_with(CoverSpec::default);
                let (k, v, off) = split_eq(text, line)?;
                let words: Vec<&str> = k.split_whitespace().collect();
                let chart = |n: &str, spec: &CoverSpec| {
                    spec.charts
                        .iter()
                        .position(|c| c == n)
                        .ok_or_else(|| syntax(line, indent + 1, format!("unknown chart `{n}`")))
                };
                match words.as_slice() {
                    ["charts"] => spec.charts = v.split(',').map(|c| c.trim().to_string()).collect(),
                    ["nu", c, s] => {
                        let i = chart(c, spec)?;
                        let sym = f.theory.field(s).map_err(|e| syntax(line, indent + 1, e.to_string()))?;
                        let e = parse_at(v, line, indent + off, &f.theory, &named)?;
                        spec.nu.push((i, sym, e));
                    }
                    ["mu", a, b] => {
                        let (i, j) = (chart(a, spec)?, chart(b, spec)?);
                        if i == j {
                            return Err(syntax(line, indent + 1, "μ needs two distinct charts"));
                        }
                        let e = parse_at(v, line, indent + off, &f.theory, &named)?;
                        spec.mu.push((i, j, e));
                    }
                    _ => return Err(syntax(line, indent + 1, format!("unknown cover entry `{k}`"))),
                }
            }
            "checks" => {
                let (k, v, _) = split_eq(text, line)?;
                let args: Vec<String> = v.split_whitespace().map(str::to_string).collect();
                if args.is_empty() {
                    return Err(syntax(line, indent + 1, "empty check"));
                }
                f.checks.push((k.to_string(), args));
            }
            "" => return Err(syntax(line, 1, "content before the first section")),
            _ => unreachable!(),
        }
    }
    Ok(f)
}

fn fmt_q(c: &Q) -> String {
    Expr::constant(c.clone()).to_string()
}

impl fmt::Display for TheoryFile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "[theory]")?;
        writeln!(f, "name = {}", self.name)?;
        writeln!(f, "metric = {}", self.metric.iter().map(fmt_q).collect::<Vec<_>>().join(", "))?;
        let chart = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            writeln!(f, "\n[chart]")?;
            if let Some(m) = &self.model {
                writeln!(f, "model = {m}")?;
            }
            for (s, e) in &self.nu {
                writeln!(f, "nu {s} = {e}")?;
            }
            if let Some(p) = &self.potential {
                writeln!(f, "potential = {p}")?;
            }
            if let Some(p) = &self.supercharge {
                writeln!(f, "supercharge = {p}")?;
            }
            Ok(())
        };
        let has_chart = self.model.is_some() || !self.nu.is_empty() || self.potential.is_some() || self.supercharge.is_some();
        if self.model.is_some() {
            chart(f)?;
        } else {
            if !self.theory.fields().is_empty() {
                writeln!(f, "\n[fields]")?;
                for s in self.theory.fields() {
                    writeln!(f, "{s} {} {}", s.ghost(), if s.parity() == 1 { "odd" } else { "even" })?;
                }
            }
            if self.theory.functions().next().is_some() {
                writeln!(f, "\n[functions]")?;
                for g in self.theory.functions() {
                    let args: Vec<String> = g.args().iter().map(|a| a.to_string()).collect();
                    writeln!(f, "{g}({})", args.join(", "))?;
                }
            }
            if self.theory.has_relations() {
                writeln!(f, "\n[relations]")?;
                for (k, v) in self.theory.relations() {
                    writeln!(f, "{k} = {v}")?;
                }
            }
            if has_chart {
                chart(f)?;
            }
        }
        if !self.expressions.is_empty() {
            writeln!(f, "\n[expressions]")?;
            for (k, v) in &self.expressions {
                writeln!(f, "{k} = {v}")?;
            }
        }
        if let Some(c) = &self.cover {
            writeln!(f, "\n[cover]")?;
            writeln!(f, "charts = {}", c.charts.join(", "))?;
            for (i, s, e) in &c.nu {
                writeln!(f, "nu {} {s} = {e}", c.charts[*i])?;
            }
            for (i, j, e) in &c.mu {
                writeln!(f, "mu {} {} = {e}", c.charts[*i], c.charts[*j])?;
            }
        }
        if !self.checks.is_empty() {
            writeln!(f, "\n[checks]")?;
            for (k, a) in &self.checks {
                writeln!(f, "{k} = {}", a.join(" "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle() -> Theory {
        let mut t = Theory::new("p");
        for (n, g, p) in [("x", 0, 0), ("p", 0, 0), ("e", 0, 0), ("c", 1, 1)] {
            t.add_field(n, g, p).unwrap();
        }
        t
    }

    #[test]
    fn free_action() {
        let t = particle();
        let e = parse_expr("p*d(x) - 1/2*e*p^2", &t).unwrap();
        let want = &t.x("p") * &Expr::symbol(&t.field("x").unwrap().with_jet(1))
            - (&t.x("e") * &t.x("p").pow_int(2)).scale(&crate::expr::qr(1, 2));
        assert_eq!(e, want);
    }

    #[test]
    fn gauge_generator() {
        let t = particle();
        let e = parse_expr("c*(x+*d(x) + p+*d(p) - e*d(e+) + c+*d(c))", &t).unwrap();
        let d = |n: &str| Expr::symbol(&t.lookup(n).unwrap().with_jet(1));
        let dd = &t.xp("x") * &d("x") + &t.xp("p") * &d("p") - &t.x("e") * &d("e+") + &t.xp("c") * &d("c");
        assert_eq!(e, &t.x("c") * &dd);
    }

    #[test]
    fn unclosed_jet_reports_column() {
        let t = particle();
        match parse_expr("p*d(", &t) {
            Err(Error::Syntax { col, .. }) => assert_eq!(col, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn antifield_suffix_versus_sum() {
        let t = particle();
        assert_eq!(parse_expr("x+p", &t).unwrap(), t.x("x") + t.x("p"));
        assert_eq!(parse_expr("x+ + p", &t).unwrap(), t.xp("x") + t.x("p"));
        assert_eq!(parse_expr("x+*p", &t).unwrap(), &t.xp("x") * &t.x("p"));
    }

    #[test]
    fn rendering_round_trips() {
        let t = particle();
        for s in ["u^-1*c*p+ - 3/4*eps*x+", "pow(e, 1 - tau)*log(e)*c+", "inv(e)*d^2(x)*dt_1*t_2", "0"] {
            let e = parse_expr(s, &t).unwrap();
            assert_eq!(parse_expr(&e.to_string(), &t).unwrap(), e, "{s} -> {e}");
        }
    }

    #[test]
    fn file_round_trip() {
        let src = "[theory]\nname = mag\nmetric = 1, -1\n[fields]\nx_1..n 0 even\np_1..n 0 even\n\
                   [functions]\nA_1..n(x_1..n)\nF_1_2(x_1..n)\n[relations]\nF_1_2 = D[x_1](A_2) - D[x_2](A_1)\n\
                   [chart]\nnu x_1 = p_1 + A_1\nnu x_2 = p_2 + A_2\n[expressions]\nS0 = p_1*d(x_1)\nS = S0 + u*x+_1*p+_1\n\
                   [checks]\nmc = check-mc   S\n";
        let f = parse(src).unwrap();
        let printed = f.to_string();
        let again = parse(&printed).unwrap();
        assert_eq!(again.to_string(), printed);
        assert_eq!(f.check("mc").unwrap(), ["check-mc", "S"]);
    }

    #[test]
    fn grading_violation_is_reported() {
        assert!(matches!(parse("[fields]\nc 1 odd\nc 1 even\n"), Err(Error::Syntax { line: 3, .. })));
    }
}
