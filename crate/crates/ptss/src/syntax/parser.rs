use std::collections::{BTreeMap, BTreeSet};

use super::lexer::{lex, Tok, Token};
use super::{Diagnostic, Span, SpecFile};
use crate::dist::{parse_q, Context, DistTerm, Summand, Q};
use crate::rules::{Cmp, FamilyPremise, Literal, PosLit, Premise, Ptss, Rule, WSet};
use crate::strata::{StrataPattern, Stratification};
use crate::terms::{member_name, sym, DVar, Signature, Sym, Term};
use crate::universe::UniverseSpec;

use num::{One, Zero};

type PResult<T> = Result<T, Diagnostic>;

/// `mu`, `mu_<anything>` and `mu<digits>` name distribution variables.
pub fn is_dist_var_name(s: &str) -> bool {
    match s.strip_prefix("mu") {
        Some("") => true,
        Some(rest) => rest.starts_with('_') || rest.chars().all(|c| c.is_ascii_digit()),
        None => false,
    }
}

const KEYWORDS: &[&str] = &["signature", "labels", "family", "varset", "rule", "strata", "universe"];

#[derive(Default)]
struct Decls {
    sig: Signature,
    families: BTreeSet<Sym>,
    varsets: BTreeMap<Sym, Vec<Sym>>,
}

struct Parser<'a> {
    #[allow(dead_code)]
    src: &'a str,
    toks: Vec<Token>,
    pos: usize,
    d: Decls,
    diags: Vec<Diagnostic>,
}

struct Block {
    kind: String,
    start: usize,
    end: usize,
}

pub(super) fn parse_spec(src: &str) -> Result<SpecFile, Vec<Diagnostic>> {
    let toks = lex(src).map_err(|d| vec![d])?;
    let mut p = Parser { src, toks, pos: 0, d: Decls::default(), diags: Vec::new() };
    let blocks = p.prescan();
    let mut rules = Vec::new();
    let mut strata = Vec::new();
    let mut universe = None;
    for b in blocks.iter().filter(|b| matches!(b.kind.as_str(), "signature" | "labels" | "varset")) {
        p.pos = b.start;
        let r = match b.kind.as_str() {
            "signature" => p.signature(),
            "labels" => p.labels(),
            _ => p.varset(),
        };
        p.finish_block(r, b);
    }
    for b in blocks.iter().filter(|b| matches!(b.kind.as_str(), "rule" | "strata" | "universe")) {
        p.pos = b.start;
        let r = match b.kind.as_str() {
            "rule" => p.rule().map(|r| rules.push(r)),
            "strata" => p.strata().map(|s| strata.push(s)),
            _ => p.universe().and_then(|u| {
                if universe.is_some() {
                    Err(p.err_at(p.toks[b.start].span, "syntax", "more than one universe block"))
                } else {
                    universe = Some(u);
                    Ok(())
                }
            }),
        };
        p.finish_block(r, b);
    }
    let mut seen = BTreeSet::new();
    for (r, b) in rules.iter().zip(blocks.iter().filter(|b| b.kind == "rule")) {
        if !seen.insert(r.name.clone()) {
            let sp = p.toks[b.start + 1].span;
            p.diags.push(Diagnostic::error("duplicate-rule", sp, &format!("rule `{}` is defined twice", r.name)));
        }
    }
    let mut seen = BTreeSet::new();
    for s in &strata {
        if let Some(n) = &s.name {
            if !seen.insert(n.clone()) {
                let sp = Span::new(src, 0, 0);
                p.diags.push(Diagnostic::error("duplicate-strata", sp, &format!("stratification `{n}` is defined twice")));
            }
        }
    }
    if p.diags.iter().any(|d| d.severity == super::Severity::Error) {
        p.diags.sort_by_key(|d| d.span.start);
        return Err(p.diags);
    }
    let ptss = Ptss { sig: p.d.sig, families: p.d.families, varsets: p.d.varsets, rules };
    Ok(SpecFile { ptss, strata, universe })
}

fn decls_of(ptss: &Ptss) -> Decls {
    Decls { sig: ptss.sig.clone(), families: ptss.families.clone(), varsets: ptss.varsets.clone() }
}

fn standalone<T>(text: &str, ptss: &Ptss, f: impl FnOnce(&mut Parser) -> PResult<T>) -> PResult<T> {
    let toks = lex(text)?;
    let mut p = Parser { src: text, toks, pos: 0, d: decls_of(ptss), diags: Vec::new() };
    let v = f(&mut p)?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    if let Some(d) = p.diags.into_iter().next() {
        return Err(d);
    }
    Ok(v)
}

/// Parse a term against the declarations of `ptss`.
pub fn parse_term(text: &str, ptss: &Ptss) -> PResult<Term> {
    standalone(text, ptss, |p| p.term(false))
}

pub fn parse_dist_term(text: &str, ptss: &Ptss) -> PResult<DistTerm> {
    standalone(text, ptss, |p| p.dist())
}

/// A single literal (no family premises).
pub fn parse_literal(text: &str, ptss: &Ptss) -> PResult<Literal> {
    standalone(text, ptss, |p| {
        let start = p.span();
        match p.premise()?.as_slice() {
            [Premise::Lit(l)] => Ok(l.clone()),
            _ => Err(p.err_at(start, "syntax", "expected a single literal")),
        }
    })
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        &self.toks[(self.pos + n).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn prev_span(&self) -> Span {
        self.toks[self.pos.saturating_sub(1)].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn err_at(&self, span: Span, code: &str, msg: &str) -> Diagnostic {
        Diagnostic::error(code, span, msg)
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        let msg = format!("expected {wanted}, found {}", self.peek().describe());
        Diagnostic::error("syntax", self.span(), &msg)
    }

    fn expect(&mut self, t: &Tok) -> PResult<Span> {
        if self.peek() == t {
            Ok(self.bump().span)
        } else {
            Err(self.unexpected(&t.describe()))
        }
    }

    fn ident(&mut self, what: &str) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => Ok((s, self.bump().span)),
            _ => Err(self.unexpected(what)),
        }
    }

    fn is_op(&self, o: &str) -> bool {
        matches!(self.peek(), Tok::Op(x) if x == o)
    }

    fn num(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Num(n) => Ok((n, self.bump().span)),
            _ => Err(self.unexpected("a number")),
        }
    }

    fn finish_block(&mut self, r: PResult<()>, b: &Block) {
        match r {
            Err(d) => self.diags.push(d),
            Ok(()) if self.pos != b.end + 1 => {
                let d = self.unexpected("end of block");
                self.diags.push(d);
            }
            Ok(()) => {}
        }
    }

    // ---- top level ----

    /// Split the file into blocks; `family` declarations are handled here.
    fn prescan(&mut self) -> Vec<Block> {
        let mut blocks = Vec::new();
        while self.peek() != &Tok::Eof {
            let kw = match self.peek() {
                Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => s.clone(),
                _ => {
                    let d = self.unexpected("a declaration (signature, labels, family, varset, rule, strata, universe)");
                    self.diags.push(d);
                    self.bump();
                    while !matches!(self.peek(), Tok::Eof) && !matches!(self.peek(), Tok::Ident(s) if KEYWORDS.contains(&s.as_str()))
                    {
                        self.bump();
                    }
                    continue;
                }
            };
            if kw == "family" {
                if let Err(d) = self.family() {
                    self.diags.push(d);
                    while !matches!(self.peek(), Tok::Eof | Tok::Semi | Tok::Ident(_)) {
                        self.bump();
                    }
                    self.eat(&Tok::Semi);
                }
                continue;
            }
            let start = self.pos;
            self.bump();
            while !matches!(self.peek(), Tok::LBrace | Tok::Eof) {
                self.bump();
            }
            let open = self.span();
            let mut depth = 0usize;
            let mut end = None;
            while self.peek() != &Tok::Eof {
                match self.peek() {
                    Tok::LBrace => depth += 1,
                    Tok::RBrace => {
                        depth -= 1;
                        if depth == 0 {
                            end = Some(self.pos);
                            self.bump();
                            break;
                        }
                    }
                    _ => {}
                }
                self.bump();
            }
            match end {
                Some(end) => blocks.push(Block { kind: kw, start, end }),
                None => {
                    let msg = format!("unclosed `{kw}` block");
                    self.diags.push(Diagnostic::error("syntax", open, &msg));
                }
            }
        }
        blocks
    }

    fn family(&mut self) -> PResult<()> {
        self.bump();
        loop {
            let (name, sp) = self.ident("a family name")?;
            self.check_fresh_name(&name, sp)?;
            self.d.families.insert(sym(&name));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.eat(&Tok::Semi);
        Ok(())
    }

    fn check_fresh_name(&self, name: &str, sp: Span) -> PResult<()> {
        if name == "delta" || name == "forall" || is_dist_var_name(name) {
            return Err(self.err_at(sp, "kind", &format!("`{name}` is reserved")));
        }
        Ok(())
    }

    fn signature(&mut self) -> PResult<()> {
        self.bump();
        self.expect(&Tok::LBrace)?;
        while self.peek() != &Tok::RBrace {
            let (name, sp) = self.ident("a function symbol")?;
            self.check_fresh_name(&name, sp)?;
            self.expect(&Tok::Slash)?;
            let (n, nsp) = self.num()?;
            let arity: usize = n.parse().map_err(|_| self.err_at(nsp, "syntax", "arity must be a natural number"))?;
            let mut infix = None;
            if matches!(self.peek(), Tok::Ident(s) if s == "infix" || s == "as") {
                self.bump();
                let op = match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        s
                    }
                    _ => return Err(self.unexpected("an operator string")),
                };
                if arity != 2 {
                    return Err(self.err_at(sp, "arity", &format!("infix symbol `{name}` must be binary")));
                }
                if op.is_empty() || op == "*" || !op.chars().all(|c| "+*|&.!~^%@$?\\".contains(c)) {
                    return Err(self.err_at(self.prev_span(), "syntax", &format!("`{op}` cannot be an infix operator")));
                }
                if self.d.sig.by_infix(&op).is_some() {
                    return Err(self.err_at(self.prev_span(), "syntax", &format!("operator `{op}` declared twice")));
                }
                infix = Some(op);
            }
            if self.d.sig.funs.contains_key(name.as_str()) {
                return Err(self.err_at(sp, "syntax", &format!("function symbol `{name}` declared twice")));
            }
            self.d.sig.add_fun(&name, arity, infix.as_deref());
            if !self.eat(&Tok::Semi) && !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(())
    }

    fn labels(&mut self) -> PResult<()> {
        self.bump();
        self.expect(&Tok::LBrace)?;
        while self.peek() != &Tok::RBrace {
            let (l, _) = self.ident("a label")?;
            self.d.sig.add_label(&l);
            if !self.eat(&Tok::Comma) && !self.eat(&Tok::Semi) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(())
    }

    fn varset(&mut self) -> PResult<()> {
        self.bump();
        let (name, sp) = self.ident("a variable set name")?;
        self.check_fresh_name(&name, sp)?;
        self.expect(&Tok::LBrace)?;
        let mut vars = Vec::new();
        while self.peek() != &Tok::RBrace {
            let (x, xsp) = self.ident("a variable")?;
            if self.d.sig.funs.contains_key(x.as_str()) {
                return Err(self.err_at(xsp, "kind", &format!("`{x}` is a function symbol, not a variable")));
            }
            self.check_fresh_name(&x, xsp)?;
            vars.push(sym(&x));
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        self.d.varsets.insert(sym(&name), vars);
        Ok(())
    }

    fn universe(&mut self) -> PResult<UniverseSpec> {
        self.bump();
        self.expect(&Tok::LBrace)?;
        let mut u = UniverseSpec { init: Vec::new(), depth: 1 };
        while self.peek() != &Tok::RBrace {
            let (key, ksp) = self.ident("`init` or `depth`")?;
            self.expect(&Tok::Colon)?;
            match key.as_str() {
                "init" => loop {
                    let sp = self.span();
                    let t = self.term(false)?;
                    if !t.is_closed() {
                        return Err(self.err_at(sp.join(self.prev_span()), "kind", "initial terms must be closed"));
                    }
                    u.init.push(t);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                },
                "depth" => {
                    let (n, nsp) = self.num()?;
                    u.depth = n.parse().map_err(|_| self.err_at(nsp, "syntax", "depth must be a natural number"))?;
                }
                _ => return Err(self.err_at(ksp, "syntax", &format!("unknown universe key `{key}`"))),
            }
            if !self.eat(&Tok::Semi) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(u)
    }

    fn strata(&mut self) -> PResult<Stratification> {
        self.bump();
        let mut s = Stratification { name: None, strict: false, patterns: Vec::new(), default: 0 };
        while let Tok::Ident(x) = self.peek().clone() {
            self.bump();
            if x == "strict" {
                s.strict = true;
            } else if s.name.is_none() && !s.strict {
                s.name = Some(sym(&x));
            } else {
                return Err(self.err_at(self.prev_span(), "syntax", "expected `strict` or `{`"));
            }
        }
        self.expect(&Tok::LBrace)?;
        while self.peek() != &Tok::RBrace {
            if matches!(self.peek(), Tok::Ident(x) if x == "default") && self.peek_at(1) == &Tok::Colon {
                self.bump();
                self.bump();
                s.default = self.level()?;
            } else {
                let src = self.term(false)?;
                self.expect(&Tok::Minus)?;
                let label = match self.peek().clone() {
                    Tok::Wild => {
                        self.bump();
                        None
                    }
                    _ => {
                        let (l, sp) = self.ident("a label or `_`")?;
                        self.check_label(&l, sp);
                        Some(sym(&l))
                    }
                };
                self.expect(&Tok::Arrow)?;
                self.expect(&Tok::Wild)?;
                self.expect(&Tok::Colon)?;
                let level = self.level()?;
                s.patterns.push(StrataPattern { src, label, level });
            }
            if !self.eat(&Tok::Semi) {
                break;
            }
        }
        self.expect(&Tok::RBrace)?;
        Ok(s)
    }

    fn level(&mut self) -> PResult<u32> {
        let (n, sp) = self.num()?;
        n.parse().map_err(|_| self.err_at(sp, "syntax", "levels are natural numbers"))
    }

    fn check_label(&mut self, l: &str, sp: Span) {
        if !self.d.sig.labels.contains(l) {
            self.diags.push(Diagnostic::error("undeclared-label", sp, &format!("label `{l}` is not declared")));
        }
    }

    // ---- rules ----

    fn rule(&mut self) -> PResult<Rule> {
        self.bump();
        let (name, _) = self.ident("a rule name")?;
        let open = self.expect(&Tok::LBrace)?;
        let mut before = Vec::new();
        let mut after = Vec::new();
        let mut bar = false;
        let mut sections = 0usize;
        let mut sectioned = false;
        loop {
            if self.peek() == &Tok::RBrace {
                if sections == 0 {
                    break;
                }
                sections -= 1;
                self.bump();
                self.eat(&Tok::Semi);
                continue;
            }
            let section = match self.peek() {
                Tok::Ident(s) if self.peek_at(1) == &Tok::LBrace => match s.as_str() {
                    "premises" if !bar => Some(false),
                    "conclusion" if !bar => Some(true),
                    _ => None,
                },
                _ => None,
            };
            if let Some(is_conc) = section {
                if sections > 0 {
                    return Err(self.err_at(self.span(), "syntax", "sections of a rule cannot be nested"));
                }
                self.bump();
                self.bump();
                sections = 1;
                sectioned = true;
                bar = is_conc;
                continue;
            }
            if self.eat(&Tok::Bar) {
                if bar {
                    return Err(self.err_at(self.prev_span(), "syntax", "a rule has one `---` separator"));
                }
                bar = true;
                continue;
            }
            let sp = self.span();
            let ps = self.premise()?;
            let sp = sp.join(self.prev_span());
            if bar {
                after.push((ps, sp));
            } else {
                before.push((ps, sp));
            }
            if !self.eat(&Tok::Semi) && !matches!(self.peek(), Tok::Bar | Tok::RBrace) {
                return Err(self.unexpected("`;`, `---` or `}`"));
            }
        }
        let close = self.expect(&Tok::RBrace)?;
        if !bar && !sectioned {
            after = std::mem::take(&mut before);
        }
        let conc = match after.as_slice() {
            [(ps, sp)] => match ps.as_slice() {
                [Premise::Lit(Literal::Pos(p))] => p.clone(),
                _ => return Err(self.err_at(*sp, "kind", "the conclusion must be a positive literal")),
            },
            [] => return Err(self.err_at(open.join(close), "syntax", &format!("rule `{name}` has no conclusion"))),
            [_, (_, sp), ..] => return Err(self.err_at(*sp, "syntax", "a rule has exactly one conclusion")),
        };
        let mut premises = Vec::new();
        for (ps, sp) in before {
            for p in ps {
                if let Premise::Lit(Literal::Pos(pl)) = &p {
                    if !matches!(pl.tgt, DistTerm::Var(_)) {
                        return Err(self.err_at(
                            sp,
                            "kind",
                            "the target of a positive premise must be a distribution variable",
                        ));
                    }
                }
                premises.push(p);
            }
        }
        Ok(Rule { name: sym(&name), premises, conc })
    }

    /// One premise; a `forall` over a variable set expands to several.
    fn premise(&mut self) -> PResult<Vec<Premise>> {
        if matches!(self.peek(), Tok::Ident(s) if s == "forall") {
            return self.forall();
        }
        if self.quantitative_ahead() {
            return Ok(vec![Premise::Lit(self.quant()?)]);
        }
        let src = self.term(false)?;
        self.expect(&Tok::Minus)?;
        let (label, lsp) = self.ident("a label")?;
        self.check_label(&label, lsp);
        match self.peek() {
            Tok::Arrow => {
                self.bump();
                let tgt = self.dist()?;
                Ok(vec![Premise::Lit(Literal::pos(src, &label, tgt))])
            }
            Tok::NegArrow => {
                self.bump();
                Ok(vec![Premise::Lit(Literal::neg(src, &label))])
            }
            _ => Err(self.unexpected("`->` or `-/->`")),
        }
    }

    fn quantitative_ahead(&self) -> bool {
        let mut depth = 0i32;
        for t in &self.toks[self.pos..] {
            match &t.tok {
                Tok::LParen | Tok::LBrack | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBrack => depth -= 1,
                Tok::RBrace if depth > 0 => depth -= 1,
                Tok::RBrace | Tok::Semi | Tok::Bar | Tok::Eof if depth == 0 => return false,
                Tok::Cmp(_) if depth == 0 => return true,
                _ => {}
            }
        }
        false
    }

    fn quant(&mut self) -> PResult<Literal> {
        let theta = self.dist()?;
        self.expect(&Tok::LParen)?;
        let w = match self.peek().clone() {
            Tok::LBrace => {
                self.bump();
                let mut elems = Vec::new();
                while self.peek() != &Tok::RBrace {
                    let sp = self.span();
                    let t = self.term(false)?;
                    if !t.is_var() && !t.is_closed() {
                        return Err(self.err_at(
                            sp.join(self.prev_span()),
                            "kind",
                            "elements of W are variables or closed terms",
                        ));
                    }
                    elems.push(t);
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(&Tok::RBrace)?;
                WSet::terms(elems)
            }
            Tok::Ident(y) => {
                let sp = self.bump().span;
                if self.d.families.contains(y.as_str()) {
                    WSet::Family(sym(&y))
                } else if let Some(vs) = self.d.varsets.get(y.as_str()) {
                    WSet::Terms { elems: vs.iter().map(|x| Term::Var(x.clone())).collect(), varset: Some(sym(&y)) }
                } else {
                    return Err(self.err_at(sp, "undeclared-family", &format!("`{y}` is not a declared family or variable set")));
                }
            }
            _ => return Err(self.unexpected("`{` or a family name")),
        };
        self.expect(&Tok::RParen)?;
        let cmp = match self.peek() {
            Tok::Cmp(">=") => Cmp::Ge,
            Tok::Cmp(">") => Cmp::Gt,
            Tok::Cmp("<=") => Cmp::Le,
            Tok::Cmp(_) => Cmp::Lt,
            _ => return Err(self.unexpected("a comparison")),
        };
        self.bump();
        let q = self.prob()?;
        Ok(Literal::Quant { theta, w, cmp, q })
    }

    fn prob(&mut self) -> PResult<Q> {
        let (n, sp) = self.num()?;
        let mut text = n;
        if self.peek() == &Tok::Slash {
            self.bump();
            let (d, _) = self.num()?;
            text = format!("{text}/{d}");
        }
        let sp = sp.join(self.prev_span());
        let q = parse_q(&text).ok_or_else(|| self.err_at(sp, "syntax", &format!("bad probability `{text}`")))?;
        if q < Q::zero() || q > Q::one() {
            return Err(self.err_at(sp, "range", &format!("probability `{text}` is outside [0,1]")));
        }
        Ok(q)
    }

    fn forall(&mut self) -> PResult<Vec<Premise>> {
        let start = self.bump().span;
        let (binder, bsp) = self.ident("a bound variable")?;
        if self.d.sig.funs.contains_key(binder.as_str()) {
            return Err(self.err_at(bsp, "kind", &format!("`{binder}` is a function symbol")));
        }
        self.check_fresh_name(&binder, bsp)?;
        match self.ident("`in`")? {
            (s, _) if s == "in" => {}
            (_, sp) => return Err(self.err_at(sp, "syntax", "expected `in`")),
        }
        let (fam, fsp) = self.ident("a family or variable set")?;
        self.expect(&Tok::Colon)?;
        let src = self.term(false)?;
        self.expect(&Tok::Minus)?;
        let (label, lsp) = self.ident("a label")?;
        self.check_label(&label, lsp);
        let target = match self.peek() {
            Tok::NegArrow => {
                self.bump();
                None
            }
            Tok::Arrow => {
                self.bump();
                let sp = self.span();
                let (base, _) = self.ident("a distribution variable")?;
                let ok = is_dist_var_name(&base)
                    && self.eat(&Tok::LBrack)
                    && matches!(self.peek(), Tok::Ident(x) if *x == binder)
                    && {
                        self.bump();
                        self.eat(&Tok::RBrack)
                    };
                if !ok {
                    let msg = format!("the target of a family premise must be `mu[{binder}]` for some distribution variable `mu`");
                    return Err(self.err_at(sp.join(self.prev_span()), "kind", &msg));
                }
                Some(sym(&base))
            }
            _ => return Err(self.unexpected("`->` or `-/->`")),
        };
        if self.d.families.contains(fam.as_str()) {
            let fp = FamilyPremise { family: sym(&fam), binder: sym(&binder), src, label: sym(&label), target };
            return Ok(vec![Premise::Family(fp)]);
        }
        let Some(vs) = self.d.varsets.get(fam.as_str()) else {
            let msg = format!("`{fam}` is not a declared family or variable set");
            return Err(self.err_at(fsp, "undeclared-family", &msg));
        };
        let _ = start;
        let b = sym(&binder);
        Ok(vs
            .iter()
            .map(|x| {
                let xt = Term::Var(x.clone());
                let src = src.map_vars(&|v| (*v == b).then(|| xt.clone()));
                Premise::Lit(match &target {
                    Some(base) => Literal::Pos(PosLit {
                        src,
                        label: sym(&label),
                        tgt: DistTerm::Var(DVar { base: base.clone(), index: Some(Box::new(xt.clone())) }),
                    }),
                    None => Literal::Neg { src, label: sym(&label) },
                })
            })
            .collect())
    }

    // ---- terms ----

    /// Left-associative infix chain. An operator followed by a number ends the
    /// term (it separates summands of a weighted sum).
    fn term(&mut self, holes: bool) -> PResult<Term> {
        let mut lhs = self.term_primary(holes)?;
        while let Tok::Op(o) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Num(_)) {
                break;
            }
            let Some(f) = self.d.sig.by_infix(&o).map(|f| f.name.clone()) else {
                return Err(self.err_at(self.span(), "undeclared-symbol", &format!("unknown infix operator `{o}`")));
            };
            self.bump();
            let rhs = self.term_primary(holes)?;
            lhs = Term::App(f, vec![lhs, rhs]);
        }
        Ok(lhs)
    }

    fn term_primary(&mut self, holes: bool) -> PResult<Term> {
        let sp = self.span();
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let t = self.term(holes)?;
                self.expect(&Tok::RParen)?;
                Ok(t)
            }
            Tok::Hole(k) => {
                if !holes {
                    return Err(self.err_at(sp, "context", "context holes may only appear inside a context"));
                }
                self.bump();
                Ok(crate::dist::hole(k))
            }
            Tok::Ident(s) => {
                self.bump();
                if let Some(n) = self.d.sig.arity(&s) {
                    let mut args = Vec::new();
                    if n > 0 {
                        if self.peek() != &Tok::LParen {
                            return Err(self.err_at(sp, "arity", &format!("`{s}` expects {n} arguments, found 0")));
                        }
                        self.bump();
                        loop {
                            args.push(self.term(holes)?);
                            if !self.eat(&Tok::Comma) {
                                break;
                            }
                        }
                        self.expect(&Tok::RParen)?;
                        if args.len() != n {
                            let msg = format!("`{s}` expects {n} arguments, found {}", args.len());
                            return Err(self.err_at(sp.join(self.prev_span()), "arity", &msg));
                        }
                    }
                    return Ok(Term::App(sym(&s), args));
                }
                if s == "delta" || is_dist_var_name(&s) {
                    return Err(self.err_at(sp, "kind", &format!("`{s}` is a distribution term, not a term")));
                }
                if self.d.families.contains(s.as_str()) {
                    if self.eat(&Tok::LBrack) {
                        let (k, ksp) = self.num()?;
                        let k: usize = k.parse().map_err(|_| self.err_at(ksp, "syntax", "member index must be a natural number"))?;
                        self.expect(&Tok::RBrack)?;
                        return Ok(Term::Var(member_name(&s, k)));
                    }
                    return Err(self.err_at(sp, "kind", &format!("family `{s}` is not a term; write `{s}[k]` for a member")));
                }
                if self.d.varsets.contains_key(s.as_str()) {
                    return Err(self.err_at(sp, "kind", &format!("variable set `{s}` is not a term")));
                }
                if self.peek() == &Tok::LParen {
                    return Err(self.err_at(sp, "undeclared-symbol", &format!("function symbol `{s}` is not declared")));
                }
                Ok(Term::Var(sym(&s)))
            }
            _ => Err(self.unexpected("a term")),
        }
    }

    // ---- distribution terms ----

    fn dist(&mut self) -> PResult<DistTerm> {
        if matches!(self.peek(), Tok::Num(_)) {
            self.weighted()
        } else {
            self.chain()
        }
    }

    fn chain(&mut self) -> PResult<DistTerm> {
        let mut lhs = self.datom()?;
        while let Tok::Op(o) = self.peek().clone() {
            if matches!(self.peek_at(1), Tok::Num(_)) {
                break;
            }
            let Some(f) = self.d.sig.by_infix(&o).map(|f| f.name.clone()) else {
                return Err(self.err_at(self.span(), "undeclared-symbol", &format!("unknown infix operator `{o}`")));
            };
            self.bump();
            let rhs = self.datom()?;
            lhs = DistTerm::lift2(&f, lhs, rhs);
        }
        Ok(lhs)
    }

    fn weighted(&mut self) -> PResult<DistTerm> {
        let start = self.span();
        let mut ss = Vec::new();
        loop {
            let p = self.prob()?;
            if !self.is_op("*") {
                return Err(self.unexpected("`*`"));
            }
            self.bump();
            let (ctx, args) = self.wbody()?;
            ss.push(Summand { p, ctx, args });
            if self.is_op("+") && matches!(self.peek_at(1), Tok::Num(_)) {
                self.bump();
            } else {
                break;
            }
        }
        let sp = start.join(self.prev_span());
        DistTerm::convex(ss).map_err(|e| self.err_at(sp, "dist", &e.to_string()))
    }

    fn wbody(&mut self) -> PResult<(Context, Vec<DistTerm>)> {
        let atom_first = match self.peek() {
            Tok::Ident(s) => s == "delta" || is_dist_var_name(s),
            Tok::LParen => {
                let save = self.pos;
                match self.context_app() {
                    Ok(r) => return Ok(r),
                    Err(_) => self.pos = save,
                }
                true
            }
            _ => false,
        };
        if atom_first {
            Ok((Context::id(), vec![self.datom()?]))
        } else {
            self.context_app()
        }
    }

    /// A context term, followed by its arguments when it has holes. A
    /// hole-free open term is read as the identity applied to its Dirac.
    fn context_app(&mut self) -> PResult<(Context, Vec<DistTerm>)> {
        let sp = self.span();
        let t = self.term_primary(true)?;
        let sp = sp.join(self.prev_span());
        let has_hole = t.vars().iter().any(|x| crate::dist::hole_index(x).is_some());
        if !has_hole {
            return Ok(if t.is_closed() {
                (Context::constant(t), Vec::new())
            } else {
                (Context::id(), vec![DistTerm::Dirac(t)])
            });
        }
        let ctx = Context::new(t).map_err(|e| self.err_at(sp, "context", &e.to_string()))?;
        self.expect(&Tok::LParen)?;
        let mut args = Vec::new();
        loop {
            args.push(self.dist()?);
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(&Tok::RParen)?;
        if args.len() != ctx.holes {
            let msg = format!("context has {} holes but {} arguments are given", ctx.holes, args.len());
            return Err(self.err_at(sp.join(self.prev_span()), "context", &msg));
        }
        Ok((ctx, args))
    }

    fn datom(&mut self) -> PResult<DistTerm> {
        match self.peek().clone() {
            Tok::Ident(s) if s == "delta" => {
                self.bump();
                self.expect(&Tok::LParen)?;
                let t = self.term(false)?;
                self.expect(&Tok::RParen)?;
                Ok(DistTerm::Dirac(t))
            }
            Tok::Ident(s) if is_dist_var_name(&s) => {
                self.bump();
                let index = if self.eat(&Tok::LBrack) {
                    let t = self.term(false)?;
                    self.expect(&Tok::RBrack)?;
                    Some(Box::new(t))
                } else {
                    None
                };
                Ok(DistTerm::Var(DVar { base: sym(&s), index }))
            }
            tok => {
                if tok == Tok::LParen {
                    let save = self.pos;
                    let first = self.paren_dist();
                    match first {
                        Ok(d) => return Ok(d),
                        Err(e1) => {
                            self.pos = save;
                            return self.datom_context().map_err(|e2| if e1.span.start > e2.span.start { e1 } else { e2 });
                        }
                    }
                }
                self.datom_context()
            }
        }
    }

    fn paren_dist(&mut self) -> PResult<DistTerm> {
        self.bump();
        let d = self.dist()?;
        self.expect(&Tok::RParen)?;
        Ok(d)
    }

    fn datom_context(&mut self) -> PResult<DistTerm> {
        let (ctx, mut args) = self.context_app()?;
        Ok(match ctx.holes {
            0 => DistTerm::Dirac(ctx.term),
            1 if ctx.term.is_var() => args.pop().unwrap(),
            _ => DistTerm::Convex(vec![Summand { p: Q::one(), ctx, args }]),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SIG: &str = r#"
        signature { a/0; nil/0; f/1; plus/2 infix "+"; par/2 infix "||" }
        labels { a, b, ok }
        family Y;
        varset V { x1, x2 }
    "#;

    fn spec(body: &str) -> Result<SpecFile, Vec<Diagnostic>> {
        super::parse_spec(&format!("{SIG}\n{body}"))
    }

    #[test]
    fn axiom_and_rule() {
        let s = spec("rule ax { a - a -> delta(nil) }\nrule r { x - a -> mu; x - b -/-> --- f(x) - a -> mu }").unwrap();
        assert_eq!(s.ptss.rules.len(), 2);
        assert_eq!(s.ptss.rules[1].premises.len(), 2);
        assert!(s.ptss.rules[1].has_negative());
    }

    #[test]
    fn infix_is_left_associative() {
        let s = spec("").unwrap();
        let t = parse_term("a + a || nil", &s.ptss).unwrap();
        assert_eq!(t, Term::app("par", vec![Term::app("plus", vec![Term::cst("a"), Term::cst("a")]), Term::cst("nil")]));
    }

    #[test]
    fn weighted_sums_and_contexts() {
        let s = spec("").unwrap();
        let d = parse_dist_term("1/2 * delta(a) + 0.5 * (_1 || _2)(mu, delta(nil))", &s.ptss).unwrap();
        let DistTerm::Convex(ss) = d else { panic!() };
        assert_eq!(ss.len(), 2);
        assert_eq!(ss[1].ctx.holes, 2);
        assert!(parse_dist_term("0.5 * delta(a) + 0.25 * delta(nil)", &s.ptss).is_err());
        assert!(parse_dist_term("1 * (_1 || _1)(mu)", &s.ptss).is_err());
    }

    #[test]
    fn quantitative_literals() {
        let s = spec("").unwrap();
        let l = parse_literal("(delta(a) || mu)(Y) >= 1/2", &s.ptss).unwrap();
        assert!(matches!(l, Literal::Quant { w: WSet::Family(_), cmp: Cmp::Ge, .. }));
        let l = parse_literal("mu({a, x}) > 0", &s.ptss).unwrap();
        assert!(matches!(l, Literal::Quant { w: WSet::Terms { .. }, cmp: Cmp::Gt, .. }));
        let e = parse_literal("mu({a}) >= 3/2", &s.ptss).unwrap_err();
        assert_eq!(e.code, "range");
    }

    #[test]
    fn forall_over_family_and_varset() {
        let s = spec(
            "rule r { forall y in Y: y - a -> mu_c[y]; forall z in V: f(z) - b -/-> --- a - ok -> mu_c[Y[0]] }",
        )
        .unwrap();
        let r = &s.ptss.rules[0];
        assert!(matches!(r.premises[0], Premise::Family(_)));
        assert_eq!(r.premises.len(), 3);
    }

    #[test]
    fn error_codes_and_spans() {
        let e = spec("rule r { f(a, a) - a -> mu --- a - a -> mu }").unwrap_err();
        assert_eq!(e[0].code, "arity");
        let e = spec("rule r { a - zzz -> mu }").unwrap_err();
        assert_eq!(e[0].code, "undeclared-label");
        let e = spec("rule r { mu - a -> mu }").unwrap_err();
        assert_eq!(e[0].code, "kind");
        let e = spec("rule r { x - a -> delta(x) --- x - a -> mu }").unwrap_err();
        assert_eq!(e[0].code, "kind");
        let e = spec("rule r { }").unwrap_err();
        assert_eq!(e[0].code, "syntax");
        let e = spec("rule r { a - a -> mu }\nrule r { a - b -> mu }").unwrap_err();
        assert_eq!(e[0].code, "duplicate-rule");
        assert!(e[0].span.line > 1);
    }

    #[test]
    fn recovers_after_bad_block() {
        let e = spec("rule r { a - zz -> mu }\nrule s { f(a, a) - a -> mu }\nrule t { a - a -> mu }").unwrap_err();
        assert_eq!(e.len(), 2);
    }

    #[test]
    fn strata_and_universe() {
        let s = spec("strata S strict { f(x) - a -> _ : 2; a - _ -> _ : 1; default: 0 }\nuniverse { init: f(a); depth: 2 }")
            .unwrap();
        assert!(s.strata[0].strict);
        assert_eq!(s.strata[0].level(&Term::app("f", vec![Term::cst("nil")]), "a"), 2);
        assert_eq!(s.universe.unwrap().depth, 2);
    }

    #[test]
    fn sectioned_rule_form() {
        let s = spec("rule r { premises { x - a -> mu; x - b -/-> } conclusion { f(x) - a -> mu } }\nrule ax { conclusion { a - a -> delta(a) } }")
            .unwrap();
        assert_eq!(s.ptss.rules[0].premises.len(), 2);
        assert!(s.ptss.rules[1].premises.is_empty());
        assert!(spec("rule r { premises { a - a -> mu } }").is_err());
    }

    #[test]
    fn dist_var_names() {
        assert!(is_dist_var_name("mu"));
        assert!(is_dist_var_name("mu_y3"));
        assert!(is_dist_var_name("mu12"));
        assert!(!is_dist_var_name("mux"));
        assert!(!is_dist_var_name("m"));
    }
}
