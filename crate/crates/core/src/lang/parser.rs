//! Recursive-descent parser over the token stream.

use super::lexer::{tokenize, Tok};
use super::{BundleError, ParseError};
use crate::expr::{BinOp, Direction, Dtype, EventExpr, EventTag, Expr, UnOp};
use crate::graph::EvolutionAction;
use crate::model::{
    AttributeDecl, BehaviourFormula, BusinessConfiguration, ComponentSpec, Connector,
    CustomerEntry, Edge, External, ExternalPolicy, FormulaDecl, GlueRule, Guard, GuardItem,
    InteractionDecl, InteractionKind, InternalPolicy, Mapping, ModelBundle, Module, ModuleGraph,
    Node, NodeKind, Param, Partner, PartnerKind, PolicyDecl, QualifiedName, ResourceDecl,
    ResourceKind, SlaVarDecl, SpecKind, TaskModule, Trigger, Vbe, VoModule,
};
use crate::sla::{ConstraintDef, SemiringKind};
use crate::span::Span;

/// Words that cannot start a reference inside an expression.
pub(crate) const RESERVED: &[&str] = &[
    "and",
    "or",
    "not",
    "if",
    "then",
    "else",
    "true",
    "false",
    "inf",
    "in",
    "after",
    "ensures",
    "enables",
    "until",
    "initiallyEnabled",
    "with",
];

const KINDS: &[&str] = &[
    "`r&s`", "`s&r`", "`rcv`", "`snd`", "`ask`", "`rpl`", "`tll`", "`prf`",
];

const SECTION_WORDS: &[&str] = &["INTERACTIONS", "SLA", "BEHAVIOUR", "END"];

pub(crate) enum Block {
    Vbe(Vbe),
    Config(BusinessConfiguration),
    Module(Module),
    Spec(ComponentSpec),
    Connector(Connector),
    Policy(ConstraintDef),
    Include(String, Span),
}

enum ConfigItem {
    Associate(Partner),
    Resource(ResourceDecl),
    Policy(PolicyDecl),
    Task(String),
    Vo(String),
    External(External),
    Customer(CustomerEntry),
}

impl ConfigItem {
    fn keyword(&self) -> &'static str {
        match self {
            ConfigItem::Associate(_) => "associate",
            ConfigItem::Resource(_) => "resource",
            ConfigItem::Policy(_) => "policy",
            ConfigItem::Task(_) => "task",
            ConfigItem::Vo(_) => "vo",
            ConfigItem::External(_) => "external",
            ConfigItem::Customer(_) => "customer",
        }
    }
}

type PResult<T> = Result<T, ParseError>;

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
}

impl Parser {
    fn new(text: &str) -> PResult<Parser> {
        Ok(Parser {
            toks: tokenize(text)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, Span) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(ParseError::new(self.span(), expected, &self.peek().to_string()))
    }

    fn at_eof(&self) -> bool {
        *self.peek() == Tok::Eof
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, t: Tok) -> PResult<Span> {
        if *self.peek() == t {
            Ok(self.bump().1)
        } else {
            self.err(&[&t.to_string()])
        }
    }

    fn is_word(&self, w: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == w)
    }

    fn is_word_at(&self, n: usize, w: &str) -> bool {
        matches!(self.peek_at(n), Tok::Ident(s) if s == w)
    }

    fn eat_word(&mut self, w: &str) -> bool {
        if self.is_word(w) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_word(&mut self, w: &str) -> PResult<Span> {
        if self.is_word(w) {
            Ok(self.bump().1)
        } else {
            self.err(&[&format!("`{w}`")])
        }
    }

    fn ident(&mut self) -> PResult<(String, Span)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let span = self.bump().1;
                Ok((s, span))
            }
            _ => self.err(&["identifier"]),
        }
    }

    fn name(&mut self) -> PResult<String> {
        Ok(self.ident()?.0)
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = vec![self.name()?];
        while self.eat(&Tok::Comma) {
            out.push(self.name()?);
        }
        Ok(out)
    }

    fn signed_int(&mut self) -> PResult<i64> {
        let neg = self.eat(&Tok::Minus);
        let span = self.span();
        let Tok::Int(n) = *self.peek() else {
            return self.err(&["integer"]);
        };
        self.bump();
        let v = if neg {
            0i64.checked_sub_unsigned(n)
        } else {
            i64::try_from(n).ok()
        };
        v.ok_or_else(|| ParseError::new(span, &["integer within 64 bits"], &format!("`{n}`")))
    }

    // -----------------------------------------------------------------
    // expressions

    fn expr(&mut self) -> PResult<Expr> {
        if self.eat_word("if") {
            let c = self.expr()?;
            self.expect_word("then")?;
            let a = self.expr()?;
            self.expect_word("else")?;
            let b = self.expr()?;
            return Ok(Expr::If(Box::new(c), Box::new(a), Box::new(b)));
        }
        self.or_expr()
    }

    fn or_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.and_expr()?;
        while self.eat_word("or") {
            let rhs = self.and_expr()?;
            lhs = Expr::binary(BinOp::Or, lhs, rhs);
        }
        Ok(lhs)
    }

    fn and_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.not_expr()?;
        while self.eat_word("and") {
            let rhs = self.not_expr()?;
            lhs = Expr::binary(BinOp::And, lhs, rhs);
        }
        Ok(lhs)
    }

    fn not_expr(&mut self) -> PResult<Expr> {
        if self.eat_word("not") {
            let e = self.not_expr()?;
            return Ok(Expr::Unary(UnOp::Not, Box::new(e)));
        }
        self.cmp_expr()
    }

    fn cmp_expr(&mut self) -> PResult<Expr> {
        let lhs = self.add_expr()?;
        let op = match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Ident(w) if w == "in" => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let lo = self.signed_int()?;
                self.expect(Tok::DotDot)?;
                let hi = self.signed_int()?;
                self.expect(Tok::RBracket)?;
                return Ok(Expr::InRange(Box::new(lhs), lo, hi));
            }
            _ => return Ok(lhs),
        };
        self.bump();
        let rhs = self.add_expr()?;
        Ok(Expr::binary(op, lhs, rhs))
    }

    fn add_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.mul_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.mul_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn mul_expr(&mut self) -> PResult<Expr> {
        let mut lhs = self.unary_expr()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                Tok::Percent => BinOp::Mod,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary_expr()?;
            lhs = Expr::binary(op, lhs, rhs);
        }
    }

    fn unary_expr(&mut self) -> PResult<Expr> {
        if *self.peek() == Tok::Minus {
            if let Tok::Int(_) = self.peek_at(1) {
                return Ok(Expr::Int(self.signed_int()?));
            }
            self.bump();
            let e = self.unary_expr()?;
            return Ok(Expr::Unary(UnOp::Neg, Box::new(e)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<Expr> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(_) => Ok(Expr::Int(self.signed_int()?)),
            Tok::Str(s) => {
                self.bump();
                Ok(Expr::Str(s))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(w) if w == "true" || w == "false" => {
                self.bump();
                Ok(Expr::Bool(w == "true"))
            }
            Tok::Ident(w) if w == "inf" => {
                self.bump();
                Ok(Expr::Inf)
            }
            Tok::Ident(w) if !RESERVED.contains(&w.as_str()) => {
                self.bump();
                let mut path = vec![w];
                while self.eat(&Tok::Dot) {
                    path.push(self.name()?);
                }
                let direction = match self.peek() {
                    Tok::Bang => Direction::Emit,
                    Tok::Question => Direction::Receive,
                    _ => return Ok(Expr::Ref(path)),
                };
                let tag = match path.as_slice() {
                    [_, t] => EventTag::from_name(t),
                    _ => None,
                };
                let Some(tag) = tag else {
                    return Err(ParseError::new(
                        span,
                        &["event `interaction.tag` with tag init, reply, commit, cancel or revoke"],
                        &format!("`{}`", path.join(".")),
                    ));
                };
                self.bump();
                Ok(Expr::Event(EventExpr {
                    interaction: path.swap_remove(0),
                    tag,
                    direction,
                }))
            }
            _ => self.err(&["expression"]),
        }
    }

    /// An expression that must not contain event atoms.
    fn pred(&mut self) -> PResult<Expr> {
        let span = self.span();
        let e = self.expr()?;
        if e.contains_event() {
            return Err(ParseError::new(span, &["state predicate"], "an event atom"));
        }
        Ok(e)
    }

    fn event(&mut self) -> PResult<EventExpr> {
        let (interaction, _) = self.ident()?;
        self.expect(Tok::Dot)?;
        let tag = self.tag()?;
        let direction = match self.peek() {
            Tok::Bang => Direction::Emit,
            Tok::Question => Direction::Receive,
            _ => return self.err(&["`!`", "`?`"]),
        };
        self.bump();
        Ok(EventExpr {
            interaction,
            tag,
            direction,
        })
    }

    fn tag(&mut self) -> PResult<EventTag> {
        if let Tok::Ident(w) = self.peek() {
            if let Some(t) = EventTag::from_name(w) {
                self.bump();
                return Ok(t);
            }
        }
        self.err(&["`init`", "`reply`", "`commit`", "`cancel`", "`revoke`"])
    }

    fn qualified(&mut self) -> PResult<QualifiedName> {
        let owner = self.name()?;
        self.expect(Tok::Dot)?;
        let var = self.name()?;
        Ok(QualifiedName { owner, var })
    }

    // -----------------------------------------------------------------
    // declarations

    fn dtype(&mut self) -> PResult<Dtype> {
        let expected = [
            "`int`", "`nat`", "`bool`", "`money`", "`date`", "`string`", "`enum`",
        ];
        let Tok::Ident(w) = self.peek().clone() else {
            return self.err(&expected);
        };
        let d = match w.as_str() {
            "int" => Dtype::Int,
            "nat" => Dtype::Nat,
            "bool" => Dtype::Bool,
            "money" => Dtype::Money,
            "date" => Dtype::Date,
            "string" => Dtype::Str,
            "enum" => {
                self.bump();
                self.expect(Tok::LParen)?;
                let mut items = Vec::new();
                if *self.peek() != Tok::RParen {
                    items = self.ident_list()?;
                }
                self.expect(Tok::RParen)?;
                return Ok(Dtype::Enum(items));
            }
            _ => return self.err(&expected),
        };
        self.bump();
        Ok(d)
    }

    fn attributes(&mut self) -> PResult<Vec<AttributeDecl>> {
        let mut out = Vec::new();
        if self.eat(&Tok::Semi) {
            return Ok(out);
        }
        if *self.peek() != Tok::LBrace {
            return self.err(&["`;`", "`{`"]);
        }
        self.bump();
        while !self.eat(&Tok::RBrace) {
            let (name, span) = match self.peek() {
                Tok::Ident(_) => self.ident()?,
                _ => return self.err(&["attribute name", "`}`"]),
            };
            self.expect(Tok::Colon)?;
            let dtype = self.dtype()?;
            let unit = if self.eat_word("unit") {
                match self.peek().clone() {
                    Tok::Str(s) => {
                        self.bump();
                        Some(s)
                    }
                    _ => return self.err(&["string literal"]),
                }
            } else {
                None
            };
            self.expect(Tok::Semi)?;
            out.push(AttributeDecl {
                name,
                dtype,
                unit,
                span,
            });
        }
        Ok(out)
    }

    fn partner(&mut self, persistence: PartnerKind) -> PResult<Partner> {
        let (name, span) = self.ident()?;
        let attributes = self.attributes()?;
        Ok(Partner {
            name,
            attributes,
            persistence,
            span,
        })
    }

    fn resource(&mut self, persistence: ResourceKind) -> PResult<ResourceDecl> {
        let (id, span) = self.ident()?;
        let attributes = self.attributes()?;
        Ok(ResourceDecl {
            id,
            attributes,
            persistence,
            span,
        })
    }

    fn policy_decl(&mut self) -> PResult<PolicyDecl> {
        let (name, span) = self.ident()?;
        self.expect_word("over")?;
        let scope = self.ident_list()?;
        self.expect(Tok::Colon)?;
        let formula = self.pred()?;
        self.expect(Tok::Semi)?;
        Ok(PolicyDecl {
            name,
            scope,
            formula,
            span,
        })
    }

    fn vbe(&mut self, span: Span) -> PResult<Vbe> {
        let name = self.name()?;
        self.expect_word("is")?;
        let mut vbe = Vbe::empty(name);
        vbe.span = span;
        loop {
            if self.eat_word("partner") {
                vbe.partners.push(self.partner(PartnerKind::Persistent)?);
            } else if self.eat_word("resource") {
                vbe.resources.push(self.resource(ResourceKind::Persistent)?);
            } else if self.eat_word("policy") {
                vbe.policies.push(self.policy_decl()?);
            } else if self.eat_word("task") {
                vbe.tasks.push(self.name()?);
                self.expect(Tok::Semi)?;
            } else if self.eat_word("END") {
                return Ok(vbe);
            } else {
                return self.err(&["`partner`", "`resource`", "`policy`", "`task`", "`END`"]);
            }
        }
    }

    /// One configuration item, or `None` at a token that cannot start one.
    fn config_item(&mut self) -> PResult<Option<ConfigItem>> {
        let item = if self.eat_word("associate") {
            ConfigItem::Associate(self.partner(PartnerKind::Associate)?)
        } else if self.eat_word("resource") {
            ConfigItem::Resource(self.resource(ResourceKind::Transient)?)
        } else if self.eat_word("policy") {
            ConfigItem::Policy(self.policy_decl()?)
        } else if self.eat_word("task") {
            let n = self.name()?;
            self.expect(Tok::Semi)?;
            ConfigItem::Task(n)
        } else if self.eat_word("vo") {
            let n = self.name()?;
            self.expect(Tok::Semi)?;
            ConfigItem::Vo(n)
        } else if self.is_word("external") {
            self.bump();
            let (name, span) = self.ident()?;
            self.expect(Tok::Colon)?;
            let spec = self.name()?;
            self.expect(Tok::Semi)?;
            ConfigItem::External(External { name, spec, span })
        } else if self.is_word("customer") {
            self.bump();
            let (vo, span) = self.ident()?;
            self.expect(Tok::Colon)?;
            let spec = self.name()?;
            self.expect(Tok::Semi)?;
            ConfigItem::Customer(CustomerEntry { vo, spec, span })
        } else {
            return Ok(None);
        };
        Ok(Some(item))
    }

    fn configuration(&mut self, span: Span) -> PResult<BusinessConfiguration> {
        let name = self.name()?;
        self.expect_word("of")?;
        let base = self.name()?;
        self.expect_word("is")?;
        let mut bc = BusinessConfiguration::empty(name, base);
        bc.span = span;
        loop {
            match self.config_item()? {
                Some(ConfigItem::Associate(p)) => bc.associates.push(p),
                Some(ConfigItem::Resource(r)) => bc.transient_resources.push(r),
                Some(ConfigItem::Policy(p)) => bc.policies.push(p),
                Some(ConfigItem::Task(t)) => bc.tasks.push(t),
                Some(ConfigItem::Vo(v)) => bc.vos.push(v),
                Some(ConfigItem::External(e)) => bc.externals.push(e),
                Some(ConfigItem::Customer(c)) => bc.customers.push(c),
                None if self.eat_word("END") => return Ok(bc),
                None => {
                    return self.err(&[
                        "`associate`",
                        "`resource`",
                        "`policy`",
                        "`task`",
                        "`vo`",
                        "`external`",
                        "`customer`",
                        "`END`",
                    ])
                }
            }
        }
    }

    fn module(&mut self, span: Span, vo: bool) -> PResult<Module> {
        let name = self.name()?;
        self.expect_word("is")?;
        let mut graph = ModuleGraph::default();
        let mut serves_map = Vec::new();
        let mut uses_map = Vec::new();
        let mut internal = InternalPolicy::default();
        let mut external = ExternalPolicy::default();
        loop {
            let item_span = self.span();
            if self.eat_word("node") {
                let id = self.name()?;
                self.expect(Tok::Colon)?;
                let kind = match self.peek() {
                    Tok::Ident(w) => NodeKind::from_name(w),
                    _ => None,
                };
                let Some(kind) = kind else {
                    return self.err(&["`provides`", "`requires`", "`serves`", "`uses`", "`internal`"]);
                };
                self.bump();
                let label = self.name()?;
                self.expect(Tok::Semi)?;
                graph.nodes.push(Node {
                    id,
                    kind,
                    label,
                    span: item_span,
                });
            } else if self.eat_word("wire") {
                let id = self.name()?;
                self.expect(Tok::Colon)?;
                let a = self.name()?;
                self.expect(Tok::BiArrow)?;
                let b = self.name()?;
                self.expect_word("via")?;
                let label = self.name()?;
                self.expect(Tok::Semi)?;
                graph.edges.push(Edge {
                    id,
                    ends: (a, b),
                    label,
                    span: item_span,
                });
            } else if self.is_word("serves") || self.is_word("uses") {
                let serves = self.is_word("serves");
                self.bump();
                let node = self.name()?;
                self.expect(Tok::Arrow)?;
                let target = self.name()?;
                self.expect(Tok::Semi)?;
                let m = Mapping {
                    node,
                    target,
                    span: item_span,
                };
                if serves {
                    serves_map.push(m);
                } else {
                    uses_map.push(m);
                }
            } else if vo && self.eat_word("trigger") {
                let node = self.name()?;
                self.expect(Tok::Dot)?;
                let event = self.event()?;
                self.expect(Tok::Semi)?;
                internal.triggers.push(Trigger { node, event });
            } else if vo && (self.is_word("start") || self.is_word("stop")) {
                let start = self.is_word("start");
                self.bump();
                self.expect_word("when")?;
                let cond = self.pred()?;
                self.expect(Tok::Semi)?;
                if start {
                    internal.init_conditions.push(cond);
                } else {
                    internal.term_conditions.push(cond);
                }
            } else if vo && self.eat_word("sla") {
                external.sla_vars.push(self.qualified()?);
                while self.eat(&Tok::Comma) {
                    external.sla_vars.push(self.qualified()?);
                }
                self.expect(Tok::Semi)?;
            } else if vo && self.eat_word("constraint") {
                external.constraints.push(self.name()?);
                self.expect(Tok::Semi)?;
            } else if self.eat_word("END") {
                break;
            } else if vo {
                return self.err(&[
                    "`node`",
                    "`wire`",
                    "`serves`",
                    "`uses`",
                    "`trigger`",
                    "`start`",
                    "`stop`",
                    "`sla`",
                    "`constraint`",
                    "`END`",
                ]);
            } else {
                return self.err(&["`node`", "`wire`", "`serves`", "`uses`", "`END`"]);
            }
        }
        Ok(if vo {
            Module::Vo(VoModule {
                name,
                graph,
                serves_map,
                uses_map,
                internal,
                external,
                span,
            })
        } else {
            Module::Task(TaskModule {
                name,
                graph,
                serves_map,
                uses_map,
                span,
            })
        })
    }

    fn kind(&mut self) -> Option<InteractionKind> {
        let k = match self.peek() {
            Tok::KindRs => InteractionKind::Rs,
            Tok::KindSr => InteractionKind::Sr,
            Tok::Ident(w) => match InteractionKind::from_token(w) {
                Some(k) if !k.is_conversational() => k,
                _ => return None,
            },
            _ => return None,
        };
        self.bump();
        Some(k)
    }

    fn params(&mut self) -> PResult<Vec<Param>> {
        let mut out = Vec::new();
        loop {
            let names = self.ident_list()?;
            self.expect(Tok::Colon)?;
            let dtype = self.dtype()?;
            out.extend(names.into_iter().map(|n| Param::new(n, dtype.clone())));
            if !self.eat(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    /// Interaction declarations until a token that cannot start one.
    /// `stop` lists what may legally follow the list.
    fn interactions(&mut self, stop: &[&str]) -> PResult<Vec<InteractionDecl>> {
        let mut out = Vec::new();
        loop {
            let span = self.span();
            let Some(kind) = self.kind() else {
                if stop.iter().any(|w| self.is_word(w)) {
                    return Ok(out);
                }
                let expected: Vec<String> = stop.iter().map(|w| format!("`{w}`")).collect();
                let mut all: Vec<&str> = KINDS.to_vec();
                all.extend(expected.iter().map(String::as_str));
                return self.err(&all);
            };
            let mut decl = InteractionDecl::new(self.name()?, kind);
            decl.span = span;
            loop {
                if self.eat_word("init") {
                    decl.snd_params.extend(self.params()?);
                } else if self.eat_word("reply") {
                    decl.rcv_params.extend(self.params()?);
                } else {
                    break;
                }
                self.expect(Tok::Semi)?;
            }
            out.push(decl);
        }
    }

    fn section_end(&self) -> bool {
        SECTION_WORDS.iter().any(|w| self.is_word(w))
    }

    fn spec(&mut self, kind: SpecKind, span: Span) -> PResult<ComponentSpec> {
        let name = self.name()?;
        self.expect_word("is")?;
        let mut spec = ComponentSpec {
            kind,
            name,
            interactions: Vec::new(),
            sla_vars: Vec::new(),
            behaviour: Vec::new(),
            span,
        };
        if self.eat_word("INTERACTIONS") {
            spec.interactions = self.interactions(&["SLA", "BEHAVIOUR", "END"])?;
        }
        if self.eat_word("SLA") {
            self.expect_word("VARIABLES")?;
            while !self.section_end() {
                loop {
                    let (name, vspan) = self.ident()?;
                    self.expect(Tok::Colon)?;
                    self.expect(Tok::LBracket)?;
                    let lo = self.signed_int()?;
                    self.expect(Tok::DotDot)?;
                    let hi = self.signed_int()?;
                    self.expect(Tok::RBracket)?;
                    spec.sla_vars.push(SlaVarDecl {
                        name,
                        lo,
                        hi,
                        span: vspan,
                    });
                    if !self.eat(&Tok::Comma) {
                        break;
                    }
                }
                self.expect(Tok::Semi)?;
            }
        }
        if self.eat_word("BEHAVIOUR") {
            while !self.section_end() {
                spec.behaviour.push(self.formula()?);
            }
        }
        if !self.eat_word("END") {
            return self.err(&["`INTERACTIONS`", "`SLA`", "`BEHAVIOUR`", "`END`"]);
        }
        Ok(spec)
    }

    fn formula(&mut self) -> PResult<FormulaDecl> {
        let span = self.span();
        if self.eat_word("initiallyEnabled") {
            let e = self.event()?;
            self.expect(Tok::Semi)?;
            return Ok(FormulaDecl {
                formula: BehaviourFormula::InitiallyEnabled(e),
                span,
            });
        }
        let lhs = self.expr()?;
        let formula = if self.eat_word("ensures") {
            let guard = to_guard(&lhs, span)?;
            let consequent = self.event()?;
            BehaviourFormula::Ensures { guard, consequent }
        } else if self.eat_word("enables") {
            let guard = to_guard(&lhs, span)?;
            let enabled = self.event()?;
            self.expect_word("until")?;
            let until = self.pred()?;
            BehaviourFormula::EnablesUntil {
                guard,
                enabled,
                until,
            }
        } else if self.eat_word("after") {
            if lhs.contains_event() {
                return Err(ParseError::new(span, &["state predicate before `after`"], "an event atom"));
            }
            let anchor = self.event()?;
            BehaviourFormula::After { pred: lhs, anchor }
        } else {
            return self.err(&["`ensures`", "`enables`", "`after`"]);
        };
        self.expect(Tok::Semi)?;
        Ok(FormulaDecl { formula, span })
    }

    fn connector(&mut self, span: Span) -> PResult<Connector> {
        let name = self.name()?;
        self.expect_word("is")?;
        let mut c = Connector {
            name,
            role_a: Vec::new(),
            glue: Vec::new(),
            role_b: Vec::new(),
            span,
        };
        if self.is_word("ROLE") && self.is_word_at(1, "A") {
            self.bump();
            self.bump();
            c.role_a = self.interactions(&["ROLE", "GLUE", "END"])?;
        }
        if self.is_word("ROLE") && self.is_word_at(1, "B") {
            self.bump();
            self.bump();
            c.role_b = self.interactions(&["GLUE", "END"])?;
        }
        if self.eat_word("GLUE") {
            while !self.is_word("END") {
                c.glue.push(self.glue_rule()?);
            }
        }
        if !self.eat_word("END") {
            return self.err(&["`ROLE`", "`GLUE`", "`END`"]);
        }
        Ok(c)
    }

    fn glue_rule(&mut self) -> PResult<GlueRule> {
        let span = self.expect_word("A")?;
        self.expect(Tok::Dot)?;
        let a_interaction = self.name()?;
        self.expect(Tok::Dot)?;
        let a_tag = self.tag()?;
        self.expect(Tok::Arrow)?;
        self.expect_word("B")?;
        self.expect(Tok::Dot)?;
        let b_interaction = self.name()?;
        self.expect(Tok::Dot)?;
        let b_tag = self.tag()?;
        let mut translations = Vec::new();
        if self.eat_word("with") {
            loop {
                let p = self.name()?;
                self.expect(Tok::Assign)?;
                translations.push((p, self.pred()?));
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(Tok::Semi)?;
        Ok(GlueRule {
            a_interaction,
            a_tag,
            b_interaction,
            b_tag,
            translations,
            span,
        })
    }

    fn policy_block(&mut self, span: Span) -> PResult<ConstraintDef> {
        let name = self.name()?;
        self.expect(Tok::LBrace)?;
        self.expect_word("scope")?;
        self.expect(Tok::Colon)?;
        let mut scope = Vec::new();
        if *self.peek() != Tok::Semi {
            scope.push(self.qualified()?);
            while self.eat(&Tok::Comma) {
                scope.push(self.qualified()?);
            }
        }
        self.expect(Tok::Semi)?;
        self.expect_word("semiring")?;
        self.expect(Tok::Colon)?;
        let semiring = match self.peek() {
            Tok::Ident(w) => SemiringKind::from_name(w),
            _ => None,
        };
        let Some(semiring) = semiring else {
            return self.err(&["`boolean`", "`fuzzy`", "`weighted`"]);
        };
        self.bump();
        self.expect(Tok::Semi)?;
        self.expect_word("def")?;
        let mut params = Vec::new();
        if self.eat(&Tok::LParen) {
            if *self.peek() != Tok::RParen {
                params = self.ident_list()?;
            }
            self.expect(Tok::RParen)?;
        }
        self.expect(Tok::Colon)?;
        let def = self.pred()?;
        self.expect(Tok::Semi)?;
        self.expect(Tok::RBrace)?;
        Ok(ConstraintDef {
            name,
            scope,
            semiring,
            params,
            def,
            span,
        })
    }

    fn block(&mut self) -> PResult<Block> {
        let span = self.span();
        if self.eat_word("VBE") {
            return Ok(Block::Vbe(self.vbe(span)?));
        }
        if self.eat_word("BUSINESS") {
            if self.eat_word("CONFIGURATION") {
                return Ok(Block::Config(self.configuration(span)?));
            }
            if self.eat_word("PROTOCOL") {
                return Ok(Block::Spec(self.spec(SpecKind::BusinessProtocol, span)?));
            }
            if self.eat_word("ROLE") {
                return Ok(Block::Spec(self.spec(SpecKind::BusinessRole, span)?));
            }
            return self.err(&["`CONFIGURATION`", "`PROTOCOL`", "`ROLE`"]);
        }
        if self.eat_word("TASK") {
            self.expect_word("MODULE")?;
            return Ok(Block::Module(self.module(span, false)?));
        }
        if self.eat_word("VO") {
            self.expect_word("MODULE")?;
            return Ok(Block::Module(self.module(span, true)?));
        }
        if self.eat_word("CONNECTOR") {
            return Ok(Block::Connector(self.connector(span)?));
        }
        if self.eat_word("POLICY") {
            return Ok(Block::Policy(self.policy_block(span)?));
        }
        if self.eat_word("include") {
            let Tok::Str(path) = self.peek().clone() else {
                return self.err(&["string literal"]);
            };
            self.bump();
            self.expect(Tok::Semi)?;
            return Ok(Block::Include(path, span));
        }
        self.err(&[
            "`VBE`",
            "`BUSINESS`",
            "`TASK`",
            "`VO`",
            "`CONNECTOR`",
            "`POLICY`",
            "`include`",
        ])
    }

    fn action(&mut self) -> PResult<EvolutionAction> {
        if self.eat_word("remove") {
            let action = if self.eat_word("vo") {
                EvolutionAction::RemoveVo(self.name()?)
            } else if self.eat_word("task") {
                EvolutionAction::RemoveTask(self.name()?)
            } else if self.eat_word("associate") {
                EvolutionAction::RemoveAssociate(self.name()?)
            } else {
                return self.err(&["`vo`", "`task`", "`associate`"]);
            };
            self.expect(Tok::Semi)?;
            return Ok(action);
        }
        if !self.eat_word("add") {
            return self.err(&["`add`", "`remove`"]);
        }
        if self.eat_word("vo") {
            let vo = self.name()?;
            self.expect_word("customer")?;
            let customer = self.name()?;
            let mut externals = Vec::new();
            let mut associates = Vec::new();
            let mut policies = Vec::new();
            for item in self.action_items(&["external", "associate", "policy"])? {
                match item {
                    ConfigItem::External(e) => externals.push(e),
                    ConfigItem::Associate(a) => associates.push(a),
                    ConfigItem::Policy(p) => policies.push(p),
                    _ => unreachable!("filtered by action_items"),
                }
            }
            return Ok(EvolutionAction::AddVo {
                vo,
                customer,
                externals,
                associates,
                policies,
            });
        }
        if self.eat_word("task") {
            let task = self.name()?;
            let associates = self
                .action_items(&["associate"])?
                .into_iter()
                .filter_map(|i| match i {
                    ConfigItem::Associate(a) => Some(a),
                    _ => None,
                })
                .collect();
            return Ok(EvolutionAction::AddTask { task, associates });
        }
        if self.eat_word("associate") {
            // `add associate n;`, `add associate n { attrs }` or either
            // followed by `with { resource ...; }`
            let (name, span) = self.ident()?;
            let has_block = *self.peek() == Tok::LBrace;
            let attributes = if has_block { self.attributes()? } else { Vec::new() };
            let partner = Partner {
                name,
                attributes,
                persistence: PartnerKind::Associate,
                span,
            };
            let resources = if has_block && !self.is_word("with") {
                Vec::new()
            } else {
                self.action_items(&["resource"])?
                    .into_iter()
                    .filter_map(|i| match i {
                        ConfigItem::Resource(r) => Some(r),
                        _ => None,
                    })
                    .collect()
            };
            return Ok(EvolutionAction::AddAssociate { partner, resources });
        }
        self.err(&["`vo`", "`task`", "`associate`"])
    }

    /// `;` or `with { item* }` where each item's keyword is in `allowed`.
    fn action_items(&mut self, allowed: &[&str]) -> PResult<Vec<ConfigItem>> {
        let mut out = Vec::new();
        if self.eat(&Tok::Semi) {
            return Ok(out);
        }
        if !self.eat_word("with") {
            return self.err(&["`;`", "`with`"]);
        }
        self.expect(Tok::LBrace)?;
        loop {
            if self.eat(&Tok::RBrace) {
                return Ok(out);
            }
            let at = self.pos;
            match self.config_item()? {
                Some(item) if allowed.contains(&item.keyword()) => out.push(item),
                _ => {
                    self.pos = at;
                    let mut expected: Vec<String> = allowed.iter().map(|w| format!("`{w}`")).collect();
                    expected.push("`}`".into());
                    let e: Vec<&str> = expected.iter().map(String::as_str).collect();
                    return self.err(&e);
                }
            }
        }
    }
}

fn to_guard(e: &Expr, span: Span) -> PResult<Guard> {
    let mut items = Vec::new();
    for c in e.conjuncts() {
        match c {
            Expr::Event(ev) => items.push(GuardItem::Event(ev.clone())),
            p if p.contains_event() => {
                return Err(ParseError::new(
                    span,
                    &["event atoms only as top-level conjuncts of a guard"],
                    "a nested event atom",
                ))
            }
            p => items.push(GuardItem::Pred(p.clone())),
        }
    }
    Ok(Guard(items))
}

pub(crate) fn parse_blocks(text: &str) -> PResult<Vec<Block>> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.block()?);
    }
    Ok(out)
}

/// Builds a bundle from parsed blocks, enforcing one VBE, unique names per
/// category, and configurations that extend that VBE.
pub(crate) fn assemble(blocks: Vec<Block>) -> Result<ModelBundle, BundleError> {
    let mut vbe: Option<Vbe> = None;
    let mut configurations: Vec<BusinessConfiguration> = Vec::new();
    let mut modules: Vec<Module> = Vec::new();
    let mut specs: Vec<ComponentSpec> = Vec::new();
    let mut connectors: Vec<Connector> = Vec::new();
    let mut constraints: Vec<ConstraintDef> = Vec::new();
    let dup = |kind: &'static str, name: &str, span: Span| BundleError::DuplicateName {
        kind,
        name: name.to_owned(),
        span,
    };
    for b in blocks {
        match b {
            Block::Vbe(v) => {
                if vbe.is_some() {
                    return Err(dup("VBE", &v.name, v.span));
                }
                vbe = Some(v);
            }
            Block::Config(c) => {
                if configurations.iter().any(|o| o.name == c.name) {
                    return Err(dup("business configuration", &c.name, c.span));
                }
                configurations.push(c);
            }
            Block::Module(m) => {
                if modules.iter().any(|o| o.name() == m.name()) {
                    return Err(dup("module", m.name(), m.span()));
                }
                modules.push(m);
            }
            Block::Spec(s) => {
                if specs.iter().any(|o| o.name == s.name) {
                    return Err(dup("component specification", &s.name, s.span));
                }
                specs.push(s);
            }
            Block::Connector(c) => {
                if connectors.iter().any(|o| o.name == c.name) {
                    return Err(dup("connector", &c.name, c.span));
                }
                connectors.push(c);
            }
            Block::Policy(c) => {
                if constraints.iter().any(|o| o.name == c.name) {
                    return Err(dup("POLICY", &c.name, c.span));
                }
                constraints.push(c);
            }
            Block::Include(..) => {}
        }
    }
    let vbe = vbe.ok_or(BundleError::MissingVbe)?;
    if let Some(c) = configurations.iter().find(|c| c.base != vbe.name) {
        return Err(BundleError::UnresolvedReference {
            what: "VBE",
            name: c.base.clone(),
            span: c.span,
        });
    }
    Ok(ModelBundle {
        vbe,
        configurations,
        modules,
        specs,
        connectors,
        constraints,
    })
}

/// Parses a file of `POLICY` blocks, such as customer preferences.
pub fn parse_policies(text: &str) -> Result<Vec<ConstraintDef>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        let span = p.expect_word("POLICY")?;
        out.push(p.policy_block(span)?);
    }
    Ok(out)
}

/// Parses a single expression.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser::new(text)?;
    let e = p.expr()?;
    if !p.at_eof() {
        return p.err(&["end of input"]);
    }
    Ok(e)
}

/// Parses an evolution script: a sequence of actions such as
/// `remove vo travelBK;` or
/// `add vo weddings customer WeddingClient with { external ph: Photographer; }`.
pub fn parse_actions(text: &str) -> Result<Vec<EvolutionAction>, ParseError> {
    let mut p = Parser::new(text)?;
    let mut out = Vec::new();
    while !p.at_eof() {
        out.push(p.action()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn negative_literals_fold() {
        assert_eq!(parse_expr("-5").unwrap(), Expr::Int(-5));
        assert_eq!(
            parse_expr("-(5)").unwrap(),
            Expr::Unary(UnOp::Neg, Box::new(Expr::Int(5)))
        );
        assert_eq!(parse_expr("-9223372036854775808").unwrap(), Expr::Int(i64::MIN));
        assert!(parse_expr("9223372036854775808").is_err());
    }

    #[test]
    fn precedence_and_ranges() {
        let e = parse_expr("if d in [0..100] and 1 <= d then 1 else 0").unwrap();
        let Expr::If(c, _, _) = e else { panic!() };
        assert_eq!(c.conjuncts().len(), 2);
        assert_eq!(parse_expr("a - b - c").unwrap().to_string(), "a - b - c");
        assert_eq!(parse_expr("a - (b - c)").unwrap().to_string(), "a - (b - c)");
    }

    #[test]
    fn comparisons_do_not_chain() {
        let e = parse_expr("a < b < c").unwrap_err();
        assert_eq!(e.column, 7);
    }

    #[test]
    fn event_atoms_need_a_tag() {
        assert!(matches!(parse_expr("x.init!").unwrap(), Expr::Event(_)));
        let e = parse_expr("x.launch!").unwrap_err();
        assert_eq!((e.line, e.column), (1, 1));
    }

    #[test]
    fn reserved_words_are_not_references() {
        assert!(parse_expr("until").is_err());
        assert_eq!(parse_expr("bookTrip.in").unwrap(), Expr::reference("bookTrip.in"));
    }

    #[test]
    fn bad_kind_token_lists_the_eight_kinds() {
        let text = "BUSINESS PROTOCOL P is\n  INTERACTIONS\n    r+s bookTrip\nEND\n";
        let Err(BundleError::Parse { error, .. }) = parse_blocks(text).map_err(BundleError::from) else {
            panic!("expected a parse error");
        };
        assert_eq!((error.line, error.column), (3, 5));
        for k in KINDS {
            assert!(error.expected.iter().any(|e| e == k), "{k} missing");
        }
    }

    #[test]
    fn actions_parse() {
        let acts = parse_actions(
            "remove vo travelBK;\nadd vo w customer C with {\n  external p: P;\n  associate a;\n}\nadd associate n { x: int; } with { resource r; }\n",
        )
        .unwrap();
        assert_eq!(acts.len(), 3);
        assert_eq!(acts[0], EvolutionAction::RemoveVo("travelBK".into()));
        let EvolutionAction::AddVo { externals, associates, .. } = &acts[1] else { panic!() };
        assert_eq!((externals.len(), associates.len()), (1, 1));
        assert!(parse_actions("add vo w customer C with { task t; }").is_err());
    }

    #[test]
    fn missing_vbe_and_duplicates() {
        assert_eq!(assemble(parse_blocks("").unwrap()), Err(BundleError::MissingVbe));
        let twice = "VBE a is\nEND\nVBE b is\nEND\n";
        assert!(matches!(
            assemble(parse_blocks(twice).unwrap()),
            Err(BundleError::DuplicateName { kind: "VBE", .. })
        ));
        let wrong_base = "VBE a is\nEND\nBUSINESS CONFIGURATION c of b is\nEND\n";
        assert!(matches!(
            assemble(parse_blocks(wrong_base).unwrap()),
            Err(BundleError::UnresolvedReference { .. })
        ));
    }

    mod round_trip {
        use super::*;
        use crate::expr::{BinOp, Direction, EventExpr, EventTag};
        use proptest::prelude::*;

        fn ident() -> impl Strategy<Value = String> {
            "[a-zA-Z][a-zA-Z0-9_]{0,5}".prop_filter("reserved", |s| !RESERVED.contains(&s.as_str()))
        }

        fn leaf() -> impl Strategy<Value = Expr> {
            prop_oneof![
                (-1000i64..1000).prop_map(Expr::Int),
                any::<bool>().prop_map(Expr::Bool),
                "[ -~]{0,6}".prop_map(Expr::Str),
                Just(Expr::Inf),
                proptest::collection::vec(ident(), 1..3).prop_map(Expr::Ref),
                (ident(), 0usize..5, any::<bool>()).prop_map(|(interaction, t, emit)| Expr::Event(EventExpr {
                    interaction,
                    tag: EventTag::ALL[t],
                    direction: if emit { Direction::Emit } else { Direction::Receive },
                })),
            ]
        }

        const OPS: [BinOp; 13] = [
            BinOp::Or,
            BinOp::And,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Lt,
            BinOp::Le,
            BinOp::Gt,
            BinOp::Ge,
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Mod,
        ];

        fn expr() -> impl Strategy<Value = Expr> {
            leaf().prop_recursive(5, 48, 3, |inner| {
                prop_oneof![
                    inner.clone().prop_map(|e| Expr::Unary(UnOp::Not, Box::new(e))),
                    // a negated literal is written as a negative literal
                    inner
                        .clone()
                        .prop_filter("literal", |e| !matches!(e, Expr::Int(_)))
                        .prop_map(|e| Expr::Unary(UnOp::Neg, Box::new(e))),
                    (0usize..13, inner.clone(), inner.clone()).prop_map(|(op, a, b)| Expr::binary(OPS[op], a, b)),
                    (inner.clone(), -50i64..50, -50i64..50).prop_map(|(e, lo, hi)| Expr::InRange(Box::new(e), lo, hi)),
                    (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| Expr::If(
                        Box::new(c),
                        Box::new(t),
                        Box::new(e)
                    )),
                ]
            })
        }

        proptest! {
            #[test]
            fn rendered_expressions_parse_back(e in expr()) {
                let text = e.to_string();
                prop_assert_eq!(parse_expr(&text).map_err(|err| format!("{err} in `{text}`")), Ok(e));
            }
        }
    }
}
