//! Lexing, parsing, and pretty-printing for the supported PDDL subset
//! (`:strips`, `:typing`, `:negative-preconditions`) plus IPC-style plan
//! files.
//!
//! Anything outside the subset (quantifiers, conditional effects, equality,
//! numeric fluents, ...) is rejected with an `UnsupportedFeature`
//! diagnostic carrying the offending span. Identifiers are lowercased on
//! ingestion.

mod print;
mod sexp;

pub use print::{print_domain, print_plan, print_problem};
pub use sexp::{read_all, Sexp, Span};

use std::collections::BTreeSet;
use std::fmt;

use crate::model::{
    ActionSchema, Domain, GroundAtom, Ident, Literal, ModelError, ObjectDecl, Param, Plan,
    PlanStep, PredicateSchema, Problem, State, Term, TypeDecl, OBJECT_TYPE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Syntax,
    UnsupportedFeature,
    DuplicateName,
    UnknownType,
    UnknownPredicate,
    UnknownObject,
    ArityMismatch,
    TypeError,
    DomainMismatch,
}

#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub severity: Severity,
    pub kind: ErrorKind,
    pub span: Span,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(
            f,
            "{sev}: {} (line {}, column {})",
            self.message, self.span.line, self.span.col
        )
    }
}

/// Outcome of a failed parse: at least one error-severity diagnostic.
#[derive(Debug, Clone)]
pub struct ParseReport {
    pub diagnostics: Vec<Diagnostic>,
}

impl ParseReport {
    fn from(diagnostic: Diagnostic) -> ParseReport {
        ParseReport {
            diagnostics: vec![diagnostic],
        }
    }

    pub fn has_errors(&self) -> bool {
        self.diagnostics
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

impl fmt::Display for ParseReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.diagnostics {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

const SUPPORTED_REQUIREMENTS: &[&str] = [":strips", ":typing", ":negative-preconditions"].as_slice();

fn err(kind: ErrorKind, span: Span, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        severity: Severity::Error,
        kind,
        span,
        message: message.into(),
    }
}

fn syntax(span: Span, message: impl Into<String>) -> Diagnostic {
    err(ErrorKind::Syntax, span, message)
}

fn unsupported(span: Span, what: &str) -> Diagnostic {
    err(
        ErrorKind::UnsupportedFeature,
        span,
        format!("unsupported construct `{what}`"),
    )
}

fn model_error_kind(e: &ModelError) -> ErrorKind {
    match e {
        ModelError::DuplicateName { .. } | ModelError::PredicateActionClash(_) => {
            ErrorKind::DuplicateName
        }
        ModelError::UnknownType(_) | ModelError::TypeCycle(_) => ErrorKind::UnknownType,
        ModelError::UnknownPredicate(_) => ErrorKind::UnknownPredicate,
        ModelError::ArityMismatch { .. } | ModelError::BindingArity { .. } => {
            ErrorKind::ArityMismatch
        }
        ModelError::UnknownObject(_) => ErrorKind::UnknownObject,
        ModelError::TypeError { .. } | ModelError::UnboundVariable { .. } => ErrorKind::TypeError,
        ModelError::DomainMismatch { .. } => ErrorKind::DomainMismatch,
        ModelError::ComplementaryLiterals { .. } | ModelError::NotApplicable => ErrorKind::Syntax,
    }
}

fn ident(sexp: &Sexp) -> Result<Ident, Diagnostic> {
    match sexp.atom() {
        Some(text) if !text.starts_with('?') && !text.starts_with(':') => {
            Ok(text.to_ascii_lowercase())
        }
        Some(text) => Err(syntax(sexp.span(), format!("expected a name, got `{text}`"))),
        None => Err(syntax(sexp.span(), "expected a name, got a list")),
    }
}

fn variable(sexp: &Sexp) -> Result<Ident, Diagnostic> {
    match sexp.atom() {
        Some(text) if text.len() > 1 && text.starts_with('?') => {
            Ok(text[1..].to_ascii_lowercase())
        }
        _ => Err(syntax(sexp.span(), "expected a `?variable`")),
    }
}

/// Parses `name* [- type name* [- type ...]]`; untyped tails default to
/// `object`. `as_var` selects `?variable` versus plain-name elements.
fn typed_list(items: &[Sexp], as_var: bool) -> Result<Vec<(Ident, Ident)>, Diagnostic> {
    let mut out = Vec::new();
    let mut pending: Vec<Ident> = Vec::new();
    let mut iter = items.iter().peekable();
    while let Some(item) = iter.next() {
        if item.atom() == Some("-") {
            let ty_sexp = iter
                .next()
                .ok_or_else(|| syntax(item.span(), "expected a type after `-`"))?;
            let ty = ident(ty_sexp)?;
            if pending.is_empty() {
                return Err(syntax(item.span(), "type given without preceding names"));
            }
            out.extend(pending.drain(..).map(|n| (n, ty.clone())));
        } else if as_var {
            pending.push(variable(item)?);
        } else {
            pending.push(ident(item)?);
        }
    }
    out.extend(pending.into_iter().map(|n| (n, OBJECT_TYPE.to_string())));
    Ok(out)
}

/// The heads that signal a construct outside the supported subset.
fn check_supported_head(head: &str, span: Span) -> Result<(), Diagnostic> {
    const REJECTED: &[&str] = &[
        "forall", "exists", "when", "or", "imply", "=", "increase", "decrease", "assign",
        "scale-up", "scale-down", "preference",
    ];
    if REJECTED.contains(&head) {
        return Err(unsupported(span, head));
    }
    Ok(())
}

fn parse_literal(sexp: &Sexp) -> Result<Literal, Diagnostic> {
    let items = sexp
        .list()
        .ok_or_else(|| syntax(sexp.span(), "expected a literal"))?;
    let head = items
        .first()
        .and_then(|s| s.atom())
        .map(|s| s.to_ascii_lowercase())
        .ok_or_else(|| syntax(sexp.span(), "expected a predicate name"))?;
    check_supported_head(&head, sexp.span())?;
    if head == "not" {
        if items.len() != 2 {
            return Err(syntax(sexp.span(), "`not` takes exactly one literal"));
        }
        let inner = parse_literal(&items[1])?;
        if inner.negated {
            return Err(syntax(sexp.span(), "double negation is not allowed"));
        }
        return Ok(Literal {
            negated: true,
            ..inner
        });
    }
    let args = items[1..]
        .iter()
        .map(|s| match s.atom() {
            Some(text) if text.starts_with('?') => variable(s).map(Term::Var),
            Some(_) => ident(s).map(Term::Obj),
            None => Err(syntax(s.span(), "expected a term")),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Literal {
        predicate: head,
        args,
        negated: false,
    })
}

/// Parses `(and lit*)` or a bare literal into a literal set.
fn parse_condition(sexp: &Sexp) -> Result<BTreeSet<Literal>, Diagnostic> {
    let items = sexp
        .list()
        .ok_or_else(|| syntax(sexp.span(), "expected a condition"))?;
    let head = items.first().and_then(|s| s.atom()).map(|s| s.to_ascii_lowercase());
    if head.as_deref() == Some("and") {
        let mut set = BTreeSet::new();
        for item in &items[1..] {
            set.insert(parse_literal(item)?);
        }
        Ok(set)
    } else {
        Ok([parse_literal(sexp)?].into_iter().collect())
    }
}

fn define_body<'a>(
    forms: &'a [Sexp],
    expected_kind: &str,
) -> Result<(Ident, &'a [Sexp], Span), Diagnostic> {
    let whole_span = forms
        .first()
        .map(|f| f.span())
        .unwrap_or(Span {
            start: 0,
            end: 0,
            line: 1,
            col: 1,
        });
    if forms.len() != 1 {
        return Err(syntax(
            whole_span,
            format!("expected exactly one `(define ...)` form, found {}", forms.len()),
        ));
    }
    let items = forms[0]
        .list()
        .ok_or_else(|| syntax(whole_span, "expected `(define ...)`"))?;
    match items.first().and_then(|s| s.atom()) {
        Some(head) if head.eq_ignore_ascii_case("define") => {}
        _ => return Err(syntax(whole_span, "expected `(define ...)`")),
    }
    let header = items
        .get(1)
        .and_then(|s| s.list())
        .ok_or_else(|| syntax(whole_span, format!("expected `({expected_kind} <name>)`")))?;
    match header.first().and_then(|s| s.atom()) {
        Some(kind) if kind.eq_ignore_ascii_case(expected_kind) => {}
        _ => {
            return Err(syntax(
                items[1].span(),
                format!("expected `({expected_kind} <name>)`"),
            ))
        }
    }
    let name = ident(
        header
            .get(1)
            .ok_or_else(|| syntax(items[1].span(), "missing name"))?,
    )?;
    Ok((name, &items[2..], forms[0].span()))
}

fn section_keyword(section: &Sexp) -> Result<(String, &[Sexp]), Diagnostic> {
    let items = section
        .list()
        .ok_or_else(|| syntax(section.span(), "expected a `(:section ...)`"))?;
    let key = items
        .first()
        .and_then(|s| s.atom())
        .filter(|s| s.starts_with(':'))
        .map(|s| s.to_ascii_lowercase())
        .ok_or_else(|| syntax(section.span(), "expected a `:section` keyword"))?;
    Ok((key, &items[1..]))
}

fn parse_requirements(items: &[Sexp]) -> Result<(), Diagnostic> {
    for item in items {
        let flag = item
            .atom()
            .map(|s| s.to_ascii_lowercase())
            .ok_or_else(|| syntax(item.span(), "expected a requirement flag"))?;
        if !SUPPORTED_REQUIREMENTS.contains(&flag.as_str()) {
            return Err(unsupported(item.span(), &flag));
        }
    }
    Ok(())
}

/// Parses a domain file in the supported subset.
pub fn parse_domain(text: &str) -> Result<Domain, ParseReport> {
    parse_domain_inner(text).map_err(ParseReport::from)
}

fn parse_domain_inner(text: &str) -> Result<Domain, Diagnostic> {
    let forms = read_all(text)?;
    let (name, sections, whole) = define_body(&forms, "domain")?;
    let mut types = Vec::new();
    let mut predicates = Vec::new();
    let mut actions = Vec::new();
    for section in sections {
        let (key, body) = section_keyword(section)?;
        match key.as_str() {
            ":requirements" => parse_requirements(body)?,
            ":types" => {
                for (ty, parent) in typed_list(body, false)? {
                    types.push(TypeDecl { name: ty, parent });
                }
            }
            ":predicates" => {
                for pred in body {
                    let items = pred
                        .list()
                        .ok_or_else(|| syntax(pred.span(), "expected a predicate declaration"))?;
                    let pname = ident(
                        items
                            .first()
                            .ok_or_else(|| syntax(pred.span(), "empty predicate declaration"))?,
                    )?;
                    let params = typed_list(&items[1..], true)?
                        .into_iter()
                        .map(|(var, ty)| Param { var, ty })
                        .collect();
                    predicates.push(PredicateSchema { name: pname, params });
                }
            }
            ":action" => actions.push(parse_action(body, section.span())?),
            ":constants" | ":functions" | ":durative-action" | ":derived" | ":constraints" => {
                return Err(unsupported(section.span(), &key))
            }
            _ => return Err(syntax(section.span(), format!("unknown section `{key}`"))),
        }
    }
    Domain::validated(name, types, predicates, actions)
        .map_err(|e| err(model_error_kind(&e), whole, e.to_string()))
}

fn parse_action(body: &[Sexp], span: Span) -> Result<ActionSchema, Diagnostic> {
    let name = ident(body.first().ok_or_else(|| syntax(span, "missing action name"))?)?;
    let mut params = Vec::new();
    let mut preconditions = BTreeSet::new();
    let mut effects = None;
    let mut iter = body[1..].iter();
    while let Some(key_sexp) = iter.next() {
        let key = key_sexp
            .atom()
            .filter(|s| s.starts_with(':'))
            .map(|s| s.to_ascii_lowercase())
            .ok_or_else(|| syntax(key_sexp.span(), "expected `:parameters`, `:precondition`, or `:effect`"))?;
        let value = iter
            .next()
            .ok_or_else(|| syntax(key_sexp.span(), format!("missing value after `{key}`")))?;
        match key.as_str() {
            ":parameters" => {
                let items = value
                    .list()
                    .ok_or_else(|| syntax(value.span(), "expected a parameter list"))?;
                params = typed_list(items, true)?
                    .into_iter()
                    .map(|(var, ty)| Param { var, ty })
                    .collect();
            }
            ":precondition" => preconditions = parse_condition(value)?,
            ":effect" => effects = Some(parse_condition(value)?),
            _ => return Err(syntax(key_sexp.span(), format!("unknown action key `{key}`"))),
        }
    }
    Ok(ActionSchema {
        name,
        params,
        preconditions,
        effects: effects.ok_or_else(|| syntax(span, "action is missing an `:effect`"))?,
    })
}

/// Parses a problem file and type-checks it against `domain`.
pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, ParseReport> {
    parse_problem_inner(text, domain).map_err(ParseReport::from)
}

fn parse_problem_inner(text: &str, domain: &Domain) -> Result<Problem, Diagnostic> {
    let forms = read_all(text)?;
    let (name, sections, whole) = define_body(&forms, "problem")?;
    let mut domain_name = None;
    let mut objects = Vec::new();
    let mut init = BTreeSet::new();
    let mut goal = BTreeSet::new();
    for section in sections {
        let (key, body) = section_keyword(section)?;
        match key.as_str() {
            ":domain" => {
                domain_name = Some(ident(body.first().ok_or_else(|| {
                    syntax(section.span(), "missing domain name")
                })?)?);
            }
            ":objects" => {
                for (obj, ty) in typed_list(body, false)? {
                    objects.push(ObjectDecl { name: obj, ty });
                }
            }
            ":init" => {
                for atom in body {
                    let lit = parse_literal(atom)?;
                    if lit.negated {
                        return Err(unsupported(atom.span(), "negated init atom"));
                    }
                    init.insert(ground_atom(lit, atom.span())?);
                }
            }
            ":goal" => {
                for lit in parse_condition(
                    body.first()
                        .ok_or_else(|| syntax(section.span(), "missing goal condition"))?,
                )? {
                    if lit.negated {
                        return Err(unsupported(section.span(), "negated goal atom"));
                    }
                    goal.insert(ground_atom(lit, section.span())?);
                }
            }
            ":metric" | ":constraints" => return Err(unsupported(section.span(), &key)),
            _ => return Err(syntax(section.span(), format!("unknown section `{key}`"))),
        }
    }
    let domain_name =
        domain_name.ok_or_else(|| syntax(whole, "problem is missing a `(:domain ...)`"))?;
    if domain_name != domain.name {
        return Err(err(
            ErrorKind::DomainMismatch,
            whole,
            format!(
                "problem declares domain `{domain_name}` but was parsed against `{}`",
                domain.name
            ),
        ));
    }
    Problem::validated(name, domain_name, objects, State { atoms: init }, goal, domain)
        .map_err(|e| err(model_error_kind(&e), whole, e.to_string()))
}

fn ground_atom(lit: Literal, span: Span) -> Result<GroundAtom, Diagnostic> {
    let args = lit
        .args
        .into_iter()
        .map(|t| match t {
            Term::Obj(o) => Ok(o),
            Term::Var(v) => Err(syntax(span, format!("variable `?{v}` in a ground atom"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(GroundAtom {
        predicate: lit.predicate,
        args,
    })
}

/// Parses a plan file: one `(action obj ...)` step per line, `;` comments.
pub fn parse_plan(text: &str) -> Result<Plan, ParseReport> {
    parse_plan_inner(text).map_err(ParseReport::from)
}

fn parse_plan_inner(text: &str) -> Result<Plan, Diagnostic> {
    let mut steps = Vec::new();
    let mut offset = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line_start = offset;
        offset += line.len() + 1;
        let content = line.split(';').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let span = Span {
            start: line_start,
            end: line_start + line.len(),
            line: lineno as u32 + 1,
            col: 1,
        };
        let forms = read_all(content).map_err(|d| Diagnostic { span, ..d })?;
        let [form] = forms.as_slice() else {
            return Err(syntax(span, "expected one step per line"));
        };
        let items = form
            .list()
            .ok_or_else(|| syntax(span, "expected `(action obj ...)`"))?;
        let action = ident(
            items
                .first()
                .ok_or_else(|| syntax(span, "empty plan step"))?,
        )
        .map_err(|d| Diagnostic { span, ..d })?;
        let args = items[1..]
            .iter()
            .map(ident)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|d| Diagnostic { span, ..d })?;
        steps.push(PlanStep { action, args });
    }
    Ok(Plan { steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "(define (domain d) (:requirements :strips) (:predicates (p)) \
         (:action a :parameters () :precondition (p) :effect (not (p))))";

    #[test]
    fn minimal_domain_parses() {
        let d = parse_domain(MINIMAL).unwrap();
        assert_eq!(d.predicates.len(), 1);
        assert_eq!(d.actions.len(), 1);
        let a = &d.actions[0];
        assert_eq!(a.effects.iter().filter(|l| l.negated).count(), 1);
    }

    #[test]
    fn forall_is_unsupported() {
        let text = "(define (domain d) (:predicates (p ?x)) \
             (:action a :parameters () :precondition (forall (?x) (p ?x)) :effect (p ?x)))";
        let report = parse_domain(text).unwrap_err();
        assert!(report
            .diagnostics
            .iter()
            .any(|d| d.kind == ErrorKind::UnsupportedFeature));
    }

    #[test]
    fn unsupported_requirement_flag_is_an_error() {
        let text = "(define (domain d) (:requirements :strips :equality) \
             (:predicates (p)) (:action a :parameters () :effect (p)))";
        let report = parse_domain(text).unwrap_err();
        assert_eq!(report.diagnostics[0].kind, ErrorKind::UnsupportedFeature);
    }

    #[test]
    fn duplicate_action_is_an_error() {
        let text = "(define (domain d) (:predicates (p)) \
             (:action a :parameters () :effect (p)) (:action a :parameters () :effect (p)))";
        let report = parse_domain(text).unwrap_err();
        assert_eq!(report.diagnostics[0].kind, ErrorKind::DuplicateName);
    }

    #[test]
    fn identifiers_are_lowercased() {
        let text = "(define (domain D) (:predicates (P ?X)) \
             (:action A :parameters (?X) :effect (P ?X)))";
        let d = parse_domain(text).unwrap();
        assert_eq!(d.name, "d");
        assert_eq!(d.predicates[0].name, "p");
        assert_eq!(d.actions[0].params[0].var, "x");
    }

    #[test]
    fn problem_with_unknown_object_in_init() {
        let domain = parse_domain(MINIMAL).unwrap();
        // p is 0-ary so use a 1-ary domain instead
        let domain2 = parse_domain(
            "(define (domain d) (:predicates (q ?x)) (:action a :parameters (?x) :effect (q ?x)))",
        )
        .unwrap();
        let _ = domain;
        let text = "(define (problem pr) (:domain d) (:objects o1) (:init (q o2)) (:goal (and)))";
        let report = parse_problem(text, &domain2).unwrap_err();
        assert_eq!(report.diagnostics[0].kind, ErrorKind::UnknownObject);
    }

    #[test]
    fn empty_goal_conjunction_is_allowed() {
        let domain = parse_domain(MINIMAL).unwrap();
        let text = "(define (problem pr) (:domain d) (:init (p)) (:goal (and)))";
        let p = parse_problem(text, &domain).unwrap();
        assert!(p.goal.is_empty());
    }

    #[test]
    fn wrong_domain_name_is_a_mismatch() {
        let domain = parse_domain(MINIMAL).unwrap();
        let text = "(define (problem pr) (:domain other) (:init) (:goal (and)))";
        let report = parse_problem(text, &domain).unwrap_err();
        assert_eq!(report.diagnostics[0].kind, ErrorKind::DomainMismatch);
    }

    #[test]
    fn plan_three_steps() {
        let plan = parse_plan("(pick b1 rooma g1)\n(move rooma roomb)\n(drop b1 roomb g1)").unwrap();
        assert_eq!(plan.len(), 3);
        assert_eq!(plan.steps[1].action, "move");
    }

    #[test]
    fn empty_plan_file() {
        assert!(parse_plan("").unwrap().is_empty());
        assert!(parse_plan("; just a comment\n\n").unwrap().is_empty());
    }

    #[test]
    fn truncated_plan_step_reports_line_one() {
        let report = parse_plan("(pick").unwrap_err();
        assert_eq!(report.diagnostics[0].span.line, 1);
    }
}
