//! Canonical PDDL printing.
//!
//! Output is a pure function of the value: collections are emitted in
//! sorted order with 2-space indentation, so equal values print to
//! byte-identical text and every printed file re-parses to an equal value.

use std::fmt::Write;

use crate::model::{ActionSchema, Domain, Literal, Param, Plan, Problem};

fn params_text(params: &[Param]) -> String {
    let mut out = String::new();
    for (i, p) in params.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        let _ = write!(out, "?{} - {}", p.var, p.ty);
    }
    out
}

fn condition_text(literals: impl Iterator<Item = Literal>) -> String {
    let mut out = String::from("(and");
    for lit in literals {
        let _ = write!(out, " {lit}");
    }
    out.push(')');
    out
}

fn action_text(action: &ActionSchema) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "  (:action {}", action.name);
    let _ = writeln!(out, "    :parameters ({})", params_text(&action.params));
    let _ = writeln!(
        out,
        "    :precondition {}",
        condition_text(action.preconditions.iter().cloned())
    );
    let _ = write!(
        out,
        "    :effect {})",
        condition_text(action.effects.iter().cloned())
    );
    out
}

/// Renders a domain; the `:requirements` line is computed from the value,
/// so emitted files are valid standalone PDDL.
pub fn print_domain(domain: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", domain.name);
    let mut reqs = String::from(":strips :typing");
    if domain.uses_negative_preconditions() {
        reqs.push_str(" :negative-preconditions");
    }
    let _ = writeln!(out, "  (:requirements {reqs})");
    if !domain.types.is_empty() {
        let _ = writeln!(out, "  (:types");
        for (i, t) in domain.types.iter().enumerate() {
            let close = if i + 1 == domain.types.len() { ")" } else { "" };
            let _ = writeln!(out, "    {} - {}{close}", t.name, t.parent);
        }
    }
    if domain.predicates.is_empty() {
        let _ = writeln!(out, "  (:predicates)");
    } else {
        let _ = writeln!(out, "  (:predicates");
    }
    for (i, p) in domain.predicates.iter().enumerate() {
        let close = if i + 1 == domain.predicates.len() { ")" } else { "" };
        if p.params.is_empty() {
            let _ = writeln!(out, "    ({}){close}", p.name);
        } else {
            let _ = writeln!(out, "    ({} {}){close}", p.name, params_text(&p.params));
        }
    }
    for (i, a) in domain.actions.iter().enumerate() {
        let close = if i + 1 == domain.actions.len() { ")" } else { "" };
        let _ = writeln!(out, "{}{close}", action_text(a));
    }
    if domain.actions.is_empty() {
        // close the define form when no action block carried the paren
        out.pop();
        out.push_str(")\n");
    }
    out
}

pub fn print_problem(problem: &Problem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", problem.name);
    let _ = writeln!(out, "  (:domain {})", problem.domain_name);
    if problem.objects.is_empty() {
        let _ = writeln!(out, "  (:objects)");
    } else {
        let _ = writeln!(out, "  (:objects");
        for (i, o) in problem.objects.iter().enumerate() {
            let close = if i + 1 == problem.objects.len() { ")" } else { "" };
            let _ = writeln!(out, "    {} - {}{close}", o.name, o.ty);
        }
    }
    if problem.init.atoms.is_empty() {
        let _ = writeln!(out, "  (:init)");
    } else {
        let _ = writeln!(out, "  (:init");
        for (i, atom) in problem.init.atoms.iter().enumerate() {
            let close = if i + 1 == problem.init.atoms.len() { ")" } else { "" };
            let _ = writeln!(out, "    {atom}{close}");
        }
    }
    if problem.goal.is_empty() {
        let _ = writeln!(out, "  (:goal (and)))");
    } else {
        let _ = writeln!(out, "  (:goal (and");
        for (i, atom) in problem.goal.iter().enumerate() {
            let close = if i + 1 == problem.goal.len() { ")))" } else { "" };
            let _ = writeln!(out, "    {atom}{close}");
        }
    }
    out
}

/// One step per line in the IPC plan format.
pub fn print_plan(plan: &Plan) -> String {
    let mut out = String::new();
    for step in &plan.steps {
        let _ = writeln!(out, "{step}");
    }
    out
}
