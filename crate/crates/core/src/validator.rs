//! Plan validation by replay: bind each step, check applicability, apply
//! effects, and test the goal at the end. Reports the first failing step.

use crate::model::{
    apply, is_applicable, satisfies, Domain, ModelError, Plan, Problem, State, TypeHierarchy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    ActionUnknown,
    BadBinding,
    PreconditionUnsatisfied,
    GoalUnsatisfied,
}

impl Reason {
    pub fn code(self) -> &'static str {
        match self {
            Reason::ActionUnknown => "action-unknown",
            Reason::BadBinding => "bad-binding",
            Reason::PreconditionUnsatisfied => "precondition-unsatisfied",
            Reason::GoalUnsatisfied => "goal-unsatisfied",
        }
    }
}

#[derive(Debug, Clone)]
pub enum Validation {
    Valid {
        steps: usize,
        final_state: State,
    },
    /// `step` is the 1-based index of the first failing step; the goal check
    /// failing reports `step = plan length + 1`.
    Invalid {
        step: usize,
        reason: Reason,
    },
}

/// Replays `plan` from the problem's initial state under `domain`.
///
/// Binding errors cover wrong arity, unknown objects, and type mismatches.
/// Only model-level inconsistencies (a malformed domain) surface as `Err`.
pub fn validate_plan(
    domain: &Domain,
    problem: &Problem,
    plan: &Plan,
) -> Result<Validation, ModelError> {
    let hierarchy = TypeHierarchy::of(domain)?;
    let object_types = problem.object_types();
    let mut state = problem.init.clone();
    for (i, step) in plan.steps.iter().enumerate() {
        let step_no = i + 1;
        let Some(schema) = domain.action(&step.action) else {
            return Ok(Validation::Invalid {
                step: step_no,
                reason: Reason::ActionUnknown,
            });
        };
        if schema.params.len() != step.args.len() {
            return Ok(Validation::Invalid {
                step: step_no,
                reason: Reason::BadBinding,
            });
        }
        let typed_ok = schema.params.iter().zip(&step.args).all(|(p, arg)| {
            object_types
                .get(arg.as_str())
                .is_some_and(|ty| hierarchy.is_subtype(ty, &p.ty))
        });
        if !typed_ok {
            return Ok(Validation::Invalid {
                step: step_no,
                reason: Reason::BadBinding,
            });
        }
        let ground = schema.instantiate(&step.args)?;
        if !is_applicable(&state, &ground) {
            return Ok(Validation::Invalid {
                step: step_no,
                reason: Reason::PreconditionUnsatisfied,
            });
        }
        state = apply(&state, &ground)?;
    }
    if !satisfies(&state, &problem.goal) {
        return Ok(Validation::Invalid {
            step: plan.steps.len() + 1,
            reason: Reason::GoalUnsatisfied,
        });
    }
    Ok(Validation::Valid {
        steps: plan.steps.len(),
        final_state: state,
    })
}
