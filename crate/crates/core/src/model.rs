//! STRIPS data model: typed domains, problems, states, and ground actions.
//!
//! States are closed-world sets of ground atoms; negative preconditions are
//! checked by absence. All values are immutable after construction and all
//! operations are pure, so they can be shared freely across worker threads.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use thiserror::Error;

/// Canonical lowercased identifier (PDDL is case-insensitive).
pub type Ident = String;

/// The implicit root of every type hierarchy.
pub const OBJECT_TYPE: &str = "object";

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("duplicate {kind} name `{name}`")]
    DuplicateName { kind: &'static str, name: Ident },
    #[error("predicate `{0}` shares its name with an action")]
    PredicateActionClash(Ident),
    #[error("type `{0}` is not declared")]
    UnknownType(Ident),
    #[error("cycle in the type hierarchy involving `{0}`")]
    TypeCycle(Ident),
    #[error("unknown predicate `{0}`")]
    UnknownPredicate(Ident),
    #[error("predicate `{predicate}` expects {expected} arguments, got {got}")]
    ArityMismatch {
        predicate: Ident,
        expected: usize,
        got: usize,
    },
    #[error("variable `{var}` is not a parameter of action `{action}`")]
    UnboundVariable { var: Ident, action: Ident },
    #[error("action `{action}` contains literal `{literal}` together with its negation")]
    ComplementaryLiterals { action: Ident, literal: String },
    #[error("unknown object `{0}`")]
    UnknownObject(Ident),
    #[error("object `{object}` of type `{actual}` is not compatible with `{expected}`")]
    TypeError {
        object: Ident,
        actual: Ident,
        expected: Ident,
    },
    #[error("problem declares domain `{got}` but was checked against `{expected}`")]
    DomainMismatch { expected: Ident, got: Ident },
    #[error("action `{action}` expects {expected} arguments, got {got}")]
    BindingArity {
        action: Ident,
        expected: usize,
        got: usize,
    },
    #[error("action not applicable in the current state")]
    NotApplicable,
}

/// A declared type with its parent in the hierarchy (default `object`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeDecl {
    pub name: Ident,
    pub parent: Ident,
}

/// A typed formal parameter of a predicate or action schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Param {
    pub var: Ident,
    pub ty: Ident,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateSchema {
    pub name: Ident,
    pub params: Vec<Param>,
}

impl PredicateSchema {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

/// A term inside a lifted literal: either a schema variable or a constant.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Var(Ident),
    Obj(Ident),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Obj(o) => write!(f, "{o}"),
        }
    }
}

/// A possibly negated predicate application inside an action schema.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub predicate: Ident,
    pub args: Vec<Term>,
    pub negated: bool,
}

impl Literal {
    pub fn complement(&self) -> Literal {
        Literal {
            predicate: self.predicate.clone(),
            args: self.args.clone(),
            negated: !self.negated,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "(not ")?;
        }
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")?;
        if self.negated {
            write!(f, ")")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Ident,
    pub params: Vec<Param>,
    pub preconditions: BTreeSet<Literal>,
    pub effects: BTreeSet<Literal>,
}

impl ActionSchema {
    /// Instantiates the schema with a positional object binding.
    ///
    /// Effect normalization happens here: when a positive and a negative
    /// effect ground to the same atom, the add wins and the delete is
    /// dropped.
    pub fn instantiate(&self, binding: &[Ident]) -> Result<GroundAction, ModelError> {
        if binding.len() != self.params.len() {
            return Err(ModelError::BindingArity {
                action: self.name.clone(),
                expected: self.params.len(),
                got: binding.len(),
            });
        }
        let env: BTreeMap<&str, &str> = self
            .params
            .iter()
            .zip(binding)
            .map(|(p, o)| (p.var.as_str(), o.as_str()))
            .collect();
        let ground = |lit: &Literal| -> Result<GroundAtom, ModelError> {
            let args = lit
                .args
                .iter()
                .map(|t| match t {
                    Term::Obj(o) => Ok(o.clone()),
                    Term::Var(v) => env
                        .get(v.as_str())
                        .map(|o| (*o).to_string())
                        .ok_or_else(|| ModelError::UnboundVariable {
                            var: v.clone(),
                            action: self.name.clone(),
                        }),
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok(GroundAtom {
                predicate: lit.predicate.clone(),
                args,
            })
        };
        let mut pre_pos = BTreeSet::new();
        let mut pre_neg = BTreeSet::new();
        for lit in &self.preconditions {
            let atom = ground(lit)?;
            if lit.negated {
                pre_neg.insert(atom);
            } else {
                pre_pos.insert(atom);
            }
        }
        let mut add = BTreeSet::new();
        let mut del = BTreeSet::new();
        for lit in &self.effects {
            let atom = ground(lit)?;
            if lit.negated {
                del.insert(atom);
            } else {
                add.insert(atom);
            }
        }
        del = del.difference(&add).cloned().collect();
        Ok(GroundAction {
            schema: self.name.clone(),
            binding: binding.to_vec(),
            pre_pos,
            pre_neg,
            add,
            del,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Domain {
    pub name: Ident,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<PredicateSchema>,
    pub actions: Vec<ActionSchema>,
}

impl Domain {
    /// Sorts the member collections into canonical (name) order and checks
    /// every domain invariant.
    pub fn validated(
        name: Ident,
        mut types: Vec<TypeDecl>,
        mut predicates: Vec<PredicateSchema>,
        mut actions: Vec<ActionSchema>,
    ) -> Result<Domain, ModelError> {
        types.sort();
        types.dedup();
        predicates.sort();
        actions.sort_by(|a, b| a.name.cmp(&b.name));
        let domain = Domain {
            name,
            types,
            predicates,
            actions,
        };
        domain.check()?;
        Ok(domain)
    }

    fn check(&self) -> Result<(), ModelError> {
        let hierarchy = TypeHierarchy::of(self)?;
        let mut type_names = BTreeSet::new();
        for t in &self.types {
            if !type_names.insert(&t.name) {
                return Err(ModelError::DuplicateName {
                    kind: "type",
                    name: t.name.clone(),
                });
            }
            if !hierarchy.is_declared(&t.parent) {
                return Err(ModelError::UnknownType(t.parent.clone()));
            }
        }
        let mut pred_names = BTreeMap::new();
        for p in &self.predicates {
            if pred_names.insert(p.name.clone(), p.arity()).is_some() {
                return Err(ModelError::DuplicateName {
                    kind: "predicate",
                    name: p.name.clone(),
                });
            }
            for param in &p.params {
                if !hierarchy.is_declared(&param.ty) {
                    return Err(ModelError::UnknownType(param.ty.clone()));
                }
            }
        }
        let mut action_names = BTreeSet::new();
        for a in &self.actions {
            if !action_names.insert(&a.name) {
                return Err(ModelError::DuplicateName {
                    kind: "action",
                    name: a.name.clone(),
                });
            }
            if pred_names.contains_key(&a.name) {
                return Err(ModelError::PredicateActionClash(a.name.clone()));
            }
            let mut vars = BTreeSet::new();
            for param in &a.params {
                if !vars.insert(&param.var) {
                    return Err(ModelError::DuplicateName {
                        kind: "parameter",
                        name: param.var.clone(),
                    });
                }
                if !hierarchy.is_declared(&param.ty) {
                    return Err(ModelError::UnknownType(param.ty.clone()));
                }
            }
            for set in [&a.preconditions, &a.effects] {
                for lit in set {
                    let arity = pred_names
                        .get(&lit.predicate)
                        .copied()
                        .ok_or_else(|| ModelError::UnknownPredicate(lit.predicate.clone()))?;
                    if lit.args.len() != arity {
                        return Err(ModelError::ArityMismatch {
                            predicate: lit.predicate.clone(),
                            expected: arity,
                            got: lit.args.len(),
                        });
                    }
                    for term in &lit.args {
                        if let Term::Var(v) = term {
                            if !vars.contains(v) {
                                return Err(ModelError::UnboundVariable {
                                    var: v.clone(),
                                    action: a.name.clone(),
                                });
                            }
                        }
                    }
                    if set.contains(&lit.complement()) {
                        return Err(ModelError::ComplementaryLiterals {
                            action: a.name.clone(),
                            literal: lit.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    pub fn predicate(&self, name: &str) -> Option<&PredicateSchema> {
        self.predicates.iter().find(|p| p.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ActionSchema> {
        self.actions.iter().find(|a| a.name == name)
    }

    /// True when any action carries a negated precondition literal.
    pub fn uses_negative_preconditions(&self) -> bool {
        self.actions
            .iter()
            .any(|a| a.preconditions.iter().any(|l| l.negated))
    }
}

/// Parent map of a domain's declared types, rooted at `object`.
#[derive(Debug, Clone)]
pub struct TypeHierarchy {
    parent: BTreeMap<Ident, Ident>,
}

impl TypeHierarchy {
    pub fn of(domain: &Domain) -> Result<TypeHierarchy, ModelError> {
        let parent: BTreeMap<Ident, Ident> = domain
            .types
            .iter()
            .map(|t| (t.name.clone(), t.parent.clone()))
            .collect();
        let h = TypeHierarchy { parent };
        for name in h.parent.keys() {
            // Walk to the root; a walk longer than the declared type count
            // means the parent relation loops.
            let mut cur = name.as_str();
            for _ in 0..=h.parent.len() {
                if cur == OBJECT_TYPE {
                    break;
                }
                match h.parent.get(cur) {
                    Some(p) => cur = p,
                    None => break,
                }
            }
            if cur != OBJECT_TYPE && h.parent.contains_key(cur) {
                return Err(ModelError::TypeCycle(name.clone()));
            }
        }
        Ok(h)
    }

    pub fn is_declared(&self, ty: &str) -> bool {
        ty == OBJECT_TYPE || self.parent.contains_key(ty)
    }

    /// True when `sub` equals `sup` or `sup` is an ancestor of `sub`.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        if sup == OBJECT_TYPE {
            return true;
        }
        let mut cur = sub;
        loop {
            if cur == sup {
                return true;
            }
            match self.parent.get(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectDecl {
    pub name: Ident,
    pub ty: Ident,
}

/// A fully instantiated predicate over object names.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAtom {
    pub predicate: Ident,
    pub args: Vec<Ident>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A closed-world state: atoms not present are false.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct State {
    pub atoms: BTreeSet<GroundAtom>,
}

impl State {
    pub fn new(atoms: impl IntoIterator<Item = GroundAtom>) -> State {
        State {
            atoms: atoms.into_iter().collect(),
        }
    }

    pub fn contains(&self, atom: &GroundAtom) -> bool {
        self.atoms.contains(atom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundAction {
    pub schema: Ident,
    pub binding: Vec<Ident>,
    pub pre_pos: BTreeSet<GroundAtom>,
    pub pre_neg: BTreeSet<GroundAtom>,
    pub add: BTreeSet<GroundAtom>,
    pub del: BTreeSet<GroundAtom>,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema)?;
        for a in &self.binding {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// True iff all positive preconditions hold and no negative one does.
pub fn is_applicable(state: &State, action: &GroundAction) -> bool {
    action.pre_pos.iter().all(|a| state.contains(a))
        && action.pre_neg.iter().all(|a| !state.contains(a))
}

/// Progresses `state` through `action`: `(atoms \ del) ∪ add`.
pub fn apply(state: &State, action: &GroundAction) -> Result<State, ModelError> {
    if !is_applicable(state, action) {
        return Err(ModelError::NotApplicable);
    }
    let mut atoms = state.atoms.clone();
    for d in &action.del {
        atoms.remove(d);
    }
    for a in &action.add {
        atoms.insert(a.clone());
    }
    Ok(State { atoms })
}

/// True iff the positive goal conjunction holds in `state`.
pub fn satisfies(state: &State, goal: &BTreeSet<GroundAtom>) -> bool {
    goal.iter().all(|g| state.contains(g))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub name: Ident,
    pub domain_name: Ident,
    pub objects: Vec<ObjectDecl>,
    pub init: State,
    pub goal: BTreeSet<GroundAtom>,
}

impl Problem {
    pub fn validated(
        name: Ident,
        domain_name: Ident,
        mut objects: Vec<ObjectDecl>,
        init: State,
        goal: BTreeSet<GroundAtom>,
        domain: &Domain,
    ) -> Result<Problem, ModelError> {
        objects.sort();
        let problem = Problem {
            name,
            domain_name,
            objects,
            init,
            goal,
        };
        problem.check(domain)?;
        Ok(problem)
    }

    fn check(&self, domain: &Domain) -> Result<(), ModelError> {
        if self.domain_name != domain.name {
            return Err(ModelError::DomainMismatch {
                expected: domain.name.clone(),
                got: self.domain_name.clone(),
            });
        }
        let hierarchy = TypeHierarchy::of(domain)?;
        let mut object_types = BTreeMap::new();
        for o in &self.objects {
            if object_types.insert(o.name.clone(), o.ty.clone()).is_some() {
                return Err(ModelError::DuplicateName {
                    kind: "object",
                    name: o.name.clone(),
                });
            }
            if !hierarchy.is_declared(&o.ty) {
                return Err(ModelError::UnknownType(o.ty.clone()));
            }
        }
        for atom in self.init.atoms.iter().chain(&self.goal) {
            check_atom(atom, domain, &hierarchy, &object_types)?;
        }
        Ok(())
    }

    pub fn object_types(&self) -> BTreeMap<Ident, Ident> {
        self.objects
            .iter()
            .map(|o| (o.name.clone(), o.ty.clone()))
            .collect()
    }
}

/// Checks one ground atom against a domain: known predicate, right arity,
/// declared and type-compatible arguments.
pub fn check_atom(
    atom: &GroundAtom,
    domain: &Domain,
    hierarchy: &TypeHierarchy,
    object_types: &BTreeMap<Ident, Ident>,
) -> Result<(), ModelError> {
    let schema = domain
        .predicate(&atom.predicate)
        .ok_or_else(|| ModelError::UnknownPredicate(atom.predicate.clone()))?;
    if atom.args.len() != schema.arity() {
        return Err(ModelError::ArityMismatch {
            predicate: atom.predicate.clone(),
            expected: schema.arity(),
            got: atom.args.len(),
        });
    }
    for (arg, param) in atom.args.iter().zip(&schema.params) {
        let ty = object_types
            .get(arg)
            .ok_or_else(|| ModelError::UnknownObject(arg.clone()))?;
        if !hierarchy.is_subtype(ty, &param.ty) {
            return Err(ModelError::TypeError {
                object: arg.clone(),
                actual: ty.clone(),
                expected: param.ty.clone(),
            });
        }
    }
    Ok(())
}

/// One step of a plan file: an action name plus its bound objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlanStep {
    pub action: Ident,
    pub args: Vec<Ident>,
}

impl fmt::Display for PlanStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.action)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }
}
