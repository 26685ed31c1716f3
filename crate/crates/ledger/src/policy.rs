//! Role and participant access rules with default deny.
//!
//! Evaluation order: participant rules, then role rules, then the implicit
//! self-read allowance, then deny. At each level a matching deny beats a
//! matching allow.

use serde::{Deserialize, Serialize};

use crate::identity::{Participant, Role};
use crate::tx::{Action, AssetClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Principal {
    Role(Role),
    Participant(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scope {
    /// Only when the subject is the actor.
    SelfOnly,
    Subject(String),
    Any,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Effect {
    Allow,
    Deny,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rule {
    pub principal: Principal,
    pub asset: AssetClass,
    pub action: Action,
    pub scope: Scope,
    pub effect: Effect,
}

impl Rule {
    fn matches_scope(&self, actor: &str, subject: &str) -> bool {
        match &self.scope {
            Scope::SelfOnly => actor == subject,
            Scope::Subject(s) => s == subject,
            Scope::Any => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Allow,
    Deny,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessPolicy {
    pub rules: Vec<Rule>,
}

impl AccessPolicy {
    /// Deny everything except self reads.
    pub fn empty() -> Self {
        AccessPolicy::default()
    }

    /// Rights of each participant kind in the health network.
    pub fn standard() -> Self {
        use Action::*;
        use AssetClass::*;
        let mut p = AccessPolicy::empty();
        for a in AssetClass::ALL {
            p.allow_role(Role::Hospital, a, Read, Scope::Any);
            p.allow_role(Role::MedicalExpert, a, Read, Scope::Any);
        }
        for a in [MedicalCondition, LabPathological, PredictionResult, Model] {
            p.allow_role(Role::Hospital, a, Write, Scope::Any);
        }
        for a in [MedicalCondition, LabPathological] {
            p.allow_role(Role::AlliedHealthProfessional, a, Write, Scope::Any);
            p.allow_role(Role::AlliedHealthProfessional, a, Read, Scope::Any);
        }
        p.allow_role(Role::Pharmacist, MedicalCondition, Write, Scope::Any);
        p.allow_role(Role::Pharmacist, MedicalCondition, Read, Scope::Any);
        p.allow_role(Role::Patient, SocialContextual, Write, Scope::SelfOnly);
        p.allow_role(Role::ExternalUser, RiskFactors, Write, Scope::SelfOnly);
        p.allow_role(Role::MedicalExpert, Model, Write, Scope::Any);
        p
    }

    pub fn push(&mut self, rule: Rule) {
        self.rules.push(rule);
    }

    pub fn allow_role(&mut self, role: Role, asset: AssetClass, action: Action, scope: Scope) {
        self.push(Rule { principal: Principal::Role(role), asset, action, scope, effect: Effect::Allow });
    }

    /// Lets `grantee` perform `action` on `subject`'s `asset`.
    pub fn grant(&mut self, grantee: &str, subject: &str, asset: AssetClass, action: Action) {
        self.push(Rule {
            principal: Principal::Participant(grantee.to_string()),
            asset,
            action,
            scope: Scope::Subject(subject.to_string()),
            effect: Effect::Allow,
        });
    }

    pub fn deny(&mut self, principal: Principal, asset: AssetClass, action: Action, scope: Scope) {
        self.push(Rule { principal, asset, action, scope, effect: Effect::Deny });
    }

    pub fn evaluate(&self, actor: &Participant, subject: &str, asset: AssetClass, action: Action) -> Decision {
        let level = |want_participant: bool| -> Option<Decision> {
            let mut allowed = false;
            for r in &self.rules {
                let principal_hit = match &r.principal {
                    Principal::Participant(id) => want_participant && *id == actor.id,
                    Principal::Role(role) => !want_participant && *role == actor.role,
                };
                if principal_hit && r.asset == asset && r.action == action && r.matches_scope(&actor.id, subject) {
                    match r.effect {
                        Effect::Deny => return Some(Decision::Deny),
                        Effect::Allow => allowed = true,
                    }
                }
            }
            allowed.then_some(Decision::Allow)
        };
        if let Some(d) = level(true).or_else(|| level(false)) {
            return d;
        }
        if action == Action::Read && actor.id == subject {
            Decision::Allow
        } else {
            Decision::Deny
        }
    }

    pub fn permits(&self, actor: &Participant, subject: &str, asset: AssetClass, action: Action) -> bool {
        self.evaluate(actor, subject, asset, action) == Decision::Allow
    }
}
