#![allow(dead_code)]

use std::path::PathBuf;

use proptest::prelude::*;
use sleec_core::syntax::*;
use sleec_core::{ConditionSnapshot, Value};

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../fixtures")
        .join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn scenario() -> Ruleset {
    parse_ruleset(&fixture("assistive.sleec")).expect("scenario fixture parses")
}

pub const BOOLS: [&str; 5] = ["b0", "b1", "b2", "b3", "b4"];
pub const CAPS: [&str; 5] = ["k0", "k1", "k2", "k3", "k4"];
pub const MEMBERS: [&str; 3] = ["A", "B", "C"];

/// Vocabulary shared by generated rulesets: five booleans, an integer `t`
/// in 0..10, a real `r` in 0..1, an enumeration `e`, derived `warm`, scopes
/// `Sa` and `Sb`.
pub fn vocabulary() -> Vocabulary {
    let mut monitored: Vec<MonitoredDecl> = BOOLS
        .iter()
        .map(|b| MonitoredDecl {
            name: b.to_string(),
            kind: ValueKind::Boolean,
        })
        .collect();
    monitored.push(MonitoredDecl {
        name: "t".into(),
        kind: ValueKind::Integer { min: 0, max: 10 },
    });
    monitored.push(MonitoredDecl {
        name: "r".into(),
        kind: ValueKind::Real { min: 0.0, max: 1.0 },
    });
    monitored.push(MonitoredDecl {
        name: "e".into(),
        kind: ValueKind::Enumerant {
            members: MEMBERS.iter().map(|m| m.to_string()).collect(),
        },
    });
    let cmp = |var: &str, op, value| {
        BoolExpr::Atom(Predicate::Compare {
            var: var.into(),
            op,
            value,
        })
    };
    Vocabulary {
        monitored,
        capabilities: CAPS.iter().map(|c| c.to_string()).collect(),
        derived: vec![NamedCondition {
            name: "warm".into(),
            condition: cmp("t", RelOp::Ge, Literal::Int(6)),
        }],
        scopes: vec![
            NamedCondition {
                name: "Sa".into(),
                condition: cmp("e", RelOp::Eq, Literal::Symbol("A".into())),
            },
            NamedCondition {
                name: "Sb".into(),
                condition: BoolExpr::Const(true),
            },
        ],
    }
}

fn rel_op() -> impl Strategy<Value = RelOp> {
    prop_oneof![
        Just(RelOp::Eq),
        Just(RelOp::Ne),
        Just(RelOp::Lt),
        Just(RelOp::Le),
        Just(RelOp::Gt),
        Just(RelOp::Ge),
    ]
}

pub fn predicate() -> impl Strategy<Value = Predicate> {
    prop_oneof![
        4 => prop::sample::select(BOOLS.to_vec()).prop_map(|b| Predicate::Name(b.into())),
        1 => Just(Predicate::Name("warm".into())),
        1 => (prop::sample::select(BOOLS.to_vec()), any::<bool>(), any::<bool>()).prop_map(|(b, eq, v)| {
            Predicate::Compare {
                var: b.into(),
                op: if eq { RelOp::Eq } else { RelOp::Ne },
                value: Literal::Bool(v),
            }
        }),
        2 => (rel_op(), 0i64..=10).prop_map(|(op, c)| Predicate::Compare {
            var: "t".into(),
            op,
            value: Literal::Int(c),
        }),
        1 => (rel_op(), prop::sample::select(vec![0.0, 0.25, 0.5, 1.0])).prop_map(|(op, c)| {
            Predicate::Compare {
                var: "r".into(),
                op,
                value: Literal::Real(c),
            }
        }),
        1 => (any::<bool>(), prop::sample::select(MEMBERS.to_vec())).prop_map(|(eq, m)| {
            Predicate::Compare {
                var: "e".into(),
                op: if eq { RelOp::Eq } else { RelOp::Ne },
                value: Literal::Symbol(m.into()),
            }
        }),
    ]
}

/// Conditions in the normalized shape the parser produces.
pub fn condition() -> impl Strategy<Value = Condition> {
    let leaf = prop_oneof![
        12 => predicate().prop_map(BoolExpr::Atom),
        1 => any::<bool>().prop_map(BoolExpr::Const),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(BoolExpr::not),
            prop::collection::vec(inner.clone(), 2..=3).prop_map(BoolExpr::and),
            prop::collection::vec(inner, 2..=3).prop_map(BoolExpr::or),
        ]
    })
}

pub fn duration() -> impl Strategy<Value = TimeDuration> {
    (
        prop::sample::select(vec![1u64, 5, 60, 1000]),
        prop::sample::select(TimeUnit::ALL.to_vec()),
    )
        .prop_map(|(a, u)| TimeDuration::new(a, u))
}

pub fn modifier() -> impl Strategy<Value = Modifier> {
    prop_oneof![
        6 => Just(Modifier::Immediate),
        1 => duration().prop_map(Modifier::After),
        1 => (duration(), prop::sample::select(CAPS.to_vec())).prop_map(|(deadline, f)| {
            Modifier::Within {
                deadline,
                fallback: f.into(),
            }
        }),
    ]
}

pub fn obligation() -> impl Strategy<Value = Obligation> {
    let atom = prop_oneof![
        8 => (prop::sample::select(CAPS.to_vec()), modifier()).prop_map(|(c, modifier)| {
            ObligationAtom {
                capability: c.into(),
                modifier,
            }
        }),
        1 => Just(ObligationAtom::plain(NOOP)),
    ];
    prop::collection::vec(atom, 1..=3).prop_map(|atoms| Obligation { atoms })
}

fn clause() -> impl Strategy<Value = Clause> {
    (condition(), obligation()).prop_map(|(condition, obligation)| Clause {
        condition,
        obligation,
    })
}

pub fn rule(id: String) -> impl Strategy<Value = Rule> {
    (
        prop::option::of(prop::sample::select(vec!["Sa", "Sb"])),
        clause(),
        prop::collection::vec(clause(), 0..=3),
    )
        .prop_map(move |(scope, base, hedges)| Rule {
            id: id.clone(),
            scope: scope.map(str::to_string),
            base,
            hedges: hedges
                .into_iter()
                .filter(|h| h.condition != BoolExpr::Const(false))
                .collect(),
        })
}

/// Rulesets over [`vocabulary`]; they may contain conflicts.
pub fn ruleset() -> impl Strategy<Value = Ruleset> {
    (1usize..=5)
        .prop_flat_map(|n| (0..n).map(|i| rule(format!("R{i}"))).collect::<Vec<_>>())
        .prop_map(|rules| Ruleset {
            vocabulary: vocabulary(),
            rules,
            invariants: vec![ObligationInvariant {
                name: "no_k0_k1".into(),
                expr: BoolExpr::not(BoolExpr::And(vec![
                    BoolExpr::Atom("k0".into()),
                    BoolExpr::Atom("k1".into()),
                ])),
            }],
        })
}

pub fn snapshot() -> impl Strategy<Value = ConditionSnapshot> {
    (
        prop::collection::vec(any::<bool>(), BOOLS.len()),
        0i64..=10,
        prop::sample::select(vec![0.0, 0.1, 0.25, 0.5, 0.75, 1.0]),
        prop::sample::select(MEMBERS.to_vec()),
    )
        .prop_map(|(bs, t, r, e)| {
            let mut snap = ConditionSnapshot::new();
            for (name, b) in BOOLS.iter().zip(bs) {
                snap.set(*name, b);
            }
            snap.set("t", Value::Int(t));
            snap.set("r", Value::Real(r));
            snap.set("e", Value::Enum(e.into()));
            snap
        })
}
