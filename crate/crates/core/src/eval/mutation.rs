use std::fmt;
use std::str::FromStr;

/// Known-unsound variants of individual rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mutation {
    /// Plus keeps only the left operand's sensitivity environment.
    DropPlusSenv,
    /// Plus combines metrics with meet instead of join.
    WrongJoin,
    /// Multiplication accepts a sensitive scalar operand.
    SkipScalarCheck,
    /// Conditionals accept a sensitive guard.
    SkipGuardCheck,
    /// Multiplication forgets to scale the sensitivity environment.
    WrongTimesScaling,
}

impl Mutation {
    pub const ALL: [Mutation; 5] = [
        Mutation::DropPlusSenv,
        Mutation::WrongJoin,
        Mutation::SkipScalarCheck,
        Mutation::SkipGuardCheck,
        Mutation::WrongTimesScaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::DropPlusSenv => "drop-plus-senv",
            Mutation::WrongJoin => "wrong-join",
            Mutation::SkipScalarCheck => "skip-scalar-check",
            Mutation::SkipGuardCheck => "skip-guard-check",
            Mutation::WrongTimesScaling => "wrong-times-scaling",
        }
    }
}

impl fmt::Display for Mutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mutation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Mutation::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mutation {s:?}"))
    }
}
